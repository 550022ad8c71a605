#pragma once

#include "pcomp/planner.hpp"

#include <functional>
#include <vector>

namespace pcomp::detail {

/// Per-(k, state) stage optimizer plugged into the backward recursion.
using StageStrategy =
  std::function<PolicyEntry(const StageInputs&, const Eigen::VectorXd& indicator, double epsilon)>;

/// Scope of step k as a predicate over states; `known` flags the states whose
/// r_hat_k is available.
using ScopeFn = std::function<bool(int k, StateId s, const std::vector<char>& known)>;

PolicyTable run_recursion(const PlanProblem& problem,
                          const ScopeFn& in_scope,
                          const StageStrategy& strategy,
                          const PlanOptions& opts);

ScopeFn restricted_scope(const PlanProblem& problem, const std::optional<StateSet>& restrict_to);
ScopeFn layered_scope(const PlanProblem& problem, StateId start);

}  // namespace pcomp::detail
