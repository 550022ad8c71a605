#pragma once

#include "pcomp/planner.hpp"

#include <optional>

namespace pcomp {

struct SourceChoice
{
  std::size_t index = 0;
  double cost = 0.0;
};

/// Cheapest single source among those meeting the chance constraint on
/// their own (up to `slack`); ties go to the lowest index. nullopt when none
/// does.
std::optional<SourceChoice> select_source(const StageInputs& inp,
                                          const Eigen::VectorXd& indicator,
                                          double epsilon,
                                          double slack = 0.0);

/// backward_plan with select_source in place of solve_stage. The
/// cost-to-go is propagated from the binary stage optima.
PolicyTable backward_plan_binary(const PlanProblem& problem,
                                 const std::optional<StateSet>& restrict_to = std::nullopt,
                                 const PlanOptions& opts = {});

PolicyTable backward_plan_binary_from(const PlanProblem& problem,
                                      StateId start,
                                      const PlanOptions& opts = {});

}  // namespace pcomp
