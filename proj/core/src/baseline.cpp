#include "pcomp/baseline.hpp"

#include "pcomp/errors.hpp"
#include "recursion.hpp"

namespace pcomp {

std::optional<SourceChoice> select_source(const StageInputs& inp,
                                          const Eigen::VectorXd& indicator,
                                          double epsilon,
                                          double slack)
{
  inp.check_shapes();
  const Eigen::VectorXd masses = safe_masses(inp, indicator);
  const auto S = inp.num_sources();

  std::optional<SourceChoice> best;
  ExtendedReal best_cost = ExtendedReal::infinity();
  for (Eigen::Index i = 0; i < S; ++i) {
    if (masses[i] < 1.0 - epsilon - slack)
      continue;
    const auto c = stage_cost(Eigen::VectorXd::Unit(S, i), inp);
    if (!best || c < best_cost) {
      best = SourceChoice{static_cast<std::size_t>(i), c.as_double()};
      best_cost = c;
    }
  }
  return best;
}

namespace {

detail::StageStrategy binary_strategy(double slack)
{
  return [slack](const StageInputs& inp, const Eigen::VectorXd& indicator, double epsilon) {
    PolicyEntry entry;
    const auto choice = select_source(inp, indicator, epsilon, slack);
    if (!choice) {
      entry.feasible = false;
      entry.status = SolveStatus::infeasible;
      return entry;
    }
    entry.alpha = Eigen::VectorXd::Unit(inp.num_sources(), static_cast<Eigen::Index>(choice->index));
    entry.cost = choice->cost;
    return entry;
  };
}

}  // namespace

PolicyTable backward_plan_binary(const PlanProblem& problem,
                                 const std::optional<StateSet>& restrict_to,
                                 const PlanOptions& opts)
{
  problem.validate();
  return detail::run_recursion(
    problem, detail::restricted_scope(problem, restrict_to), binary_strategy(opts.solver.tol_feas), opts);
}

PolicyTable backward_plan_binary_from(const PlanProblem& problem,
                                      StateId start,
                                      const PlanOptions& opts)
{
  problem.validate();
  return detail::run_recursion(problem, detail::layered_scope(problem, start), binary_strategy(opts.solver.tol_feas), opts);
}

}  // namespace pcomp
