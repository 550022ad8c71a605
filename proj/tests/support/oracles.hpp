#pragma once

// Independent reference computations for the test suites. Nothing in here
// calls into the objective or solver code paths it is used to check.

#include <pcomp/behavior.hpp>
#include <pcomp/objective.hpp>
#include <pcomp/planner.hpp>
#include <pcomp/stage_solver.hpp>

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <random>
#include <vector>

namespace pcomp::oracle {

/// Plain-loop KL(mix || target) - mix . rbar with 0 ln 0 = 0; +inf on an
/// absolute-continuity failure.
double direct_stage_cost(const std::vector<std::vector<double>>& sources,
                         const std::vector<double>& target,
                         const std::vector<double>& rbar,
                         const std::vector<double>& alpha);

double direct_stage_cost(const StageInputs& inp, const Eigen::VectorXd& alpha);

struct GridResult
{
  bool feasible = false;
  Eigen::VectorXd alpha;
  double cost = 0.0;
  std::size_t evaluated = 0;
};

/// Exhaustive search of the simplex lattice with spacing `step`, discarding
/// points that violate indicator . mix >= 1 - epsilon. Points where lattice
/// edges cross the constraint boundary are searched as well.
GridResult grid_oracle(const StageInputs& inp,
                       const Eigen::VectorXd& indicator,
                       double epsilon,
                       double step);

/// Central differences of f at x with step h.
Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x,
                                 double h);
Eigen::MatrixXd central_jacobian(
  const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
  const Eigen::VectorXd& x,
  double h);

/// Random probability vector of length n; with `sparse`, some entries are 0.
std::vector<double> random_pmf(std::mt19937_64& rng, std::size_t n, bool sparse = false);

/// Random stage instance: S sources and a target over n successors, smoothed
/// with `smoothing`, rbar uniform in [-reward_scale, reward_scale].
StageInputs random_stage(std::mt19937_64& rng,
                         int S,
                         int n,
                         double smoothing = 0.05,
                         double reward_scale = 2.0);

/// Uniform draw in [0, 1).
double unit(std::mt19937_64& rng);

/// Random point on the simplex.
Eigen::VectorXd random_simplex(std::mt19937_64& rng, int S);

/// Random strongly connected graph on n states with out-degrees in
/// [1, max_degree] (a ring plus random chords).
std::shared_ptr<const LinkGraph> random_graph(std::mt19937_64& rng, int n, int max_degree);

/// Random behavior table over `graph`.
BehaviorTable random_table(std::mt19937_64& rng, const LinkGraph& graph, bool sparse = true);

/// Random plan problem with S sources, horizon T, random rewards and safe
/// sets whose epsilon keeps every stage feasible when `constrained`.
PlanProblem random_problem(std::mt19937_64& rng,
                           std::shared_ptr<const LinkGraph> graph,
                           int S,
                           int T,
                           bool constrained);

/// Full finite-horizon objective from `start` by enumerating every path:
/// sum over paths of pi(path) [ln(pi(path)/p(path)) - sum_k r_k(x_k)], where
/// rows[k-1][x] is the agent's row at step k from state x.
double path_objective(const PlanProblem& problem,
                      StateId start,
                      const std::vector<std::vector<std::vector<double>>>& rows);

/// Minimum of path_objective over every assignment of per-(k, state) weights
/// from the grid {0, step, ..., 1} (S = 2 only), covering the states that are
/// reachable from `start` at each step.
double exhaustive_plan_minimum(const PlanProblem& problem, StateId start, double step);

}  // namespace pcomp::oracle
