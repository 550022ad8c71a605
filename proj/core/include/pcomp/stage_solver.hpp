#pragma once

#include "pcomp/behavior.hpp"
#include "pcomp/objective.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>

namespace pcomp {

struct SolverConfig
{
  /// Projected-gradient stationarity tolerance.
  double tol_opt = 1e-8;
  int max_iters = 10'000;
  /// Slack allowed on the simplex and chance constraints.
  double tol_feas = 1e-9;

  void validate() const;
};

enum class SolveStatus
{
  converged,
  /// Iteration budget exhausted; alpha_star is the best iterate.
  iteration_limit,
  /// No source meets the chance constraint on its own, so no weights can.
  infeasible,
};

struct StageSolution
{
  Eigen::VectorXd alpha_star;  // empty when infeasible
  double cost_star = 0.0;
  bool feasible = false;
  int iterations = 0;
  SolveStatus status = SolveStatus::infeasible;
  /// Final projected-gradient residual.
  double residual = 0.0;
};

/// Indicator over the successors of `origin` of membership in `safe_set`.
Eigen::VectorXd safe_indicator(const LinkGraph& graph, StateId origin, const StateSet& safe_set);

/// Mass each source puts on the safe successors: sources * indicator.
Eigen::VectorXd safe_masses(const StageInputs& inp, const Eigen::VectorXd& indicator);

/// Stage problem is feasible iff some source alone puts at least
/// 1 - epsilon - slack on the safe set.
bool check_feasibility(const Eigen::VectorXd& masses, double epsilon, double slack = 0.0);
bool check_feasibility(const LinkGraph& graph,
                       std::span<const ConditionalPMF> source_rows,
                       const StateSet& safe_set,
                       double epsilon,
                       double slack = 0.0);

/// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& y);

/// Euclidean projection onto {alpha in simplex : masses . alpha >= threshold}.
/// Returns nullopt when that polytope is empty. The returned point satisfies
/// the halfspace constraint exactly in floating point.
std::optional<Eigen::VectorXd> project_feasible(
  const Eigen::VectorXd& y, const Eigen::VectorXd& masses, double threshold);

/// Minimizes stage_cost over the simplex intersected with the chance
/// constraint indicator . mix >= 1 - epsilon, with cfg.tol_feas of slack on
/// the constraint. Deterministic.
StageSolution solve_stage(
  const StageInputs& inp,
  const Eigen::VectorXd& indicator,
  double epsilon,
  const SolverConfig& cfg = {});

}  // namespace pcomp
