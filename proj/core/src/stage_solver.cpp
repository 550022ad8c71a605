#include "pcomp/stage_solver.hpp"

#include "pcomp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace pcomp {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kBacktrack = 0.5;
constexpr int kMaxBacktracks = 60;

}  // namespace

void SolverConfig::validate() const
{
  if (!(tol_opt > 0.0) || !(tol_feas > 0.0))
    throw ParameterError("solver tolerances must be positive");
  if (max_iters < 1)
    throw ParameterError("solver needs at least one iteration");
}

Eigen::VectorXd safe_indicator(const LinkGraph& graph, StateId origin, const StateSet& safe_set)
{
  const auto succ = graph.successors(origin);
  Eigen::VectorXd ind(static_cast<Eigen::Index>(succ.size()));
  for (std::size_t j = 0; j < succ.size(); ++j)
    ind[static_cast<Eigen::Index>(j)] = safe_set.contains(succ[j]) ? 1.0 : 0.0;
  return ind;
}

Eigen::VectorXd safe_masses(const StageInputs& inp, const Eigen::VectorXd& indicator)
{
  if (indicator.size() != inp.width())
    throw ParameterError("safe-set indicator is not aligned with the successor list");
  return inp.sources * indicator;
}

bool check_feasibility(const Eigen::VectorXd& masses, double epsilon, double slack)
{
  if (masses.size() == 0)
    return false;
  return masses.maxCoeff() >= 1.0 - epsilon - slack;
}

bool check_feasibility(const LinkGraph& graph,
                       std::span<const ConditionalPMF> source_rows,
                       const StateSet& safe_set,
                       double epsilon,
                       double slack)
{
  Eigen::VectorXd masses(static_cast<Eigen::Index>(source_rows.size()));
  for (std::size_t i = 0; i < source_rows.size(); ++i)
    masses[static_cast<Eigen::Index>(i)] = support_mass(graph, source_rows[i], safe_set);
  return check_feasibility(masses, epsilon, slack);
}

//==============================================================================
Eigen::VectorXd project_simplex(const Eigen::VectorXd& y)
{
  const auto n = y.size();
  std::vector<double> u(y.data(), y.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());

  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumsum += u[static_cast<std::size_t>(j)];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - t > 0.0)
      theta = t;
  }
  return (y.array() - theta).max(0.0).matrix();
}

std::optional<Eigen::VectorXd> project_feasible(
  const Eigen::VectorXd& y, const Eigen::VectorXd& masses, double threshold)
{
  if (masses.size() != y.size())
    throw ParameterError("project_feasible: size mismatch");
  Eigen::Index best = 0;
  if (masses.size() == 0 || masses.maxCoeff(&best) < threshold)
    return std::nullopt;

  Eigen::VectorXd x = project_simplex(y);
  if (masses.dot(x) >= threshold)
    return x;

  // The halfspace is active: alpha(mu) = P_simplex(y + mu * masses) with the
  // multiplier mu > 0 chosen so that masses . alpha(mu) = threshold. The map
  // mu -> masses . alpha(mu) is nondecreasing, so bracket and bisect, always
  // keeping the upper end feasible.
  auto at = [&](double mu) { return project_simplex(y + mu * masses); };
  double lo = 0.0;
  double hi = 1.0;
  Eigen::VectorXd x_hi = at(hi);
  while (masses.dot(x_hi) < threshold) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e15) {
      Eigen::VectorXd vertex = Eigen::VectorXd::Zero(y.size());
      vertex[best] = 1.0;
      return vertex;
    }
    x_hi = at(hi);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    Eigen::VectorXd x_mid = at(mid);
    if (masses.dot(x_mid) >= threshold) {
      hi = mid;
      x_hi = std::move(x_mid);
    } else {
      lo = mid;
    }
  }
  return x_hi;
}

//==============================================================================
namespace {

// Mixture positive wherever some source is positive.
bool covers_support(const Eigen::VectorXd& alpha, const StageInputs& inp)
{
  const Eigen::VectorXd m = mixture(alpha, inp);
  for (Eigen::Index x = 0; x < m.size(); ++x)
    if (!(m[x] > 0.0) && (inp.sources.col(x).array() > 0.0).any())
      return false;
  return true;
}

}  // namespace

StageSolution solve_stage(
  const StageInputs& inp,
  const Eigen::VectorXd& indicator,
  double epsilon,
  const SolverConfig& cfg)
{
  cfg.validate();
  inp.check_shapes();
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw ParameterError("epsilon must lie in [0, 1]");

  const Eigen::VectorXd masses = safe_masses(inp, indicator);
  const auto S = inp.num_sources();

  StageSolution sol;
  if (!check_feasibility(masses, epsilon, cfg.tol_feas))
    return sol;
  // Within the slack but short of 1 - epsilon, the best source's own mass
  // becomes the target.
  const double threshold = std::min(1.0 - epsilon, masses.maxCoeff());

  // Best feasible vertex: the solver never returns anything worse.
  Eigen::Index best_vertex = -1;
  ExtendedReal best_vertex_cost = ExtendedReal::infinity();
  for (Eigen::Index i = 0; i < S; ++i) {
    if (masses[i] < threshold)
      continue;
    const auto c = stage_cost(Eigen::VectorXd::Unit(S, i), inp);
    if (best_vertex < 0 || c < best_vertex_cost) {
      best_vertex = i;
      best_vertex_cost = c;
    }
  }
  const Eigen::VectorXd vertex = Eigen::VectorXd::Unit(S, best_vertex);

  sol.feasible = true;
  sol.status = SolveStatus::converged;
  if (S == 1) {
    sol.alpha_star = vertex;
    sol.cost_star = best_vertex_cost.value();
    return sol;
  }

  auto project = [&](const Eigen::VectorXd& y) { return *project_feasible(y, masses, threshold); };

  Eigen::VectorXd x = vertex;
  if (!covers_support(x, inp)) {
    // Centroid of the feasible vertices, pushed halfway to the largest
    // feasible step toward uniform weights.
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(S);
    for (Eigen::Index i = 0; i < S; ++i)
      if (masses[i] >= threshold)
        centroid[i] = 1.0;
    centroid /= centroid.sum();
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(S, 1.0 / static_cast<double>(S));
    const double mc = masses.dot(centroid);
    const double mu = masses.dot(uniform);
    const double t = mu >= threshold ? 1.0 : 0.5 * (mc - threshold) / (mc - mu);
    x = (1.0 - t) * centroid + t * uniform;
    if (!covers_support(x, inp)) {
      sol.alpha_star = vertex;
      sol.cost_star = best_vertex_cost.as_double();
      return sol;
    }
  }

  double f = stage_cost(x, inp).value();
  Eigen::VectorXd g = stage_gradient(x, inp);
  const double lipschitz = std::max(stage_hessian(x, inp).trace(), 1e-12);
  double step = 1.0 / lipschitz;

  sol.status = SolveStatus::iteration_limit;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    sol.residual = (x - project(x - g / lipschitz)).norm() * lipschitz;
    if (sol.residual <= cfg.tol_opt) {
      sol.status = SolveStatus::converged;
      break;
    }

    bool accepted = false;
    Eigen::VectorXd xn;
    double fn = f;
    double t = step;
    for (int ls = 0; ls < kMaxBacktracks; ++ls, t *= kBacktrack) {
      xn = project(x - t * g);
      if (!covers_support(xn, inp))
        continue;
      fn = stage_cost(xn, inp).value();
      if (fn <= f + kArmijo * g.dot(xn - x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No representable decrease along the projected arc.
      sol.status = SolveStatus::converged;
      break;
    }

    Eigen::VectorXd gn = stage_gradient(xn, inp);
    const Eigen::VectorXd ds = xn - x;
    const double sy = ds.dot(gn - g);
    step = sy > 0.0 ? std::clamp(ds.squaredNorm() / sy, 1e-12, 1e12) : 1.0 / lipschitz;

    x = std::move(xn);
    f = fn;
    g = std::move(gn);
  }
  sol.iterations = it;

  if (best_vertex_cost.as_double() < f) {
    x = vertex;
    f = best_vertex_cost.value();
  }
  sol.alpha_star = std::move(x);
  sol.cost_star = f;
  return sol;
}

}  // namespace pcomp
