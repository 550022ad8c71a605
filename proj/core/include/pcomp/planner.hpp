#pragma once

#include "pcomp/behavior.hpp"
#include "pcomp/stage_solver.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace pcomp {

/// Which stage problem the recursion solves at every (k, state).
enum class Algorithm
{
  /// Convex combination of sources (continuous weights on the simplex).
  composed,
  /// One source per (k, state): the binary-weight baseline.
  binary,
};

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm algorithm);

/// Finite-horizon problem: behaviors plus one StageSpec per step k = 1..T.
struct PlanProblem
{
  std::shared_ptr<const BehaviorSet> behaviors;
  int horizon = 1;
  std::vector<StageSpec> stages;  // stages[k - 1] governs step k

  void validate() const;
};

struct PolicyEntry
{
  Eigen::VectorXd alpha;
  /// pi*(.|state) = mix(source rows, alpha).
  ConditionalPMF row;
  /// Optimal stage cost, i.e. the cost-to-go r_hat_{k-1}(state).
  double cost = 0.0;
  bool feasible = true;
  SolveStatus status = SolveStatus::converged;
};

/// Optimal weights, mixed rows and costs-to-go per (k, state). Entries exist
/// only for states the recursion covered at that step.
class PolicyTable
{
public:
  PolicyTable() = default;
  PolicyTable(int horizon, std::size_t num_states);

  int horizon() const noexcept { return horizon_; }
  std::size_t num_states() const noexcept { return num_states_; }

  /// k in 1..horizon.
  const PolicyEntry* find(int k, StateId s) const;
  const PolicyEntry& at(int k, StateId s) const;
  bool contains(int k, StateId s) const { return find(k, s) != nullptr; }
  void set(int k, StateId s, PolicyEntry entry);

  /// Total planned cost from `start`: r_hat_0(start).
  double value(StateId start) const { return at(1, start).cost; }
  /// Number of populated entries.
  std::size_t size() const noexcept;

private:
  int horizon_ = 0;
  std::size_t num_states_ = 0;
  std::vector<std::optional<PolicyEntry>> entries_;
};

struct PlanOptions
{
  SolverConfig solver;
  /// Worker threads for the per-state solves within one step.
  int threads = 1;
};

/// Backward recursion: r_hat_T = 0; for k = T..1, rbar_k = r_k - r_hat_k on
/// successors, solve the stage problem per conditioning state, record the
/// weights, the mixed row and r_hat_{k-1} = optimal stage cost.
///
/// With `restrict_to`, step k covers the states of `restrict_to` whose
/// successors all have a known r_hat_k (every state at k = T), so every
/// populated entry equals the unrestricted one. Throws InfeasiblePlanError
/// naming the first infeasible (k, state).
PolicyTable backward_plan(const PlanProblem& problem,
                          const std::optional<StateSet>& restrict_to = std::nullopt,
                          const PlanOptions& opts = {});

/// Same recursion covering at step k only the states within k - 1 hops of
/// `start`, which is exactly what r_hat_0(start) depends on.
PolicyTable backward_plan_from(const PlanProblem& problem,
                               StateId start,
                               const PlanOptions& opts = {});

/// States reachable from `start` in at most `depth` hops, start included.
StateSet reachable_states(const LinkGraph& graph, StateId start, int depth);

/// Hop distance from `start` for every state within `depth`; -1 elsewhere.
std::vector<int> hop_distances(const LinkGraph& graph, StateId start, int depth);

/// Behaviors plus the stage snapshot repeated over a receding window.
struct PlanTemplate
{
  std::shared_ptr<const BehaviorSet> behaviors;
  StageSpec stage;
};

/// Plans over `window` steps from `current` and returns pi*(.|current) of the
/// first step.
ConditionalPMF receding_step(const PlanTemplate& tmpl,
                             StateId current,
                             int window,
                             Algorithm algorithm = Algorithm::composed,
                             const PlanOptions& opts = {});

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
double unit_draw(std::mt19937_64& rng);

/// Draws a successor of row.origin with probability equal to its mass.
StateId sample_next(const LinkGraph& graph, const ConditionalPMF& row, std::mt19937_64& rng);

}  // namespace pcomp
