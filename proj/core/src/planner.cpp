#include "pcomp/planner.hpp"

#include "pcomp/baseline.hpp"
#include "pcomp/errors.hpp"
#include "recursion.hpp"

#include <algorithm>
#include <deque>
#include <exception>
#include <thread>

namespace pcomp {

Algorithm parse_algorithm(std::string_view name)
{
  if (name == "composed")
    return Algorithm::composed;
  if (name == "binary")
    return Algorithm::binary;
  throw ParameterError("unknown algorithm '" + std::string(name) + "' (composed|binary)");
}

std::string_view to_string(Algorithm algorithm)
{
  return algorithm == Algorithm::composed ? "composed" : "binary";
}

void PlanProblem::validate() const
{
  if (!behaviors)
    throw ParameterError("plan problem needs behaviors");
  if (horizon < 1)
    throw ParameterError("horizon must be at least 1");
  if (stages.size() != static_cast<std::size_t>(horizon))
    throw ParameterError("one stage spec per step is required");
  for (const auto& stage : stages)
    stage.validate(behaviors->graph());
}

//==============================================================================
PolicyTable::PolicyTable(int horizon, std::size_t num_states)
  : horizon_(horizon),
    num_states_(num_states),
    entries_(static_cast<std::size_t>(horizon) * num_states)
{
}

const PolicyEntry* PolicyTable::find(int k, StateId s) const
{
  if (k < 1 || k > horizon_ || s >= num_states_)
    return nullptr;
  const auto& e = entries_[static_cast<std::size_t>(k - 1) * num_states_ + s];
  return e ? &*e : nullptr;
}

const PolicyEntry& PolicyTable::at(int k, StateId s) const
{
  if (const auto* e = find(k, s))
    return *e;
  throw ParameterError(
    "policy table has no entry for step " + std::to_string(k) + ", state " + std::to_string(s));
}

void PolicyTable::set(int k, StateId s, PolicyEntry entry)
{
  if (k < 1 || k > horizon_ || s >= num_states_)
    throw ParameterError("policy table index out of range");
  entries_[static_cast<std::size_t>(k - 1) * num_states_ + s] = std::move(entry);
}

std::size_t PolicyTable::size() const noexcept
{
  return static_cast<std::size_t>(
    std::count_if(entries_.begin(), entries_.end(), [](const auto& e) { return e.has_value(); }));
}

//==============================================================================
namespace detail {

namespace {

bool successors_known(const LinkGraph& graph, StateId s, const std::vector<char>& known)
{
  for (auto n : graph.successors(s))
    if (!known[n])
      return false;
  return true;
}

}  // namespace

ScopeFn restricted_scope(const PlanProblem& problem, const std::optional<StateSet>& restrict_to)
{
  if (!restrict_to)
    return [](int, StateId, const std::vector<char>&) { return true; };
  const auto* graph = &problem.behaviors->graph();
  return [graph, scope = *restrict_to](int, StateId s, const std::vector<char>& known) {
    return scope.contains(s) && successors_known(*graph, s, known);
  };
}

ScopeFn layered_scope(const PlanProblem& problem, StateId start)
{
  const auto* graph = &problem.behaviors->graph();
  auto dist = hop_distances(*graph, start, problem.horizon - 1);
  return [graph, dist = std::move(dist)](int k, StateId s, const std::vector<char>& known) {
    return dist[s] >= 0 && dist[s] <= k - 1 && successors_known(*graph, s, known);
  };
}

PolicyTable run_recursion(const PlanProblem& problem,
                          const ScopeFn& in_scope,
                          const StageStrategy& strategy,
                          const PlanOptions& opts)
{
  problem.validate();
  opts.solver.validate();
  const BehaviorSet& behaviors = *problem.behaviors;
  const LinkGraph& graph = behaviors.graph();
  const auto n_states = graph.size();

  PolicyTable table(problem.horizon, n_states);
  std::vector<double> rhat(n_states, 0.0);
  std::vector<char> known(n_states, 1);

  for (int k = problem.horizon; k >= 1; --k) {
    const StageSpec& stage = problem.stages[static_cast<std::size_t>(k - 1)];

    std::vector<StateId> scope;
    for (StateId s = 0; s < n_states; ++s)
      if (in_scope(k, s, known))
        scope.push_back(s);

    std::vector<std::optional<PolicyEntry>> results(scope.size());
    std::vector<std::exception_ptr> errors(scope.size());

    auto solve_one = [&](std::size_t slot) {
      try {
        const StateId s = scope[slot];
        const auto succ = graph.successors(s);
        std::vector<double> rbar(succ.size());
        for (std::size_t j = 0; j < succ.size(); ++j)
          rbar[j] = stage.reward[succ[j]] - rhat[succ[j]];
        const auto rows = behaviors.source_rows(s);
        const auto inp = StageInputs::from_rows(rows, behaviors.target()[s], rbar);
        PolicyEntry entry = strategy(inp, safe_indicator(graph, s, stage.safe_set), stage.epsilon);
        if (entry.feasible) {
          const Eigen::VectorXd m = mixture(entry.alpha, inp);
          entry.row = ConditionalPMF{s, std::vector<double>(m.data(), m.data() + m.size())};
        }
        results[slot] = std::move(entry);
      } catch (...) {
        errors[slot] = std::current_exception();
      }
    };

    const auto workers = static_cast<std::size_t>(std::max(1, opts.threads));
    if (workers == 1 || scope.size() < 2) {
      for (std::size_t slot = 0; slot < scope.size(); ++slot)
        solve_one(slot);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < std::min(workers, scope.size()); ++w)
        pool.emplace_back([&, w] {
          for (std::size_t slot = w; slot < scope.size(); slot += workers)
            solve_one(slot);
        });
    }

    std::vector<double> next_rhat(n_states, 0.0);
    std::vector<char> next_known(n_states, 0);
    for (std::size_t slot = 0; slot < scope.size(); ++slot) {
      const StateId s = scope[slot];
      if (errors[slot])
        std::rethrow_exception(errors[slot]);
      if (!results[slot]->feasible)
        throw InfeasiblePlanError(k, s, graph.name(s));
      next_rhat[s] = results[slot]->cost;
      next_known[s] = 1;
      table.set(k, s, std::move(*results[slot]));
    }
    rhat = std::move(next_rhat);
    known = std::move(next_known);
  }
  return table;
}

}  // namespace detail

//==============================================================================
namespace {

detail::StageStrategy composed_strategy(const SolverConfig& cfg)
{
  return [cfg](const StageInputs& inp, const Eigen::VectorXd& indicator, double epsilon) {
    const auto sol = solve_stage(inp, indicator, epsilon, cfg);
    PolicyEntry entry;
    entry.feasible = sol.feasible;
    entry.status = sol.status;
    entry.alpha = sol.alpha_star;
    entry.cost = sol.cost_star;
    return entry;
  };
}

}  // namespace

PolicyTable backward_plan(const PlanProblem& problem,
                          const std::optional<StateSet>& restrict_to,
                          const PlanOptions& opts)
{
  problem.validate();
  return detail::run_recursion(
    problem, detail::restricted_scope(problem, restrict_to), composed_strategy(opts.solver), opts);
}

PolicyTable backward_plan_from(const PlanProblem& problem, StateId start, const PlanOptions& opts)
{
  problem.validate();
  return detail::run_recursion(
    problem, detail::layered_scope(problem, start), composed_strategy(opts.solver), opts);
}

//==============================================================================
std::vector<int> hop_distances(const LinkGraph& graph, StateId start, int depth)
{
  if (start >= graph.size())
    throw ParameterError("start state out of range");
  if (depth < 0)
    throw ParameterError("depth must be nonnegative");

  std::vector<int> dist(graph.size(), -1);
  std::deque<StateId> frontier{start};
  dist[start] = 0;
  while (!frontier.empty()) {
    const StateId s = frontier.front();
    frontier.pop_front();
    if (dist[s] == depth)
      continue;
    for (auto n : graph.successors(s))
      if (dist[n] < 0) {
        dist[n] = dist[s] + 1;
        frontier.push_back(n);
      }
  }
  return dist;
}

StateSet reachable_states(const LinkGraph& graph, StateId start, int depth)
{
  const auto dist = hop_distances(graph, start, depth);
  StateSet set(graph.size());
  for (StateId s = 0; s < dist.size(); ++s)
    if (dist[s] >= 0)
      set.insert(s);
  return set;
}

ConditionalPMF receding_step(const PlanTemplate& tmpl,
                             StateId current,
                             int window,
                             Algorithm algorithm,
                             const PlanOptions& opts)
{
  if (window < 1)
    throw ParameterError("receding window must be at least 1");
  PlanProblem problem{tmpl.behaviors, window,
                      std::vector<StageSpec>(static_cast<std::size_t>(window), tmpl.stage)};
  const auto table = algorithm == Algorithm::composed
                       ? backward_plan_from(problem, current, opts)
                       : backward_plan_binary_from(problem, current, opts);
  return table.at(1, current).row;
}

//==============================================================================
double unit_draw(std::mt19937_64& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

StateId sample_next(const LinkGraph& graph, const ConditionalPMF& row, std::mt19937_64& rng)
{
  const auto succ = graph.successors(row.origin);
  if (succ.size() != row.probs.size())
    throw ParameterError("row does not match the successor list of its origin");

  const double u = unit_draw(rng);
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < succ.size(); ++j) {
    if (row.probs[j] <= 0.0)
      continue;
    last_positive = j;
    cumulative += row.probs[j];
    if (u < cumulative)
      return succ[j];
  }
  // Rounding left u above the accumulated mass.
  return succ[last_positive];
}

}  // namespace pcomp
