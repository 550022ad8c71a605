#pragma once

#include "pcomp/behavior.hpp"
#include "pcomp/planner.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace pcomp::sim {

struct ParkingLot
{
  std::string name;
  /// Link a car drives to reach the lot; it parks when it finishes this link.
  StateId link = 0;
  int capacity = 0;
};

struct Arrival
{
  int car_id = 0;
  long tick = 0;
};

struct RewardLevels
{
  double lot_available = 3.8;
  double lot_full = 0.0;
  double obstruction = -20.0;
};

struct ScenarioConfig
{
  std::shared_ptr<const LinkGraph> graph;
  StateId entry_state = 0;
  std::vector<ParkingLot> lots;
  StateSet obstructed_links;
  std::vector<Arrival> arrivals;
  /// Ticks needed to traverse each link.
  std::vector<int> link_travel_time;
  int planner_window = 5;

  /// Chance constraint applied at every planning step.
  StateSet safe_set;
  double epsilon = 1.0;
  /// Larger epsilons tried in order when a plan is infeasible.
  std::vector<double> epsilon_relax_schedule;

  std::uint64_t seed = 1;
  Algorithm algorithm = Algorithm::composed;
  long tick_budget = 2000;
  RewardLevels rewards;

  /// Raw source behaviors (smoothed when the scenario is prepared).
  std::vector<BehaviorTable> sources;
  /// Raw target behavior leading to each lot, aligned with `lots`.
  std::vector<BehaviorTable> lot_targets;
  std::size_t preferred_lot = 0;
  double smoothing = kDefaultSmoothing;
  PlanOptions plan_options;

  /// Throws ParameterError on inconsistent fields.
  void validate() const;
};

enum class CarStatus
{
  pending,
  driving,
  parked,
};

struct CarState
{
  int id = 0;
  CarStatus status = CarStatus::pending;
  StateId link = 0;
  long arrival_tick = 0;
  long enter_tick = -1;
  long park_tick = -1;
  /// Tick at which the current link traversal ends.
  long link_done_tick = -1;
  std::size_t target_lot = 0;
};

/// One planner output used to move a car, with its constraint check.
struct AuditRecord
{
  long tick = 0;
  int car_id = 0;
  StateId link = 0;
  double epsilon_used = 1.0;
  /// Mass the row puts outside the safe set.
  double unsafe_mass = 0.0;
};

struct SimState
{
  long clock = 0;
  std::vector<CarState> cars;  // ordered by car id
  std::vector<int> occupancy;  // per lot
  std::vector<double> reward;  // snapshot used by the last decision
  std::mt19937_64 rng;
  std::size_t retarget_cursor = 0;

  std::vector<std::pair<long, int>> unparked_curve;
  std::vector<AuditRecord> audit;
  std::vector<std::string> events;
};

struct CarOutcome
{
  int car_id = 0;
  long enter_tick = -1;
  std::optional<long> park_tick;
  std::optional<long> time_to_park;
};

struct Metrics
{
  std::vector<std::pair<long, int>> unparked_curve;
  std::vector<CarOutcome> cars;
  double attp_mean = 0.0;
  double attp_std = 0.0;
  int parked = 0;
  int total = 0;
  bool budget_exhausted = false;
  long final_tick = 0;

  std::size_t decisions = 0;
  std::size_t relaxations = 0;
  /// Largest unsafe mass over audited rows minus the epsilon they were
  /// planned with; <= 0 when every row met its constraint.
  double worst_constraint_excess = 0.0;
  /// Largest unsafe mass over audited rows.
  double max_unsafe_mass = 0.0;
  std::vector<AuditRecord> audit;
};

/// Sources, per-lot behavior sets and memoized planner outputs for one run.
class Scenario
{
public:
  explicit Scenario(ScenarioConfig cfg);

  const ScenarioConfig& config() const noexcept { return cfg_; }
  const LinkGraph& graph() const noexcept { return *cfg_.graph; }
  /// Behavior set tracking the route to lot `lot`.
  const std::shared_ptr<const BehaviorSet>& behaviors_for(std::size_t lot) const
  {
    return behaviors_.at(lot);
  }

  SimState initial_state() const;

  /// Planner output for a car on `link` heading to `lot` under `reward`.
  /// Returns the row and the epsilon it satisfies (after any relaxation).
  std::pair<ConditionalPMF, double> decide(StateId link,
                                           std::size_t lot,
                                           const std::vector<double>& reward,
                                           std::vector<std::string>& events);

private:
  ScenarioConfig cfg_;
  std::vector<std::shared_ptr<const BehaviorSet>> behaviors_;
  std::map<std::tuple<std::size_t, StateId, std::vector<double>>, std::pair<ConditionalPMF, double>>
    cache_;
};

/// Reward field: links of lots with space get lot_available, links of full
/// lots lot_full, obstructed links obstruction, everything else 0.
std::vector<double> update_rewards(const SimState& state, const ScenarioConfig& cfg);

/// Advances the simulation by one tick.
void step_sim(SimState& state, Scenario& scenario);

/// Runs until every car is parked or the tick budget runs out.
Metrics run_scenario(const ScenarioConfig& cfg);
Metrics collect_metrics(const SimState& state, const ScenarioConfig& cfg);

/// Deterministic routing behavior: from every state, all mass on the
/// successor with the fewest hops to `destination` (ties to the first listed),
/// never passing through `avoid`. States that cannot reach the destination
/// get a uniform row.
BehaviorTable route_behavior(const LinkGraph& graph, StateId destination, const StateSet& avoid);

/// Loads a scenario JSON file; relative file references resolve against the
/// file's directory.
ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir);

void write_unparked_csv(std::ostream& out, const Metrics& m);
void write_cars_csv(std::ostream& out, const Metrics& m);
void write_summary_csv(std::ostream& out, const Metrics& m);

}  // namespace pcomp::sim
