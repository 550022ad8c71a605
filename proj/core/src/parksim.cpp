#include "pcomp/parksim.hpp"

#include "pcomp/errors.hpp"
#include "pcomp/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>

namespace pcomp::sim {

void ScenarioConfig::validate() const
{
  if (!graph)
    throw ParameterError("scenario needs a graph");
  const auto n = graph->size();
  if (entry_state >= n)
    throw ParameterError("entry state is not in the graph");
  if (lots.empty())
    throw ParameterError("scenario needs at least one parking lot");
  for (const auto& lot : lots) {
    if (lot.link >= n)
      throw ParameterError("lot '" + lot.name + "' is adjacent to an unknown link");
    if (lot.capacity < 0)
      throw ParameterError("lot '" + lot.name + "' has negative capacity");
  }
  for (std::size_t i = 1; i < arrivals.size(); ++i) {
    if (arrivals[i].tick < arrivals[i - 1].tick)
      throw ParameterError("arrival times must be nondecreasing");
    if (arrivals[i].car_id <= arrivals[i - 1].car_id)
      throw ParameterError("car ids must increase with arrival order");
  }
  if (link_travel_time.size() != n)
    throw ParameterError("travel time needed for every link");
  for (int t : link_travel_time)
    if (t < 1)
      throw ParameterError("link travel times must be at least one tick");
  if (planner_window < 1)
    throw ParameterError("planner window must be at least 1");
  if (safe_set.universe() != n || obstructed_links.universe() != n)
    throw ParameterError("state sets must be defined over the graph");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw ParameterError("epsilon must lie in [0, 1]");
  for (double e : epsilon_relax_schedule)
    if (!(e >= 0.0 && e <= 1.0))
      throw ParameterError("relaxation schedule entries must lie in [0, 1]");
  if (sources.empty())
    throw ParameterError("scenario needs at least one source");
  if (lot_targets.size() != lots.size())
    throw ParameterError("one target behavior per lot is required");
  if (preferred_lot >= lots.size())
    throw ParameterError("preferred lot out of range");
  if (tick_budget < 0)
    throw ParameterError("tick budget must be nonnegative");
}

//==============================================================================
Scenario::Scenario(ScenarioConfig cfg) : cfg_(std::move(cfg))
{
  cfg_.validate();
  for (const auto& target : cfg_.lot_targets)
    behaviors_.push_back(std::make_shared<const BehaviorSet>(
      BehaviorSet::make(cfg_.graph, cfg_.sources, target, cfg_.smoothing)));
}

SimState Scenario::initial_state() const
{
  SimState state;
  state.rng.seed(cfg_.seed);
  state.occupancy.assign(cfg_.lots.size(), 0);
  for (const auto& a : cfg_.arrivals) {
    CarState car;
    car.id = a.car_id;
    car.arrival_tick = a.tick;
    car.link = cfg_.entry_state;
    car.target_lot = cfg_.preferred_lot;
    state.cars.push_back(car);
  }
  state.reward = update_rewards(state, cfg_);
  return state;
}

std::pair<ConditionalPMF, double> Scenario::decide(StateId link,
                                                   std::size_t lot,
                                                   const std::vector<double>& reward,
                                                   std::vector<std::string>& events)
{
  auto key = std::make_tuple(lot, link, reward);
  if (auto it = cache_.find(key); it != cache_.end())
    return it->second;

  std::vector<double> epsilons{cfg_.epsilon};
  for (double e : cfg_.epsilon_relax_schedule)
    if (e > epsilons.back())
      epsilons.push_back(e);
  if (epsilons.back() < 1.0)
    epsilons.push_back(1.0);

  for (std::size_t attempt = 0; attempt < epsilons.size(); ++attempt) {
    PlanTemplate tmpl{behaviors_.at(lot), StageSpec{reward, cfg_.safe_set, epsilons[attempt]}};
    try {
      auto row = receding_step(tmpl, link, cfg_.planner_window, cfg_.algorithm, cfg_.plan_options);
      auto result = std::make_pair(std::move(row), epsilons[attempt]);
      cache_.emplace(std::move(key), result);
      return result;
    } catch (const InfeasiblePlanError& e) {
      events.push_back(
        "infeasible plan from '" + graph().name(link) + "' at epsilon " +
        std::to_string(epsilons[attempt]) + ": " + e.what());
    }
  }
  // epsilon = 1 makes every stage feasible, so the loop always returns.
  throw InfeasiblePlanError(1, link, graph().name(link));
}

//==============================================================================
std::vector<double> update_rewards(const SimState& state, const ScenarioConfig& cfg)
{
  std::vector<double> reward(cfg.graph->size(), 0.0);
  for (std::size_t i = 0; i < cfg.lots.size(); ++i) {
    const bool space = state.occupancy.at(i) < cfg.lots[i].capacity;
    reward[cfg.lots[i].link] = space ? cfg.rewards.lot_available : cfg.rewards.lot_full;
  }
  for (auto s : cfg.obstructed_links.members())
    reward[s] = cfg.rewards.obstruction;
  return reward;
}

namespace {

std::optional<std::size_t> lot_with_space_at(const SimState& state,
                                             const ScenarioConfig& cfg,
                                             StateId link)
{
  for (std::size_t i = 0; i < cfg.lots.size(); ++i)
    if (cfg.lots[i].link == link && state.occupancy[i] < cfg.lots[i].capacity)
      return i;
  return std::nullopt;
}

// Next lot with space after the cursor, skipping `current`.
std::optional<std::size_t> next_lot(SimState& state, const ScenarioConfig& cfg, std::size_t current)
{
  const auto n = cfg.lots.size();
  for (std::size_t step = 0; step < n; ++step) {
    const auto i = (state.retarget_cursor + step) % n;
    if (i != current && state.occupancy[i] < cfg.lots[i].capacity) {
      state.retarget_cursor = (i + 1) % n;
      return i;
    }
  }
  return std::nullopt;
}

}  // namespace

void step_sim(SimState& state, Scenario& scenario)
{
  const auto& cfg = scenario.config();
  const auto& graph = scenario.graph();
  const long now = state.clock;

  for (auto& car : state.cars) {
    if (car.status == CarStatus::pending) {
      if (car.arrival_tick != now)
        continue;
      car.status = CarStatus::driving;
      car.enter_tick = now;
      car.link = cfg.entry_state;
      car.link_done_tick = now + cfg.link_travel_time[car.link];
      continue;
    }
    if (car.status != CarStatus::driving || car.link_done_tick != now)
      continue;

    if (auto lot = lot_with_space_at(state, cfg, car.link)) {
      ++state.occupancy[*lot];
      car.status = CarStatus::parked;
      car.park_tick = now;
      continue;
    }

    const auto& target = cfg.lots[car.target_lot];
    if (car.link == target.link && state.occupancy[car.target_lot] >= target.capacity) {
      if (auto other = next_lot(state, cfg, car.target_lot)) {
        state.events.push_back("tick " + std::to_string(now) + ": car " + std::to_string(car.id) +
                               " retargeted to '" + cfg.lots[*other].name + "'");
        car.target_lot = *other;
      }
    }

    state.reward = update_rewards(state, cfg);
    auto [row, eps_used] = scenario.decide(car.link, car.target_lot, state.reward, state.events);

    AuditRecord rec;
    rec.tick = now;
    rec.car_id = car.id;
    rec.link = car.link;
    rec.epsilon_used = eps_used;
    rec.unsafe_mass = 1.0 - support_mass(graph, row, cfg.safe_set);
    state.audit.push_back(rec);

    car.link = sample_next(graph, row, state.rng);
    car.link_done_tick = now + cfg.link_travel_time[car.link];
  }

  int parked = 0;
  for (const auto& car : state.cars)
    parked += car.status == CarStatus::parked ? 1 : 0;
  state.unparked_curve.emplace_back(now, static_cast<int>(state.cars.size()) - parked);
  ++state.clock;
}

Metrics collect_metrics(const SimState& state, const ScenarioConfig& cfg)
{
  Metrics m;
  m.unparked_curve = state.unparked_curve;
  m.total = static_cast<int>(state.cars.size());
  m.final_tick = state.clock - 1;

  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& car : state.cars) {
    CarOutcome out{car.id, car.enter_tick, std::nullopt, std::nullopt};
    if (car.status == CarStatus::parked) {
      out.park_tick = car.park_tick;
      out.time_to_park = car.park_tick - car.enter_tick;
      const auto t = static_cast<double>(*out.time_to_park);
      sum += t;
      sum_sq += t * t;
      ++m.parked;
    }
    m.cars.push_back(out);
  }
  if (m.parked > 0) {
    m.attp_mean = sum / m.parked;
    m.attp_std = std::sqrt(std::max(0.0, sum_sq / m.parked - m.attp_mean * m.attp_mean));
  }
  m.budget_exhausted = m.parked < m.total;

  m.audit = state.audit;
  m.decisions = state.audit.size();
  m.worst_constraint_excess = -std::numeric_limits<double>::infinity();
  for (const auto& rec : state.audit) {
    m.max_unsafe_mass = std::max(m.max_unsafe_mass, rec.unsafe_mass);
    m.worst_constraint_excess = std::max(m.worst_constraint_excess, rec.unsafe_mass - rec.epsilon_used);
    if (rec.epsilon_used > cfg.epsilon)
      ++m.relaxations;
  }
  if (state.audit.empty())
    m.worst_constraint_excess = 0.0;
  return m;
}

Metrics run_scenario(const ScenarioConfig& cfg)
{
  Scenario scenario(cfg);
  SimState state = scenario.initial_state();
  auto all_parked = [&] {
    return std::all_of(state.cars.begin(), state.cars.end(),
                       [](const CarState& c) { return c.status == CarStatus::parked; });
  };
  while (state.clock <= cfg.tick_budget && !all_parked())
    step_sim(state, scenario);
  return collect_metrics(state, cfg);
}

//==============================================================================
BehaviorTable route_behavior(const LinkGraph& graph, StateId destination, const StateSet& avoid)
{
  const auto n = graph.size();
  if (destination >= n)
    throw ParameterError("route destination is not in the graph");

  // Hop distance to the destination over the reversed graph.
  std::vector<std::vector<StateId>> predecessors(n);
  for (StateId s = 0; s < n; ++s)
    for (auto t : graph.successors(s))
      predecessors[t].push_back(s);

  constexpr int kUnreachable = std::numeric_limits<int>::max();
  std::vector<int> dist(n, kUnreachable);
  dist[destination] = 0;
  std::deque<StateId> queue{destination};
  while (!queue.empty()) {
    const auto t = queue.front();
    queue.pop_front();
    for (auto s : predecessors[t])
      if (dist[s] == kUnreachable && !avoid.contains(s)) {
        dist[s] = dist[t] + 1;
        queue.push_back(s);
      }
  }

  BehaviorTable table(n);
  for (StateId s = 0; s < n; ++s) {
    const auto succ = graph.successors(s);
    auto& row = table[s];
    row.origin = s;
    row.probs.assign(succ.size(), 0.0);

    std::size_t best = succ.size();
    for (std::size_t j = 0; j < succ.size(); ++j) {
      if (dist[succ[j]] == kUnreachable || (avoid.contains(succ[j]) && succ[j] != destination))
        continue;
      if (best == succ.size() || dist[succ[j]] < dist[succ[best]])
        best = j;
    }
    if (best == succ.size())
      std::fill(row.probs.begin(), row.probs.end(), 1.0 / static_cast<double>(succ.size()));
    else
      row.probs[best] = 1.0;
  }
  return table;
}

//==============================================================================
namespace {

using nlohmann::json;

StateSet state_set_from(const LinkGraph& graph, const json& names)
{
  StateSet set(graph.size());
  for (const auto& n : names)
    set.insert(graph.id(n.get<std::string>()));
  return set;
}

BehaviorTable behavior_from(const LinkGraph& graph, const json& spec, const std::filesystem::path& base)
{
  if (spec.contains("file"))
    return io::load_behavior(graph, base / spec.at("file").get<std::string>());
  if (spec.contains("route_to")) {
    StateSet avoid(graph.size());
    if (spec.contains("avoid"))
      avoid = state_set_from(graph, spec.at("avoid"));
    return route_behavior(graph, graph.id(spec.at("route_to").get<std::string>()), avoid);
  }
  throw IoError("behavior spec needs 'file' or 'route_to'");
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir)
{
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw IoError(std::string("scenario is not valid JSON: ") + e.what());
  }

  try {
    ScenarioConfig cfg;
    cfg.graph = std::make_shared<const LinkGraph>(
      io::load_graph(base_dir / doc.at("graph").get<std::string>()));
    const LinkGraph& g = *cfg.graph;
    const auto n = g.size();

    cfg.entry_state = g.id(doc.at("entry").get<std::string>());
    for (const auto& lot : doc.at("lots"))
      cfg.lots.push_back(ParkingLot{lot.at("name").get<std::string>(),
                                    g.id(lot.at("link").get<std::string>()),
                                    lot.at("capacity").get<int>()});

    cfg.preferred_lot = 0;
    if (doc.contains("preferred_lot")) {
      const auto name = doc.at("preferred_lot").get<std::string>();
      auto it = std::find_if(cfg.lots.begin(), cfg.lots.end(),
                             [&](const ParkingLot& l) { return l.name == name; });
      if (it == cfg.lots.end())
        throw IoError("preferred lot '" + name + "' is not defined");
      cfg.preferred_lot = static_cast<std::size_t>(it - cfg.lots.begin());
    }

    cfg.obstructed_links = doc.contains("obstructed") ? state_set_from(g, doc.at("obstructed"))
                                                      : StateSet(n);

    const auto& arrivals = doc.at("arrivals");
    if (arrivals.is_array()) {
      for (const auto& a : arrivals)
        cfg.arrivals.push_back(Arrival{a.at("car").get<int>(), a.at("tick").get<long>()});
    } else {
      const int count = arrivals.at("count").get<int>();
      const long interval = arrivals.value("interval", 1L);
      const long start = arrivals.value("start", 0L);
      for (int i = 0; i < count; ++i)
        cfg.arrivals.push_back(Arrival{i, start + interval * i});
    }

    cfg.link_travel_time.assign(n, 1);
    if (doc.contains("travel_time")) {
      const auto& tt = doc.at("travel_time");
      cfg.link_travel_time.assign(n, tt.value("default", 1));
      if (tt.contains("links"))
        for (const auto& [name, ticks] : tt.at("links").items())
          cfg.link_travel_time[g.id(name)] = ticks.get<int>();
    }

    cfg.planner_window = doc.value("window", 5);
    cfg.safe_set = StateSet::all(n);
    if (doc.contains("constraint")) {
      const auto& c = doc.at("constraint");
      for (const auto& name : c.at("forbidden"))
        cfg.safe_set.erase(g.id(name.get<std::string>()));
      cfg.epsilon = c.at("epsilon").get<double>();
    }
    if (doc.contains("epsilon_relax"))
      cfg.epsilon_relax_schedule = doc.at("epsilon_relax").get<std::vector<double>>();

    cfg.seed = doc.value("seed", std::uint64_t{1});
    cfg.algorithm = parse_algorithm(doc.value("algorithm", std::string("composed")));
    cfg.tick_budget = doc.value("tick_budget", 2000L);
    if (doc.contains("rewards")) {
      const auto& r = doc.at("rewards");
      cfg.rewards.lot_available = r.value("lot_available", cfg.rewards.lot_available);
      cfg.rewards.lot_full = r.value("lot_full", cfg.rewards.lot_full);
      cfg.rewards.obstruction = r.value("obstruction", cfg.rewards.obstruction);
    }
    cfg.smoothing = doc.value("smoothing", kDefaultSmoothing);

    for (const auto& spec : doc.at("sources"))
      cfg.sources.push_back(behavior_from(g, spec, base_dir));

    const json targets = doc.value("targets", json::object());
    for (const auto& lot : cfg.lots) {
      if (targets.contains(lot.name))
        cfg.lot_targets.push_back(behavior_from(g, targets.at(lot.name), base_dir));
      else
        cfg.lot_targets.push_back(route_behavior(g, lot.link, StateSet(n)));
    }

    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed scenario: ") + e.what());
  } catch (const ParameterError& e) {
    throw ValidationError(std::string("invalid scenario: ") + e.what());
  }
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
  return parse_scenario(io::read_text(path), path.parent_path());
}

//==============================================================================
void write_unparked_csv(std::ostream& out, const Metrics& m)
{
  out << "tick,unparked_count\n";
  for (const auto& [tick, count] : m.unparked_curve)
    out << tick << ',' << count << '\n';
}

void write_cars_csv(std::ostream& out, const Metrics& m)
{
  out << "car_id,enter_tick,park_tick,time_to_park\n";
  for (const auto& c : m.cars) {
    out << c.car_id << ',' << c.enter_tick << ',';
    if (c.park_tick)
      out << *c.park_tick;
    out << ',';
    if (c.time_to_park)
      out << *c.time_to_park;
    out << '\n';
  }
}

void write_summary_csv(std::ostream& out, const Metrics& m)
{
  const auto old = out.precision(10);
  out << "attp_mean,attp_std,parked,total\n"
      << m.attp_mean << ',' << m.attp_std << ',' << m.parked << ',' << m.total << '\n';
  out.precision(old);
}

}  // namespace pcomp::sim
