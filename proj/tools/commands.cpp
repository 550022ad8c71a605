#include "commands.hpp"

#include <pcomp/baseline.hpp>
#include <pcomp/errors.hpp>
#include <pcomp/io.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace pcomp::cli {

namespace fs = std::filesystem;

std::vector<int> parse_range(const std::string& text)
{
  std::vector<int> values;
  try {
    if (auto colon = text.find(':'); colon != std::string::npos) {
      const int lo = std::stoi(text.substr(0, colon));
      const int hi = std::stoi(text.substr(colon + 1));
      for (int v = lo; v <= hi; ++v)
        values.push_back(v);
    } else {
      std::stringstream in(text);
      std::string item;
      while (std::getline(in, item, ','))
        values.push_back(std::stoi(item));
    }
  } catch (const std::logic_error&) {
    throw ParameterError("malformed range '" + text + "'");
  }
  if (values.empty())
    throw ParameterError("empty range '" + text + "'");
  for (int v : values)
    if (v < 1)
      throw ParameterError("range values must be at least 1");
  return values;
}

std::vector<BehaviorTable> extend_sources(const sim::ScenarioConfig& cfg,
                                          std::size_t count,
                                          std::uint64_t seed)
{
  std::vector<BehaviorTable> out(cfg.sources.begin(), cfg.sources.end());
  if (out.size() > count)
    out.resize(count);
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> draw(1.0);
  for (std::size_t i = out.size(); i < count; ++i) {
    BehaviorTable table = cfg.sources[i % cfg.sources.size()];
    for (auto& row : table) {
      std::vector<double> noise(row.probs.size());
      double total = 0.0;
      for (auto& v : noise)
        total += v = draw(rng);
      for (std::size_t j = 0; j < row.probs.size(); ++j)
        row.probs[j] = 0.7 * row.probs[j] + 0.3 * noise[j] / total;
    }
    out.push_back(smooth_behavior(table, cfg.smoothing));
  }
  return out;
}

std::vector<BenchCell> run_bench(const sim::ScenarioConfig& cfg, const BenchOptions& opts)
{
  int max_sources = 0;
  for (int s : opts.source_counts)
    max_sources = std::max(max_sources, s);
  const auto all_sources = extend_sources(cfg, static_cast<std::size_t>(max_sources), opts.seed);

  sim::Scenario scenario(cfg);
  const auto reward = sim::update_rewards(scenario.initial_state(), cfg);
  const auto& graph = *cfg.graph;

  std::vector<BenchCell> cells;
  for (int S : opts.source_counts) {
    std::vector<BehaviorTable> sources(all_sources.begin(), all_sources.begin() + S);
    auto behaviors = std::make_shared<const BehaviorSet>(
      BehaviorSet::make(cfg.graph, sources, cfg.lot_targets.at(cfg.preferred_lot), cfg.smoothing));

    for (int T : opts.horizons) {
      std::vector<double> samples;
      for (int rep = 0; rep < opts.reps; ++rep)
        for (StateId link = 0; link < graph.size(); ++link) {
          const auto start = std::chrono::steady_clock::now();
          try {
            const PlanTemplate tmpl{behaviors, StageSpec{reward, cfg.safe_set, cfg.epsilon}};
            (void)receding_step(tmpl, link, T, opts.algorithm, opts.plan);
          } catch (const InfeasiblePlanError&) {
            const PlanTemplate relaxed{behaviors, StageSpec{reward, cfg.safe_set, 1.0}};
            (void)receding_step(relaxed, link, T, opts.algorithm, opts.plan);
          }
          const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
          samples.push_back(dt.count());
        }
      double mean = 0.0;
      for (double v : samples)
        mean += v;
      mean /= static_cast<double>(samples.size());
      double var = 0.0;
      for (double v : samples)
        var += (v - mean) * (v - mean);
      var /= static_cast<double>(samples.size());
      cells.push_back({S, T, mean, std::sqrt(var)});
    }
  }
  return cells;
}

//==============================================================================
namespace {

void print_row(std::ostream& out, const LinkGraph& graph, const ConditionalPMF& row)
{
  const auto succ = graph.successors(row.origin);
  for (std::size_t j = 0; j < succ.size(); ++j)
    out << "  " << graph.name(succ[j]) << ' ' << row.probs[j] << '\n';
}

sim::ScenarioConfig load_with_overrides(const std::string& path,
                                        const std::optional<std::string>& algorithm,
                                        const std::optional<std::uint64_t>& seed,
                                        int threads)
{
  auto cfg = sim::load_scenario(path);
  if (algorithm)
    cfg.algorithm = parse_algorithm(*algorithm);
  if (seed)
    cfg.seed = *seed;
  cfg.plan_options.threads = threads;
  return cfg;
}

std::ofstream open_output(const fs::path& path)
{
  std::ofstream f(path);
  if (!f)
    throw IoError("cannot write '" + path.string() + "'");
  return f;
}

int cmd_validate(const std::optional<std::string>& scenario_path,
                 const std::optional<std::string>& graph_path,
                 const std::vector<std::string>& behavior_paths,
                 const std::optional<std::string>& target_path,
                 std::ostream& out)
{
  struct Named
  {
    std::string label;
    BehaviorTable table;
  };
  std::shared_ptr<const LinkGraph> graph;
  std::vector<Named> sources;
  std::vector<Named> targets;

  if (scenario_path) {
    const auto cfg = sim::load_scenario(*scenario_path);
    graph = cfg.graph;
    for (std::size_t i = 0; i < cfg.sources.size(); ++i)
      sources.push_back({"source " + std::to_string(i), cfg.sources[i]});
    for (std::size_t i = 0; i < cfg.lots.size(); ++i)
      targets.push_back({"target for lot '" + cfg.lots[i].name + "'", cfg.lot_targets[i]});
  } else {
    if (!graph_path)
      throw ParameterError("validate needs --graph or --scenario");
    graph = std::make_shared<const LinkGraph>(io::load_graph(*graph_path));
    for (const auto& p : behavior_paths)
      sources.push_back({p, io::load_behavior(*graph, p)});
    if (target_path)
      targets.push_back({*target_path, io::load_behavior(*graph, *target_path)});
  }

  bool ok = true;
  auto report = [&](const std::string& label, const ValidationReport& r) {
    if (r.ok()) {
      out << label << ": ok\n";
      return;
    }
    ok = false;
    out << label << ": " << r.issues.size() << " issue(s)\n" << r.describe(*graph);
  };
  std::vector<BehaviorTable> source_tables;
  for (const auto& s : sources) {
    report(s.label, validate_behavior(*graph, s.table));
    source_tables.push_back(s.table);
  }
  // Targets are checked for absolute continuity after the default smoothing,
  // as a scenario would use them.
  std::vector<BehaviorTable> smoothed;
  for (const auto& t : source_tables)
    if (validate_behavior(*graph, t).ok())
      smoothed.push_back(smooth_behavior(t, kDefaultSmoothing));
  for (const auto& t : targets) {
    auto r = validate_behavior(*graph, t.table);
    if (r.ok() && !smoothed.empty())
      r = validate_behavior(*graph, smooth_behavior(t.table, kDefaultSmoothing), smoothed);
    report(t.label, r);
  }
  return ok ? kOk : kValidation;
}

int cmd_plan(const sim::ScenarioConfig& cfg,
             const std::optional<std::string>& state_name,
             std::optional<int> window,
             const std::optional<std::string>& lot_name,
             const fs::path& out_dir,
             std::ostream& out)
{
  sim::Scenario scenario(cfg);
  const auto& graph = scenario.graph();
  const StateId state = state_name ? graph.id(*state_name) : cfg.entry_state;
  const int T = window.value_or(cfg.planner_window);
  if (T < 1)
    throw ParameterError("window must be at least 1");

  std::size_t lot = cfg.preferred_lot;
  if (lot_name) {
    auto it = std::find_if(cfg.lots.begin(), cfg.lots.end(),
                           [&](const sim::ParkingLot& l) { return l.name == *lot_name; });
    if (it == cfg.lots.end())
      throw ParameterError("unknown lot '" + *lot_name + "'");
    lot = static_cast<std::size_t>(it - cfg.lots.begin());
  }

  const auto reward = sim::update_rewards(scenario.initial_state(), cfg);
  PlanProblem problem{scenario.behaviors_for(lot), T, {}};
  for (int k = 0; k < T; ++k)
    problem.stages.push_back(StageSpec{reward, cfg.safe_set, cfg.epsilon});

  const auto table = cfg.algorithm == Algorithm::composed
                       ? backward_plan_from(problem, state, cfg.plan_options)
                       : backward_plan_binary_from(problem, state, cfg.plan_options);

  fs::create_directories(out_dir);
  const auto path = out_dir / "policy.json";
  io::write_text(path, io::policy_to_json(graph, table));

  const auto& entry = table.at(1, state);
  out << "policy written to " << path.string() << '\n';
  out << "algorithm " << to_string(cfg.algorithm) << ", window " << T << ", epsilon " << cfg.epsilon
      << '\n';
  out << "alpha";
  for (Eigen::Index i = 0; i < entry.alpha.size(); ++i)
    out << ' ' << entry.alpha[i];
  out << "\nrow at '" << graph.name(state) << "' (cost " << entry.cost << "):\n";
  print_row(out, graph, entry.row);
  return kOk;
}

int cmd_simulate(const sim::ScenarioConfig& cfg, const fs::path& out_dir, std::ostream& out)
{
  const auto m = sim::run_scenario(cfg);
  fs::create_directories(out_dir);
  {
    auto f = open_output(out_dir / "unparked.csv");
    sim::write_unparked_csv(f, m);
  }
  {
    auto f = open_output(out_dir / "cars.csv");
    sim::write_cars_csv(f, m);
  }
  {
    auto f = open_output(out_dir / "summary.csv");
    sim::write_summary_csv(f, m);
  }
  out << "algorithm " << to_string(cfg.algorithm) << ", seed " << cfg.seed << '\n';
  out << "parked " << m.parked << " of " << m.total << " by tick " << m.final_tick
      << (m.budget_exhausted ? " (tick budget exhausted)" : "") << '\n';
  out << "attp " << m.attp_mean << " +/- " << m.attp_std << '\n';
  out << "decisions " << m.decisions << ", relaxed " << m.relaxations << ", max unsafe mass "
      << m.max_unsafe_mass << '\n';
  return kOk;
}

int cmd_bench(const sim::ScenarioConfig& cfg,
              const BenchOptions& opts,
              const std::optional<std::string>& out_path,
              std::ostream& out)
{
  const auto cells = run_bench(cfg, opts);
  std::ostringstream csv;
  csv << "S,T,mean_seconds,std_seconds\n" << std::setprecision(6);
  for (const auto& c : cells)
    csv << c.sources << ',' << c.horizon << ',' << c.mean_seconds << ',' << c.std_seconds << '\n';
  if (out_path)
    io::write_text(*out_path, csv.str());
  else
    out << csv.str();
  return kOk;
}

}  // namespace

//==============================================================================
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Behavior composition planner and parking simulator", "pcomp"};
  app.require_subcommand(1);

  std::optional<std::string> scenario;
  std::optional<std::string> algorithm;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out_dir = ".";

  auto* validate = app.add_subcommand("validate", "Check graph and behavior files");
  std::optional<std::string> graph_path;
  std::optional<std::string> target_path;
  std::vector<std::string> behavior_paths;
  validate->add_option("--scenario", scenario, "Scenario JSON (validates its sources and targets)");
  validate->add_option("--graph", graph_path, "Graph file");
  validate->add_option("--target", target_path, "Target behavior checked against the others");
  validate->add_option("behaviors", behavior_paths, "Behavior JSON files");

  auto* plan = app.add_subcommand("plan", "Plan from one state and write the policy table");
  std::optional<std::string> state;
  std::optional<int> window;
  std::optional<std::string> lot;
  plan->add_option("--scenario", scenario, "Scenario JSON")->required();
  plan->add_option("--state", state, "Current link (default: entry)");
  plan->add_option("--window", window, "Planning horizon (default: scenario window)");
  plan->add_option("--algorithm", algorithm, "composed or binary")
    ->check(CLI::IsMember({"composed", "binary"}));
  plan->add_option("--lot", lot, "Lot whose target behavior is tracked (default: preferred)");
  plan->add_option("--out-dir", out_dir, "Directory for policy.json");
  plan->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* simulate = app.add_subcommand("simulate", "Run the parking scenario and write metrics");
  simulate->add_option("--scenario", scenario, "Scenario JSON")->required();
  simulate->add_option("--algorithm", algorithm, "composed or binary")
    ->check(CLI::IsMember({"composed", "binary"}));
  simulate->add_option("--seed", seed, "Sampling seed");
  simulate->add_option("--out-dir", out_dir, "Directory for the CSV files");
  simulate->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("bench", "Time planner outputs over sources and horizons");
  std::string s_range = "1:6";
  std::string t_range = "1:5";
  int reps = 3;
  std::optional<std::string> bench_out;
  bench->add_option("--scenario", scenario, "Scenario JSON")->required();
  bench->add_option("--s-range", s_range, "Source counts, a:b or a,b,c");
  bench->add_option("--t-range", t_range, "Horizons, a:b or a,b,c");
  bench->add_option("--reps", reps, "Repetitions per link")->check(CLI::PositiveNumber);
  bench->add_option("--seed", seed, "Seed for synthetic sources");
  bench->add_option("--algorithm", algorithm, "composed or binary")
    ->check(CLI::IsMember({"composed", "binary"}));
  bench->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--out", bench_out, "CSV path (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }

  try {
    if (validate->parsed())
      return cmd_validate(scenario, graph_path, behavior_paths, target_path, out);
    const auto cfg = load_with_overrides(*scenario, algorithm, seed, threads);
    if (plan->parsed())
      return cmd_plan(cfg, state, window, lot, out_dir, out);
    if (simulate->parsed())
      return cmd_simulate(cfg, out_dir, out);

    BenchOptions opts;
    opts.source_counts = parse_range(s_range);
    opts.horizons = parse_range(t_range);
    opts.reps = reps;
    opts.seed = seed.value_or(cfg.seed);
    opts.algorithm = cfg.algorithm;
    opts.plan = cfg.plan_options;
    return cmd_bench(cfg, opts, bench_out, out);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const InfeasiblePlanError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const ParameterError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kValidation;
  }
}

}  // namespace pcomp::cli
