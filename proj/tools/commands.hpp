#pragma once

#include <pcomp/parksim.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace pcomp::cli {

enum ExitCode : int
{
  kOk = 0,
  kValidation = 1,
  kInfeasible = 2,
  kIo = 3,
};

/// Runs the `pcomp` command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct BenchCell
{
  int sources = 0;
  int horizon = 0;
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
};

struct BenchOptions
{
  std::vector<int> source_counts;
  std::vector<int> horizons;
  int reps = 1;
  std::uint64_t seed = 1;
  Algorithm algorithm = Algorithm::composed;
  PlanOptions plan;
};

/// Source list of length `count`: the scenario's sources followed by
/// perturbed copies, each row mixed with a random row and re-smoothed.
std::vector<BehaviorTable> extend_sources(const sim::ScenarioConfig& cfg,
                                          std::size_t count,
                                          std::uint64_t seed);

/// Time to produce one planner output, per (S, T), averaged over every link
/// of the graph as the current state and over `reps` repetitions.
std::vector<BenchCell> run_bench(const sim::ScenarioConfig& cfg, const BenchOptions& opts);

/// "a:b" (inclusive) or "a,b,c".
std::vector<int> parse_range(const std::string& text);

}  // namespace pcomp::cli
