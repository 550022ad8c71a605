#include "pcomp/behavior.hpp"

#include "pcomp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pcomp {

//==============================================================================
LinkGraph LinkGraph::from_adjacency(const Adjacency& adjacency)
{
  LinkGraph g;
  g.names_.reserve(adjacency.size());
  for (const auto& [name, succ] : adjacency) {
    if (name.empty())
      throw ParameterError("state identifiers must be nonempty");
    if (!g.index_.emplace(name, g.names_.size()).second)
      throw ParameterError("duplicate state identifier '" + name + "'");
    g.names_.push_back(name);
  }

  g.successors_.resize(adjacency.size());
  for (std::size_t s = 0; s < adjacency.size(); ++s) {
    const auto& succ = adjacency[s].second;
    if (succ.empty())
      throw ParameterError("state '" + g.names_[s] + "' has no successors");
    auto& out = g.successors_[s];
    for (const auto& n : succ) {
      auto it = g.index_.find(n);
      if (it == g.index_.end())
        throw ParameterError(
          "successor '" + n + "' of state '" + g.names_[s] + "' is not a state");
      if (std::find(out.begin(), out.end(), it->second) != out.end())
        throw ParameterError(
          "successor '" + n + "' listed twice for state '" + g.names_[s] + "'");
      out.push_back(it->second);
    }
  }
  return g;
}

std::optional<StateId> LinkGraph::find(std::string_view name) const
{
  auto it = index_.find(std::string(name));
  if (it == index_.end())
    return std::nullopt;
  return it->second;
}

StateId LinkGraph::id(std::string_view name) const
{
  if (auto s = find(name))
    return *s;
  throw ParameterError("unknown state '" + std::string(name) + "'");
}

std::size_t LinkGraph::max_out_degree() const noexcept
{
  std::size_t d = 0;
  for (const auto& s : successors_)
    d = std::max(d, s.size());
  return d;
}

std::optional<std::size_t> LinkGraph::successor_position(StateId from, StateId to) const
{
  const auto& succ = successors_.at(from);
  auto it = std::find(succ.begin(), succ.end(), to);
  if (it == succ.end())
    return std::nullopt;
  return static_cast<std::size_t>(it - succ.begin());
}

//==============================================================================
StateSet StateSet::all(std::size_t universe)
{
  StateSet set;
  set.mask_.assign(universe, 1);
  return set;
}

StateSet StateSet::of(std::size_t universe, std::initializer_list<StateId> members)
{
  StateSet set(universe);
  for (auto s : members)
    set.insert(s);
  return set;
}

std::size_t StateSet::count() const noexcept
{
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1));
}

std::vector<StateId> StateSet::members() const
{
  std::vector<StateId> out;
  for (StateId s = 0; s < mask_.size(); ++s)
    if (mask_[s])
      out.push_back(s);
  return out;
}

//==============================================================================
namespace {

bool row_has_shape(const LinkGraph& graph, const BehaviorTable& table, StateId s)
{
  return s < table.size() && table[s].origin == s &&
         table[s].probs.size() == graph.out_degree(s);
}

const char* kind_label(IssueKind kind)
{
  switch (kind) {
    case IssueKind::missing_row: return "missing row";
    case IssueKind::support_mismatch: return "row does not match successor list";
    case IssueKind::negative_entry: return "negative or non-finite entry";
    case IssueKind::row_sum_deviation: return "row sum deviates from 1";
    case IssueKind::absolute_continuity: return "zero target mass where a source is positive";
  }
  return "unknown";
}

}  // namespace

std::string ValidationReport::describe(const LinkGraph& graph) const
{
  std::ostringstream out;
  for (const auto& issue : issues) {
    out << "state '" << (issue.state < graph.size() ? graph.name(issue.state) : "?") << "'";
    if (issue.successor)
      out << " -> '" << graph.name(*issue.successor) << "'";
    out << ": " << kind_label(issue.kind);
    if (issue.kind != IssueKind::missing_row)
      out << " (" << issue.value << ")";
    out << '\n';
  }
  return out.str();
}

ValidationReport validate_behavior(
  const LinkGraph& graph,
  const BehaviorTable& table,
  std::span<const BehaviorTable> reference_sources)
{
  ValidationReport report;
  auto& issues = report.issues;

  for (StateId s = 0; s < graph.size(); ++s) {
    if (s >= table.size()) {
      issues.push_back({IssueKind::missing_row, s, std::nullopt, 0.0});
      continue;
    }
    if (!row_has_shape(graph, table, s)) {
      issues.push_back({
        IssueKind::support_mismatch, s, std::nullopt,
        static_cast<double>(table[s].probs.size())});
      continue;
    }

    const auto succ = graph.successors(s);
    const auto& probs = table[s].probs;
    double sum = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
      if (!(probs[j] >= 0.0) || !std::isfinite(probs[j]))
        issues.push_back({IssueKind::negative_entry, s, succ[j], probs[j]});
      sum += probs[j];
    }
    if (!(std::abs(sum - 1.0) <= kRowTolerance))
      issues.push_back({IssueKind::row_sum_deviation, s, std::nullopt, std::abs(sum - 1.0)});

    // Absolute continuity of the target with respect to every source.
    for (std::size_t j = 0; j < probs.size(); ++j) {
      if (probs[j] > 0.0)
        continue;
      double worst = 0.0;
      for (const auto& src : reference_sources)
        if (row_has_shape(graph, src, s))
          worst = std::max(worst, src[s].probs[j]);
      if (worst > 0.0)
        issues.push_back({IssueKind::absolute_continuity, s, succ[j], worst});
    }
  }
  return report;
}

//==============================================================================
ConditionalPMF smooth_row(const ConditionalPMF& row, double lambda)
{
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ParameterError("smoothing weight must lie in (0, 1)");
  if (row.probs.empty())
    throw ParameterError("cannot smooth an empty row");

  ConditionalPMF out{row.origin, row.probs};
  const double floor = lambda / static_cast<double>(row.probs.size());
  for (auto& p : out.probs)
    p = (1.0 - lambda) * p + floor;
  return out;
}

BehaviorTable smooth_behavior(const BehaviorTable& table, double lambda)
{
  BehaviorTable out;
  out.reserve(table.size());
  for (const auto& row : table)
    out.push_back(smooth_row(row, lambda));
  return out;
}

ConditionalPMF mix(std::span<const ConditionalPMF> rows, std::span<const double> alpha)
{
  if (rows.empty())
    throw ParameterError("mix needs at least one row");
  if (alpha.size() != rows.size())
    throw ParameterError("alpha length differs from the number of rows");

  double total = 0.0;
  for (double a : alpha) {
    if (!(a >= -kAlphaTolerance) || !(a <= 1.0 + kAlphaTolerance))
      throw ParameterError("alpha entry outside [0, 1]");
    total += a;
  }
  if (!(std::abs(total - 1.0) <= kAlphaTolerance))
    throw ParameterError("alpha does not sum to 1");

  const auto origin = rows.front().origin;
  const auto width = rows.front().probs.size();
  ConditionalPMF out{origin, std::vector<double>(width, 0.0)};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].origin != origin || rows[i].probs.size() != width)
      throw ParameterError("rows to mix must share origin and successor list");
    for (std::size_t j = 0; j < width; ++j)
      out.probs[j] += alpha[i] * rows[i].probs[j];
  }
  return out;
}

double support_mass(const LinkGraph& graph, const ConditionalPMF& row, const StateSet& subset)
{
  const auto succ = graph.successors(row.origin);
  if (succ.size() != row.probs.size())
    throw ParameterError("row does not match the successor list of its origin");
  double mass = 0.0;
  for (std::size_t j = 0; j < succ.size(); ++j)
    if (subset.contains(succ[j]))
      mass += row.probs[j];
  return mass;
}

//==============================================================================
BehaviorSet BehaviorSet::make(
  std::shared_ptr<const LinkGraph> graph,
  std::vector<BehaviorTable> sources,
  BehaviorTable target,
  std::optional<double> smoothing)
{
  if (!graph)
    throw ParameterError("behavior set needs a graph");
  if (sources.empty())
    throw ParameterError("behavior set needs at least one source");

  std::ostringstream defects;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    auto report = validate_behavior(*graph, sources[i]);
    if (!report.ok())
      defects << "source " << i << ":\n" << report.describe(*graph);
  }
  if (auto report = validate_behavior(*graph, target); !report.ok())
    defects << "target:\n" << report.describe(*graph);
  if (!defects.str().empty())
    throw ValidationError(defects.str());

  if (smoothing) {
    for (auto& src : sources)
      src = smooth_behavior(src, *smoothing);
    target = smooth_behavior(target, *smoothing);
  }

  if (auto report = validate_behavior(*graph, target, sources); !report.ok())
    throw ValidationError("target:\n" + report.describe(*graph));

  BehaviorSet set;
  set.lower_bound_ = std::numeric_limits<double>::infinity();
  set.upper_bound_ = 0.0;
  for (const auto& src : sources)
    for (const auto& row : src)
      for (double p : row.probs) {
        set.lower_bound_ = std::min(set.lower_bound_, p);
        set.upper_bound_ = std::max(set.upper_bound_, p);
      }
  if (!(set.lower_bound_ > 0.0))
    throw ValidationError(
      "source entries must be bounded away from zero on every support; apply smoothing");

  set.graph_ = std::move(graph);
  set.sources_ = std::move(sources);
  set.target_ = std::move(target);
  return set;
}

std::vector<ConditionalPMF> BehaviorSet::source_rows(StateId s) const
{
  std::vector<ConditionalPMF> rows;
  rows.reserve(sources_.size());
  for (const auto& src : sources_)
    rows.push_back(src.at(s));
  return rows;
}

//==============================================================================
StageSpec StageSpec::unconstrained(const LinkGraph& graph)
{
  return StageSpec{std::vector<double>(graph.size(), 0.0), StateSet::all(graph.size()), 1.0};
}

void StageSpec::validate(const LinkGraph& graph) const
{
  if (reward.size() != graph.size())
    throw ParameterError("reward field must cover every state");
  if (safe_set.universe() != graph.size())
    throw ParameterError("safe set must be defined over the graph's states");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw ParameterError("epsilon must lie in [0, 1]");
  for (double r : reward)
    if (!std::isfinite(r))
      throw ParameterError("rewards must be finite");
}

}  // namespace pcomp
