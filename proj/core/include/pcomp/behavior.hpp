#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pcomp {

/// Index of a state (road link) inside a LinkGraph.
using StateId = std::size_t;

/// Tolerance on the row sum of stored probability rows.
inline constexpr double kRowTolerance = 1e-12;
/// Tolerance on the sum of caller-supplied simplex weights.
inline constexpr double kAlphaTolerance = 1e-9;
/// Default smoothing weight applied to sources and target.
inline constexpr double kDefaultSmoothing = 0.05;

/// Finite directed graph whose successor lists define the support of every
/// conditional distribution. Successor order is the canonical alignment for
/// all probability vectors.
class LinkGraph
{
public:
  using Adjacency = std::vector<std::pair<std::string, std::vector<std::string>>>;

  LinkGraph() = default;

  /// Builds the graph from (state, successors) pairs in state order.
  /// Throws ParameterError on duplicate ids, unknown successors, empty or
  /// repeated successor entries.
  static LinkGraph from_adjacency(const Adjacency& adjacency);

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(StateId s) const { return names_.at(s); }
  std::optional<StateId> find(std::string_view name) const;
  /// Like find() but throws ParameterError for unknown names.
  StateId id(std::string_view name) const;

  std::span<const StateId> successors(StateId s) const { return successors_.at(s); }
  std::size_t out_degree(StateId s) const { return successors_.at(s).size(); }
  std::size_t max_out_degree() const noexcept;
  /// Position of `to` inside successors(from), if it is a successor.
  std::optional<std::size_t> successor_position(StateId from, StateId to) const;

private:
  std::vector<std::string> names_;
  std::vector<std::vector<StateId>> successors_;
  std::unordered_map<std::string, StateId> index_;
};

/// Subset of the states of a graph.
class StateSet
{
public:
  StateSet() = default;
  explicit StateSet(std::size_t universe) : mask_(universe, 0) {}

  static StateSet all(std::size_t universe);
  static StateSet of(std::size_t universe, std::initializer_list<StateId> members);

  std::size_t universe() const noexcept { return mask_.size(); }
  bool contains(StateId s) const noexcept { return s < mask_.size() && mask_[s] != 0; }
  void insert(StateId s) { mask_.at(s) = 1; }
  void erase(StateId s) { mask_.at(s) = 0; }
  std::size_t count() const noexcept;
  std::vector<StateId> members() const;

  friend bool operator==(const StateSet&, const StateSet&) = default;

private:
  std::vector<char> mask_;
};

/// One row pi(.|origin) aligned with successors(origin).
struct ConditionalPMF
{
  StateId origin = 0;
  std::vector<double> probs;
};

/// A full behavior: one row per state, indexed by StateId.
using BehaviorTable = std::vector<ConditionalPMF>;

enum class IssueKind
{
  missing_row,
  support_mismatch,
  negative_entry,
  row_sum_deviation,
  absolute_continuity,
};

struct ValidationIssue
{
  IssueKind kind;
  StateId state;
  /// Successor involved, for entry-level issues.
  std::optional<StateId> successor;
  /// Deviation, offending entry, or source mass depending on kind.
  double value = 0.0;
};

struct ValidationReport
{
  std::vector<ValidationIssue> issues;

  bool ok() const noexcept { return issues.empty(); }
  std::string describe(const LinkGraph& graph) const;
};

/// Lists every defect that makes `table` unusable on `graph`. When
/// `reference_sources` is non-empty, `table` is treated as a target and is
/// also checked for zero mass where any reference source puts positive mass.
ValidationReport validate_behavior(
  const LinkGraph& graph,
  const BehaviorTable& table,
  std::span<const BehaviorTable> reference_sources = {});

/// Mixes every row with the uniform distribution over its successors:
/// (1 - lambda) * row + lambda / out_degree. Throws ParameterError unless
/// 0 < lambda < 1.
BehaviorTable smooth_behavior(const BehaviorTable& table, double lambda);
ConditionalPMF smooth_row(const ConditionalPMF& row, double lambda);

/// Entrywise convex combination sum_i alpha_i * rows[i]. Throws
/// ParameterError when alpha is off the simplex (tolerance kAlphaTolerance),
/// has the wrong length, or the rows disagree on origin or width.
ConditionalPMF mix(std::span<const ConditionalPMF> rows, std::span<const double> alpha);

/// Mass the row puts on successors that belong to `subset`.
double support_mass(const LinkGraph& graph, const ConditionalPMF& row, const StateSet& subset);

/// The S source behaviors and the target behavior an agent tracks.
/// Built through make(), which smooths and validates; immutable afterwards.
class BehaviorSet
{
public:
  /// Smooths sources and target with `smoothing` (skip with nullopt), then
  /// validates rows, absolute continuity of the target, and the entrywise
  /// bounds 0 < m <= M. Throws ValidationError listing the defects.
  static BehaviorSet make(
    std::shared_ptr<const LinkGraph> graph,
    std::vector<BehaviorTable> sources,
    BehaviorTable target,
    std::optional<double> smoothing = kDefaultSmoothing);

  const LinkGraph& graph() const noexcept { return *graph_; }
  const std::shared_ptr<const LinkGraph>& graph_ptr() const noexcept { return graph_; }
  std::size_t num_sources() const noexcept { return sources_.size(); }
  const std::vector<BehaviorTable>& sources() const noexcept { return sources_; }
  const BehaviorTable& source(std::size_t i) const { return sources_.at(i); }
  const BehaviorTable& target() const noexcept { return target_; }
  /// Rows of every source conditioned on `s`.
  std::vector<ConditionalPMF> source_rows(StateId s) const;

  /// Smallest source entry over the support (m).
  double lower_bound() const noexcept { return lower_bound_; }
  /// Largest source entry over the support (M).
  double upper_bound() const noexcept { return upper_bound_; }

private:
  std::shared_ptr<const LinkGraph> graph_;
  std::vector<BehaviorTable> sources_;
  BehaviorTable target_;
  double lower_bound_ = 0.0;
  double upper_bound_ = 0.0;
};

/// Reward field, safe set and tolerance for one time step.
struct StageSpec
{
  std::vector<double> reward;  // indexed by StateId
  StateSet safe_set;
  double epsilon = 1.0;

  /// Zero rewards, every state safe, epsilon 1.
  static StageSpec unconstrained(const LinkGraph& graph);
  /// Throws ParameterError if sizes disagree with the graph or epsilon is
  /// outside [0, 1].
  void validate(const LinkGraph& graph) const;
};

}  // namespace pcomp
