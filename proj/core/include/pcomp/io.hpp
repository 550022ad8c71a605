#pragma once

#include "pcomp/behavior.hpp"
#include "pcomp/planner.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace pcomp::io {

/// Graph file: one line per state, `state_id: succ1,succ2,...`. Blank lines
/// and lines starting with '#' are skipped. State order is line order.
LinkGraph read_graph(std::istream& in);
LinkGraph load_graph(const std::filesystem::path& path);
void write_graph(std::ostream& out, const LinkGraph& graph);

/// Behavior file: JSON object mapping state id to a probability array aligned
/// with that state's successor order. States absent from the file yield rows
/// with no entries (reported by validate_behavior); unknown state ids throw
/// IoError.
BehaviorTable parse_behavior(const LinkGraph& graph, const std::string& json_text);
BehaviorTable load_behavior(const LinkGraph& graph, const std::filesystem::path& path);
std::string behavior_to_json(const LinkGraph& graph, const BehaviorTable& table);

/// PolicyTable as JSON: per step k, per covered state, the weights, the
/// mixed row (with successor ids) and the stage cost.
std::string policy_to_json(const LinkGraph& graph, const PolicyTable& table);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pcomp::io
