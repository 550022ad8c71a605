#include "pcomp/io.hpp"

#include "pcomp/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace pcomp::io {

namespace {

std::string trim(std::string s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

LinkGraph read_graph(std::istream& in)
{
  LinkGraph::Adjacency adjacency;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#')
      continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos)
      throw IoError("graph line " + std::to_string(line_no) + ": expected 'state: succ,...'");

    std::vector<std::string> succ;
    std::stringstream rest(line.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ','))
      if (auto t = trim(item); !t.empty())
        succ.push_back(std::move(t));
    adjacency.emplace_back(trim(line.substr(0, colon)), std::move(succ));
  }
  try {
    return LinkGraph::from_adjacency(adjacency);
  } catch (const ParameterError& e) {
    throw IoError(std::string("invalid graph: ") + e.what());
  }
}

LinkGraph load_graph(const std::filesystem::path& path)
{
  std::istringstream in(read_text(path));
  return read_graph(in);
}

void write_graph(std::ostream& out, const LinkGraph& graph)
{
  for (StateId s = 0; s < graph.size(); ++s) {
    out << graph.name(s) << ':';
    const auto succ = graph.successors(s);
    for (std::size_t j = 0; j < succ.size(); ++j)
      out << (j ? "," : " ") << graph.name(succ[j]);
    out << '\n';
  }
}

//==============================================================================
BehaviorTable parse_behavior(const LinkGraph& graph, const std::string& json_text)
{
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("behavior file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object())
    throw IoError("behavior file must be a JSON object keyed by state id");

  BehaviorTable table(graph.size());
  for (StateId s = 0; s < graph.size(); ++s)
    table[s].origin = s;
  for (const auto& [key, value] : doc.items()) {
    const auto s = graph.find(key);
    if (!s)
      throw IoError("behavior file names unknown state '" + key + "'");
    if (!value.is_array())
      throw IoError("behavior row for '" + key + "' must be an array");
    auto& probs = table[*s].probs;
    for (const auto& p : value) {
      if (!p.is_number())
        throw IoError("behavior row for '" + key + "' must contain numbers");
      probs.push_back(p.get<double>());
    }
  }
  return table;
}

BehaviorTable load_behavior(const LinkGraph& graph, const std::filesystem::path& path)
{
  return parse_behavior(graph, read_text(path));
}

std::string behavior_to_json(const LinkGraph& graph, const BehaviorTable& table)
{
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& row : table)
    doc[graph.name(row.origin)] = row.probs;
  return doc.dump(2) + "\n";
}

std::string policy_to_json(const LinkGraph& graph, const PolicyTable& table)
{
  nlohmann::ordered_json doc;
  doc["horizon"] = table.horizon();
  auto& stages = doc["stages"] = nlohmann::ordered_json::array();
  for (int k = 1; k <= table.horizon(); ++k) {
    nlohmann::ordered_json stage;
    stage["k"] = k;
    auto& entries = stage["entries"] = nlohmann::ordered_json::array();
    for (StateId s = 0; s < table.num_states(); ++s) {
      const auto* e = table.find(k, s);
      if (!e)
        continue;
      nlohmann::ordered_json item;
      item["state"] = graph.name(s);
      item["alpha"] = std::vector<double>(e->alpha.data(), e->alpha.data() + e->alpha.size());
      std::vector<std::string> succ;
      for (auto n : graph.successors(s))
        succ.push_back(graph.name(n));
      item["successors"] = succ;
      item["row"] = e->row.probs;
      item["cost"] = e->cost;
      item["feasible"] = e->feasible;
      entries.push_back(std::move(item));
    }
    stages.push_back(std::move(stage));
  }
  return doc.dump(2) + "\n";
}

//==============================================================================
std::string read_text(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out)
    throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace pcomp::io
