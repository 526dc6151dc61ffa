#include "evcf/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "evcf/numeric.hpp"

namespace evcf {

void LocalIndependenceGraph::add_node(const std::string& name,
                                      std::optional<double> timestamp) {
  auto [it, inserted] = meta_.try_emplace(name, timestamp);
  if (inserted) {
    nodes_.push_back(name);
  } else if (timestamp.has_value()) {
    if (it->second.has_value() && *it->second != *timestamp)
      throw std::runtime_error("graph: conflicting timestamps for node " + name);
    it->second = timestamp;
  }
}

void LocalIndependenceGraph::add_edge(const std::string& from, const std::string& to) {
  add_node(from);
  add_node(to);
  edges_.insert({from, to});
}

bool LocalIndependenceGraph::has_node(const std::string& name) const {
  return meta_.count(name) > 0;
}

bool LocalIndependenceGraph::has_edge(const std::string& from,
                                      const std::string& to) const {
  return edges_.count({from, to}) > 0;
}

std::optional<double> LocalIndependenceGraph::timestamp(const std::string& name) const {
  const auto it = meta_.find(name);
  return it == meta_.end() ? std::nullopt : it->second;
}

std::set<std::string> parents(const LocalIndependenceGraph& g, const std::string& v) {
  std::set<std::string> out;
  for (const auto& [from, to] : g.edges())
    if (to == v) out.insert(from);
  return out;
}

std::set<std::string> closure(const LocalIndependenceGraph& g, const std::string& v) {
  auto out = parents(g, v);
  out.insert(v);
  return out;
}

bool is_locally_independent(const LocalIndependenceGraph& g,
                            const std::set<std::string>& sources,
                            const std::set<std::string>& targets) {
  for (const auto& a : sources)
    for (const auto& b : targets)
      if (g.has_edge(a, b)) return false;
  return true;
}

std::vector<std::string> baseline_order(const LocalIndependenceGraph& g,
                                        const std::map<std::string, double>& timestamps) {
  std::vector<std::string> out;
  for (const auto& [name, t] : timestamps) {
    (void)t;
    if (!g.has_node(name))
      throw std::runtime_error("baseline_order: unknown node " + name);
    out.push_back(name);
  }
  std::sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
    const double ta = timestamps.at(a), tb = timestamps.at(b);
    if (ta != tb) return ta < tb;
    return a < b;
  });
  return out;
}

LocalIndependenceGraph parse_graph(const std::string& text) {
  LocalIndependenceGraph g;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank
    if (tok == "node") {
      std::string name;
      if (!(ls >> name))
        throw std::runtime_error("graph line " + std::to_string(lineno) +
                                 ": node needs a name");
      std::optional<double> ts;
      std::string attr;
      if (ls >> attr) {
        if (attr.rfind("t=", 0) != 0)
          throw std::runtime_error("graph line " + std::to_string(lineno) +
                                   ": unknown attribute '" + attr + "'");
        ts = std::stod(attr.substr(2));
      }
      g.add_node(name, ts);
      continue;
    }
    std::string arrow, to;
    if (!(ls >> arrow >> to) || arrow != "->")
      throw std::runtime_error("graph line " + std::to_string(lineno) +
                               ": expected 'FROM -> TO'");
    std::string extra;
    if (ls >> extra)
      throw std::runtime_error("graph line " + std::to_string(lineno) +
                               ": trailing input '" + extra + "'");
    g.add_edge(tok, to);
  }
  return g;
}

std::string print_graph(const LocalIndependenceGraph& g) {
  std::ostringstream out;
  // nodes sorted by name; edges in set (lexicographic) order
  std::vector<std::string> names = g.nodes();
  std::sort(names.begin(), names.end());
  for (const auto& n : names) {
    out << "node " << n;
    if (const auto ts = g.timestamp(n)) out << " t=" << format_double(*ts);
    out << "\n";
  }
  for (const auto& [from, to] : g.edges()) out << from << " -> " << to << "\n";
  return out.str();
}

LocalIndependenceGraph read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read graph file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_graph(ss.str());
}

}  // namespace evcf
