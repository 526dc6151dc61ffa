#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace evcf {

// Directed graph over process/variable names; cycles and self-loops allowed.
// An edge u -> v means v's mechanism may depend on u's history. Baseline
// nodes may carry a timestamp used for enumeration order.
class LocalIndependenceGraph {
 public:
  void add_node(const std::string& name, std::optional<double> timestamp = {});
  void add_edge(const std::string& from, const std::string& to);

  bool has_node(const std::string& name) const;
  bool has_edge(const std::string& from, const std::string& to) const;
  const std::vector<std::string>& nodes() const { return nodes_; }
  std::optional<double> timestamp(const std::string& name) const;
  const std::set<std::pair<std::string, std::string>>& edges() const { return edges_; }

 private:
  std::vector<std::string> nodes_;  // insertion order
  std::map<std::string, std::optional<double>> meta_;
  std::set<std::pair<std::string, std::string>> edges_;
};

// Direct dependencies of v (sources of edges into v), never including v
// itself unless the graph has a self-loop.
std::set<std::string> parents(const LocalIndependenceGraph& g, const std::string& v);

// cl(v) = {v} union parents(v): the variables whose history v's likelihood
// factor is allowed to read.
std::set<std::string> closure(const LocalIndependenceGraph& g, const std::string& v);

// B is locally independent of A given the graph iff no edge from any a in A
// points into any b in B.
bool is_locally_independent(const LocalIndependenceGraph& g,
                            const std::set<std::string>& sources,
                            const std::set<std::string>& targets);

// All keys of `timestamps` ordered by nondecreasing timestamp, ties broken
// lexicographically. Every key must be a node of g.
std::vector<std::string> baseline_order(const LocalIndependenceGraph& g,
                                        const std::map<std::string, double>& timestamps);

// Text format, one directive per line:
//   # comment
//   node NAME [t=<float>]
//   FROM -> TO
// Edges auto-declare their endpoints (without timestamps).
LocalIndependenceGraph parse_graph(const std::string& text);
std::string print_graph(const LocalIndependenceGraph& g);

LocalIndependenceGraph read_graph_file(const std::string& path);

}  // namespace evcf
