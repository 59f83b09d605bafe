#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace agmlab {

using VertexId = std::uint32_t;

struct Edge {
  VertexId u = 0;
  VertexId v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Returns (min, max) of the endpoints.
inline Edge normalized(Edge e) { return e.u <= e.v ? e : Edge{e.v, e.u}; }

/// Simple undirected graph on vertices 1..n with sorted adjacency lists.
class Graph {
 public:
  Graph() = default;
  explicit Graph(VertexId n);

  // Validates ids, rejects self-loops and duplicate edges.
  static Graph from_edges(VertexId n, std::span<const Edge> edges);

  VertexId n() const { return n_; }
  std::size_t edge_count() const { return edge_count_; }
  std::span<const VertexId> neighbors(VertexId v) const { return adj_.at(v - 1); }
  std::size_t degree(VertexId v) const { return adj_.at(v - 1).size(); }
  bool has_edge(VertexId u, VertexId v) const;

  // Every edge once, as (u, v) with u < v, in ascending order.
  std::vector<Edge> edges() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  VertexId n_ = 0;
  std::size_t edge_count_ = 0;
  std::vector<std::vector<VertexId>> adj_;
};

/// Edge-list text format: "n m", then m lines "u v" with u < v. Blank lines
/// and '#' comments are ignored. Throws FormatError with the offending line.
Graph read_graph(std::istream& in);
void write_graph(std::ostream& out, const Graph& g);

// Union-find oracles.
bool ground_truth_connected(const Graph& g);
std::vector<Edge> ground_truth_forest(const Graph& g);
// Per vertex (index v-1), the smallest vertex id in its component.
std::vector<VertexId> ground_truth_components(const Graph& g);
std::size_t component_count(std::span<const VertexId> labels);

// Test and sweep families.
Graph erdos_renyi(VertexId n, double p, std::uint64_t seed);
Graph star_graph(VertexId n);
Graph path_graph(VertexId n);
Graph two_cliques(VertexId n);

}  // namespace agmlab
