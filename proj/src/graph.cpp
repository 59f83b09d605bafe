#include "agmlab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "agmlab/dsu.hpp"
#include "agmlab/errors.hpp"
#include "agmlab/rng.hpp"

namespace agmlab {

Graph::Graph(VertexId n) : n_(n), adj_(n) {}

Graph Graph::from_edges(VertexId n, std::span<const Edge> edges) {
  Graph g(n);
  for (const Edge& e : edges) {
    if (e.u == e.v) {
      throw ConfigError("self-loop at vertex " + std::to_string(e.u));
    }
    if (e.u < 1 || e.v < 1 || e.u > n || e.v > n) {
      throw ConfigError("edge (" + std::to_string(e.u) + "," +
                        std::to_string(e.v) + ") out of range [1," +
                        std::to_string(n) + "]");
    }
    g.adj_[e.u - 1].push_back(e.v);
    g.adj_[e.v - 1].push_back(e.u);
  }
  for (auto& list : g.adj_) {
    std::sort(list.begin(), list.end());
    if (std::adjacent_find(list.begin(), list.end()) != list.end()) {
      throw ConfigError("duplicate edge in edge list");
    }
  }
  g.edge_count_ = edges.size();
  return g;
}

bool Graph::has_edge(VertexId u, VertexId v) const {
  if (u < 1 || u > n_) return false;
  const auto& list = adj_[u - 1];
  return std::binary_search(list.begin(), list.end(), v);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (VertexId u = 1; u <= n_; ++u) {
    for (VertexId v : adj_[u - 1]) {
      if (u < v) out.push_back({u, v});
    }
  }
  return out;
}

namespace {

// Next non-blank, non-comment line; false at EOF.
bool next_content_line(std::istream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

}  // namespace

Graph read_graph(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_content_line(in, line, lineno)) {
    throw FormatError(lineno, "missing \"n m\" header");
  }
  long long n = -1;
  long long m = -1;
  {
    std::istringstream header(line);
    std::string rest;
    if (!(header >> n >> m) || (header >> rest) || n < 0 || m < 0 ||
        n > 0xffffffffLL) {
      throw FormatError(lineno, "expected \"n m\" header");
    }
  }
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m));
  for (long long i = 0; i < m; ++i) {
    if (!next_content_line(in, line, lineno)) {
      throw FormatError(lineno, "expected " + std::to_string(m) +
                                    " edges, found " + std::to_string(i));
    }
    std::istringstream row(line);
    long long u = 0;
    long long v = 0;
    std::string rest;
    if (!(row >> u >> v) || (row >> rest)) {
      throw FormatError(lineno, "expected \"u v\"");
    }
    if (u < 1 || v > n || u >= v) {
      throw FormatError(lineno, "edge must satisfy 1 <= u < v <= n");
    }
    edges.push_back({static_cast<VertexId>(u), static_cast<VertexId>(v)});
  }
  if (next_content_line(in, line, lineno)) {
    throw FormatError(lineno, "trailing content after edge list");
  }
  try {
    return Graph::from_edges(static_cast<VertexId>(n), edges);
  } catch (const FormatError&) {
    throw;
  } catch (const ConfigError& e) {
    throw FormatError(lineno, e.what());
  }
}

void write_graph(std::ostream& out, const Graph& g) {
  out << g.n() << ' ' << g.edge_count() << '\n';
  for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

bool ground_truth_connected(const Graph& g) {
  if (g.n() <= 1) return true;
  DisjointSets dsu(g.n());
  for (const Edge& e : g.edges()) dsu.unite(e.u - 1, e.v - 1);
  return dsu.count() == 1;
}

std::vector<Edge> ground_truth_forest(const Graph& g) {
  DisjointSets dsu(g.n());
  std::vector<Edge> forest;
  for (const Edge& e : g.edges()) {
    if (dsu.unite(e.u - 1, e.v - 1)) forest.push_back(e);
  }
  return forest;
}

std::vector<VertexId> ground_truth_components(const Graph& g) {
  DisjointSets dsu(g.n());
  for (const Edge& e : g.edges()) dsu.unite(e.u - 1, e.v - 1);
  std::vector<VertexId> labels(g.n());
  for (VertexId v = 0; v < g.n(); ++v) {
    labels[v] = static_cast<VertexId>(dsu.find(v) + 1);
  }
  return labels;
}

std::size_t component_count(std::span<const VertexId> labels) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == i + 1) ++count;
  }
  return count;
}

Graph erdos_renyi(VertexId n, double p, std::uint64_t seed) {
  std::vector<Edge> edges;
  if (n >= 2 && p > 0.0) {
    Rng rng(seed);
    if (p >= 1.0) {
      for (VertexId u = 1; u <= n; ++u)
        for (VertexId v = u + 1; v <= n; ++v) edges.push_back({u, v});
    } else {
      // Batagelj-Brandes geometric skipping over pairs (w, v), w < v.
      const double log_q = std::log1p(-p);
      long long v = 1;
      long long w = -1;
      const long long nn = n;
      while (v < nn) {
        const double r = 1.0 - rng.uniform01();
        w += 1 + static_cast<long long>(std::floor(std::log(r) / log_q));
        while (w >= v && v < nn) {
          w -= v;
          ++v;
        }
        if (v < nn) {
          edges.push_back({static_cast<VertexId>(w + 1), static_cast<VertexId>(v + 1)});
        }
      }
    }
  }
  return Graph::from_edges(n, edges);
}

Graph star_graph(VertexId n) {
  std::vector<Edge> edges;
  for (VertexId v = 2; v <= n; ++v) edges.push_back({1, v});
  return Graph::from_edges(n, edges);
}

Graph path_graph(VertexId n) {
  std::vector<Edge> edges;
  for (VertexId v = 1; v < n; ++v) edges.push_back({v, v + 1});
  return Graph::from_edges(n, edges);
}

Graph two_cliques(VertexId n) {
  std::vector<Edge> edges;
  const VertexId half = n / 2;
  for (VertexId u = 1; u <= half; ++u)
    for (VertexId v = u + 1; v <= half; ++v) edges.push_back({u, v});
  for (VertexId u = half + 1; u <= n; ++u)
    for (VertexId v = u + 1; v <= n; ++v) edges.push_back({u, v});
  return Graph::from_edges(n, edges);
}

}  // namespace agmlab
