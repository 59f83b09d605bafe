#include <doctest.h>

#include <cmath>
#include <sstream>

#include "agmlab/errors.hpp"
#include "agmlab/graph.hpp"

using namespace agmlab;

TEST_CASE("from_edges validates and sorts") {
  const std::vector<Edge> edges{{3, 1}, {2, 3}};
  const Graph g = Graph::from_edges(3, edges);
  CHECK(g.edge_count() == 2);
  CHECK(g.has_edge(1, 3));
  CHECK(g.has_edge(3, 2));
  CHECK_FALSE(g.has_edge(1, 2));
  CHECK(g.edges() == std::vector<Edge>{{1, 3}, {2, 3}});

  const std::vector<Edge> loop{{2, 2}};
  CHECK_THROWS_AS(Graph::from_edges(3, loop), ConfigError);
  const std::vector<Edge> dup{{1, 2}, {2, 1}};
  CHECK_THROWS_AS(Graph::from_edges(3, dup), ConfigError);
  const std::vector<Edge> range{{1, 4}};
  CHECK_THROWS_AS(Graph::from_edges(3, range), ConfigError);
}

TEST_CASE("graph text round trip and line-numbered errors") {
  const Graph g = erdos_renyi(40, 0.2, 7);
  std::stringstream ss;
  write_graph(ss, g);
  CHECK(read_graph(ss) == g);

  std::istringstream ok("# header comment\n3 2\n\n1 2\n# mid\n2 3\n");
  CHECK(read_graph(ok).edge_count() == 2);

  std::istringstream bad("3 2\n1 2\n3 2\n");
  try {
    read_graph(bad);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream short_input("3 2\n1 2\n");
  CHECK_THROWS_AS(read_graph(short_input), FormatError);
}

TEST_CASE("union-find oracles") {
  CHECK(ground_truth_connected(path_graph(5)));
  CHECK_FALSE(ground_truth_connected(Graph(2)));
  CHECK(ground_truth_connected(star_graph(64)));
  CHECK_FALSE(ground_truth_connected(two_cliques(64)));
  CHECK(ground_truth_forest(path_graph(5)).size() == 4);
  const auto labels = ground_truth_components(two_cliques(8));
  CHECK(component_count(labels) == 2);
  CHECK(labels[7] == 5);
}

TEST_CASE("erdos_renyi edge count matches p") {
  // Expected edges = p * C(n,2); check within 4 sigma over a few seeds.
  const VertexId n = 300;
  const double p = 0.05;
  const double pairs = n * (n - 1) / 2.0;
  double total = 0;
  for (std::uint64_t s = 0; s < 10; ++s) total += erdos_renyi(n, p, s).edge_count();
  const double mean = pairs * p;
  const double sd = std::sqrt(pairs * p * (1 - p) / 10);
  CHECK(std::abs(total / 10 - mean) < 4 * sd);
  CHECK(erdos_renyi(50, 0.1, 3) == erdos_renyi(50, 0.1, 3));
  CHECK(erdos_renyi(20, 1.0, 1).edge_count() == 190);
  CHECK(erdos_renyi(20, 0.0, 1).edge_count() == 0);
}
