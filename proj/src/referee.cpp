#include "agmlab/referee.hpp"

#include <optional>

#include "agmlab/dsu.hpp"
#include "agmlab/errors.hpp"

namespace agmlab {

ForestDecode decode_spanning_forest(std::span<const VertexSketch> sketches,
                                    const SketchConfig& config) {
  const VertexId n = config.n;
  if (sketches.size() != n) {
    throw ConfigError("referee: expected one sketch per vertex");
  }
  for (const auto& s : sketches) {
    if (!(s.config() == config)) throw ConfigError("referee: sketch config mismatch");
  }

  ForestDecode out;
  DisjointSets dsu(n);
  // Indexed by root (0-based); only root entries are meaningful.
  std::vector<std::optional<VertexSketch>> comp(n);
  for (VertexId v = 0; v < n; ++v) comp[v] = sketches[v];

  for (std::size_t round = 0; round < config.reps && dsu.count() > 1; ++round) {
    std::vector<std::size_t> roots;
    for (std::size_t v = 0; v < n; ++v) {
      if (dsu.find(v) == v) roots.push_back(v);
    }
    std::vector<char> processed(n, 0);
    for (std::size_t root0 : roots) {
      const std::size_t root = dsu.find(root0);
      if (processed[root]) continue;
      processed[root] = 1;
      const Extraction ex = try_extract(*comp[root], round);
      if (ex.status != ExtractStatus::Edge) continue;
      const Edge e = ex.label.endpoints(n);
      const std::size_t a = dsu.find(e.u - 1);
      const std::size_t b = dsu.find(e.v - 1);
      // A genuine cut edge has exactly one endpoint inside the component.
      if (a == b || (a != root && b != root)) continue;
      const std::size_t other = a == root ? b : a;
      dsu.unite(root, other);
      const std::size_t keep = dsu.find(root);
      const std::size_t gone = keep == root ? other : root;
      comp[keep]->merge_from(*comp[gone]);
      comp[gone].reset();
      processed[keep] = processed[root] | processed[other];
      out.forest.push_back(e);
      if (dsu.count() == 1) break;
    }
    out.components_after_round.push_back(dsu.count());
    out.reps_read.push_back(round);
  }

  out.component_of.resize(n);
  for (VertexId v = 0; v < n; ++v) {
    out.component_of[v] = static_cast<VertexId>(dsu.find(v) + 1);
  }
  out.component_count = dsu.count();
  return out;
}

bool decide_connected(std::span<const VertexSketch> sketches, const SketchConfig& config) {
  return decode_spanning_forest(sketches, config).component_count == 1;
}

}  // namespace agmlab
