#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "agmlab/graph.hpp"
#include "agmlab/sketch.hpp"

namespace agmlab {

struct ForestDecode {
  std::vector<Edge> forest;
  // Per vertex (index v-1), the smallest vertex id in its decoded component.
  std::vector<VertexId> component_of;
  std::size_t component_count = 0;
  // Component count after each executed round; non-increasing.
  std::vector<std::size_t> components_after_round;
  // Repetition index read in each round (round j reads repetition j only).
  std::vector<std::size_t> reps_read;
};

/// Sequential Boruvka over the per-vertex sketches. Round j extracts one
/// edge per component from repetition j, in ascending root order, and merges
/// immediately. Stops early once a single component remains.
ForestDecode decode_spanning_forest(std::span<const VertexSketch> sketches,
                                    const SketchConfig& config);

bool decide_connected(std::span<const VertexSketch> sketches, const SketchConfig& config);

}  // namespace agmlab
