#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "agmlab/graph.hpp"

namespace agmlab {

/// Canonical label of an undirected edge: the smaller endpoint in the high
/// field, the larger in the low field, each field bit_width(n) bits wide.
/// Zero is reserved for "no edge" and never produced for a real edge.
class EdgeLabel {
 public:
  constexpr EdgeLabel() = default;
  constexpr explicit EdgeLabel(std::uint64_t packed) : packed_(packed) {}

  std::uint64_t packed() const { return packed_; }
  bool empty() const { return packed_ == 0; }

  // Endpoints (u < v) when the label decodes to a pair inside [1, n].
  bool decodes_in_range(VertexId n) const;
  Edge endpoints(VertexId n) const;

  friend bool operator==(EdgeLabel, EdgeLabel) = default;
  friend auto operator<=>(EdgeLabel, EdgeLabel) = default;

 private:
  std::uint64_t packed_ = 0;
};

unsigned label_field_width(VertexId n);

// Throws ConfigError when u == v or either id is outside [1, n].
EdgeLabel canonical_edge_label(VertexId u, VertexId v, VertexId n);

/// Shared parameters of every per-vertex sketch. Players and the referee
/// that build from equal configs derive identical randomness.
struct SketchConfig {
  VertexId n = 0;
  std::uint16_t levels = 1;
  std::uint16_t reps = 1;
  std::uint8_t fp_bits = 32;
  // Accounted width of one xor_label field; defaults to 2 * bit_width(n).
  std::uint8_t label_bits = 0;
  std::uint64_t master_seed = 0;

  // L = ceil(log2(n^2)) + 2, R = rep_factor * ceil(log2 n) (at least 1).
  static SketchConfig defaults(VertexId n, std::uint64_t seed,
                               unsigned rep_factor = 4, unsigned fp_bits = 32);

  void validate() const;
  std::uint64_t identity_tag() const;
  // Payload bits R * L * (label_bits + f); the wire header is excluded.
  std::uint64_t payload_bits() const;

  friend bool operator==(const SketchConfig&, const SketchConfig&) = default;
};

// Per-repetition keys derived from the master seed ("lvl" and "fp" tags).
std::uint64_t level_key(std::uint64_t seed, std::size_t rep);
std::uint64_t fingerprint_key(std::uint64_t seed, std::size_t rep);

// Geometric level from a keyed hash: Pr[level >= i] = 2^-i.
inline unsigned level_from_hash(std::uint64_t h) {
  return h == 0 ? 64u : static_cast<unsigned>(__builtin_ctzll(h));
}
unsigned level_of_code(std::uint64_t code, std::uint64_t lvl_key);
std::uint64_t fingerprint_of_code(std::uint64_t code, std::uint64_t fp_key,
                                  unsigned fp_bits);

/// Highest level at which the edge survives in repetition `rep`; the edge
/// survives at every level i <= edge_level (nested subsampling).
unsigned edge_level(EdgeLabel label, std::size_t rep, std::uint64_t seed);

std::uint64_t fingerprint(EdgeLabel label, std::size_t rep, std::uint64_t seed,
                          unsigned fp_bits);

struct SketchCell {
  std::uint64_t xor_label = 0;
  std::uint64_t xor_fp = 0;
  friend bool operator==(const SketchCell&, const SketchCell&) = default;
};

/// R x L grid of XOR cells over an edge multiset. Linear over GF(2):
/// merging is cell-wise XOR, so shared edges of merged vertices cancel.
class VertexSketch {
 public:
  explicit VertexSketch(const SketchConfig& config);

  const SketchConfig& config() const { return config_; }
  const SketchCell& cell(std::size_t rep, std::size_t level) const {
    return cells_[rep * config_.levels + level];
  }
  SketchCell& cell_mut(std::size_t rep, std::size_t level) {
    return cells_[rep * config_.levels + level];
  }
  std::span<const SketchCell> cells() const { return cells_; }

  bool is_zero() const;
  bool rep_is_zero(std::size_t rep) const;

  // Adds (equivalently removes) one edge using precomputed per-rep keys.
  void toggle(EdgeLabel label, std::span<const std::uint64_t> lvl_keys,
              std::span<const std::uint64_t> fp_keys);
  void toggle(EdgeLabel label);

  void merge_from(const VertexSketch& other);

  friend bool operator==(const VertexSketch&, const VertexSketch&) = default;

 private:
  SketchConfig config_;
  std::vector<SketchCell> cells_;
};

/// Precomputed per-repetition keys for a config.
struct SketchKeys {
  explicit SketchKeys(const SketchConfig& config);
  std::vector<std::uint64_t> level;
  std::vector<std::uint64_t> fp;
};

// Throws ConfigError on self-loops or out-of-range ids.
VertexSketch vertex_sketch(std::span<const VertexId> neighbors, VertexId vertex,
                           const SketchConfig& config);

/// Sketch of an explicit edge multiset (edges listed twice cancel).
VertexSketch edge_set_sketch(std::span<const Edge> edges, const SketchConfig& config);

// Throws ConfigError when the configs differ.
VertexSketch merge(const VertexSketch& a, const VertexSketch& b);

enum class ExtractStatus { Edge, Empty, Ambiguous };

struct Extraction {
  ExtractStatus status = ExtractStatus::Empty;
  EdgeLabel label;
  int level = -1;
};

/// One-sparse recovery on repetition `rep`: the first level (ascending)
/// whose cell passes the fingerprint test and decodes in range.
Extraction try_extract(const VertexSketch& sketch, std::size_t rep);

/// All per-vertex sketches of a graph (index v-1). Bit-identical to calling
/// vertex_sketch per vertex; each edge's level is hashed once.
std::vector<VertexSketch> sketch_graph(const Graph& g, const SketchConfig& config);

// Little-endian wire format: n u32, L u16, R u16, f u8, then cells row-major
// with xor_label as 8 bytes and xor_fp as ceil(f/8) bytes.
std::vector<std::uint8_t> serialize(const VertexSketch& sketch);
VertexSketch deserialize_sketch(std::span<const std::uint8_t> bytes,
                                const SketchConfig& expected);

}  // namespace agmlab
