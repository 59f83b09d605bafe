#include "agmlab/sketch.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "agmlab/errors.hpp"
#include "agmlab/hash.hpp"

namespace agmlab {

unsigned label_field_width(VertexId n) {
  return static_cast<unsigned>(std::bit_width(n));
}

bool EdgeLabel::decodes_in_range(VertexId n) const {
  const unsigned w = label_field_width(n);
  if (w == 0 || packed_ >> (2 * w) != 0) return false;
  const std::uint64_t mask = (std::uint64_t{1} << w) - 1;
  const std::uint64_t u = packed_ >> w;
  const std::uint64_t v = packed_ & mask;
  return u >= 1 && u < v && v <= n;
}

Edge EdgeLabel::endpoints(VertexId n) const {
  const unsigned w = label_field_width(n);
  const std::uint64_t mask = (std::uint64_t{1} << w) - 1;
  return {static_cast<VertexId>(packed_ >> w), static_cast<VertexId>(packed_ & mask)};
}

EdgeLabel canonical_edge_label(VertexId u, VertexId v, VertexId n) {
  if (u == v) throw ConfigError("self-loop edge (" + std::to_string(u) + ")");
  if (u < 1 || v < 1 || u > n || v > n) {
    throw ConfigError("vertex id out of range [1," + std::to_string(n) + "]");
  }
  if (u > v) std::swap(u, v);
  const unsigned w = label_field_width(n);
  return EdgeLabel((static_cast<std::uint64_t>(u) << w) | v);
}

namespace {

unsigned ceil_log2(std::uint64_t x) {
  return x <= 1 ? 0u : static_cast<unsigned>(std::bit_width(x - 1));
}

}  // namespace

SketchConfig SketchConfig::defaults(VertexId n, std::uint64_t seed,
                                    unsigned rep_factor, unsigned fp_bits) {
  SketchConfig c;
  c.n = n;
  const std::uint64_t n2 = static_cast<std::uint64_t>(n) * n;
  c.levels = static_cast<std::uint16_t>(ceil_log2(n2) + 2);
  c.reps = static_cast<std::uint16_t>(std::max(1u, rep_factor * ceil_log2(n)));
  c.fp_bits = static_cast<std::uint8_t>(fp_bits);
  c.label_bits = static_cast<std::uint8_t>(2 * label_field_width(n));
  c.master_seed = seed;
  c.validate();
  return c;
}

void SketchConfig::validate() const {
  if (n < 1) throw ConfigError("sketch config: n must be >= 1");
  if (levels < 1) throw ConfigError("sketch config: levels must be >= 1");
  if (reps < 1) throw ConfigError("sketch config: reps must be >= 1");
  if (fp_bits < 1 || fp_bits > 64) {
    throw ConfigError("sketch config: fingerprint bits must be in [1,64]");
  }
  if (label_bits < 2 * label_field_width(n) || label_bits > 64) {
    throw ConfigError("sketch config: label_bits must be in [2*bit_width(n), 64]");
  }
}

std::uint64_t SketchConfig::identity_tag() const {
  std::uint64_t h = derive_seed(master_seed, "config", n, levels);
  return derive_seed(h, "config", reps, (std::uint64_t{fp_bits} << 8) | label_bits);
}

std::uint64_t SketchConfig::payload_bits() const {
  return std::uint64_t{reps} * levels * (std::uint64_t{label_bits} + fp_bits);
}

std::uint64_t level_key(std::uint64_t seed, std::size_t rep) {
  return derive_seed(seed, "lvl", rep);
}

std::uint64_t fingerprint_key(std::uint64_t seed, std::size_t rep) {
  return derive_seed(seed, "fp", rep);
}

unsigned level_of_code(std::uint64_t code, std::uint64_t lvl_key) {
  return level_from_hash(keyed_hash(lvl_key, code));
}

std::uint64_t fingerprint_of_code(std::uint64_t code, std::uint64_t fp_key,
                                  unsigned fp_bits) {
  const std::uint64_t h = keyed_hash(fp_key, code);
  return fp_bits >= 64 ? h : h & ((std::uint64_t{1} << fp_bits) - 1);
}

unsigned edge_level(EdgeLabel label, std::size_t rep, std::uint64_t seed) {
  return level_of_code(label.packed(), level_key(seed, rep));
}

std::uint64_t fingerprint(EdgeLabel label, std::size_t rep, std::uint64_t seed,
                          unsigned fp_bits) {
  return fingerprint_of_code(label.packed(), fingerprint_key(seed, rep), fp_bits);
}

SketchKeys::SketchKeys(const SketchConfig& config) {
  level.resize(config.reps);
  fp.resize(config.reps);
  for (std::size_t r = 0; r < config.reps; ++r) {
    level[r] = level_key(config.master_seed, r);
    fp[r] = fingerprint_key(config.master_seed, r);
  }
}

VertexSketch::VertexSketch(const SketchConfig& config)
    : config_(config),
      cells_(static_cast<std::size_t>(config.reps) * config.levels) {
  config_.validate();
}

bool VertexSketch::is_zero() const {
  return std::all_of(cells_.begin(), cells_.end(),
                     [](const SketchCell& c) { return c == SketchCell{}; });
}

bool VertexSketch::rep_is_zero(std::size_t rep) const {
  const auto row = std::span(cells_).subspan(rep * config_.levels, config_.levels);
  return std::all_of(row.begin(), row.end(),
                     [](const SketchCell& c) { return c == SketchCell{}; });
}

void VertexSketch::toggle(EdgeLabel label, std::span<const std::uint64_t> lvl_keys,
                          std::span<const std::uint64_t> fp_keys) {
  const std::uint64_t code = label.packed();
  const unsigned top_cap = config_.levels - 1u;
  for (std::size_t r = 0; r < config_.reps; ++r) {
    const unsigned top = std::min(level_of_code(code, lvl_keys[r]), top_cap);
    const std::uint64_t fp = fingerprint_of_code(code, fp_keys[r], config_.fp_bits);
    SketchCell* row = &cells_[r * config_.levels];
    for (unsigned i = 0; i <= top; ++i) {
      row[i].xor_label ^= code;
      row[i].xor_fp ^= fp;
    }
  }
}

void VertexSketch::toggle(EdgeLabel label) {
  const SketchKeys keys(config_);
  toggle(label, keys.level, keys.fp);
}

void VertexSketch::merge_from(const VertexSketch& other) {
  if (!(config_ == other.config_)) {
    throw ConfigError("merge: sketches built from different configs");
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    cells_[i].xor_label ^= other.cells_[i].xor_label;
    cells_[i].xor_fp ^= other.cells_[i].xor_fp;
  }
}

VertexSketch vertex_sketch(std::span<const VertexId> neighbors, VertexId vertex,
                           const SketchConfig& config) {
  VertexSketch sketch(config);
  const SketchKeys keys(config);
  for (VertexId w : neighbors) {
    sketch.toggle(canonical_edge_label(vertex, w, config.n), keys.level, keys.fp);
  }
  return sketch;
}

VertexSketch edge_set_sketch(std::span<const Edge> edges, const SketchConfig& config) {
  VertexSketch sketch(config);
  const SketchKeys keys(config);
  for (const Edge& e : edges) {
    sketch.toggle(canonical_edge_label(e.u, e.v, config.n), keys.level, keys.fp);
  }
  return sketch;
}

VertexSketch merge(const VertexSketch& a, const VertexSketch& b) {
  VertexSketch out = a;
  out.merge_from(b);
  return out;
}

Extraction try_extract(const VertexSketch& sketch, std::size_t rep) {
  const SketchConfig& cfg = sketch.config();
  if (rep >= cfg.reps) throw ConfigError("try_extract: repetition out of range");
  if (sketch.rep_is_zero(rep)) return {};
  const std::uint64_t key = fingerprint_key(cfg.master_seed, rep);
  for (std::size_t i = 0; i < cfg.levels; ++i) {
    const SketchCell& c = sketch.cell(rep, i);
    if (c.xor_label == 0) continue;
    const EdgeLabel candidate(c.xor_label);
    if (fingerprint_of_code(c.xor_label, key, cfg.fp_bits) != c.xor_fp) continue;
    if (!candidate.decodes_in_range(cfg.n)) continue;
    return {ExtractStatus::Edge, candidate, static_cast<int>(i)};
  }
  return {ExtractStatus::Ambiguous, EdgeLabel{}, -1};
}

std::vector<VertexSketch> sketch_graph(const Graph& g, const SketchConfig& config) {
  if (config.n != g.n()) throw ConfigError("sketch_graph: config n != graph n");
  std::vector<VertexSketch> sketches(g.n(), VertexSketch(config));
  const SketchKeys keys(config);
  const unsigned top_cap = config.levels - 1u;
  for (const Edge& e : g.edges()) {
    const std::uint64_t code = canonical_edge_label(e.u, e.v, g.n()).packed();
    VertexSketch& a = sketches[e.u - 1];
    VertexSketch& b = sketches[e.v - 1];
    for (std::size_t r = 0; r < config.reps; ++r) {
      const unsigned top = std::min(level_of_code(code, keys.level[r]), top_cap);
      const std::uint64_t fp = fingerprint_of_code(code, keys.fp[r], config.fp_bits);
      for (unsigned i = 0; i <= top; ++i) {
        SketchCell& ca = a.cell_mut(r, i);
        SketchCell& cb = b.cell_mut(r, i);
        ca.xor_label ^= code;
        ca.xor_fp ^= fp;
        cb.xor_label ^= code;
        cb.xor_fp ^= fp;
      }
    }
  }
  return sketches;
}

namespace {

void put_le(std::vector<std::uint8_t>& out, std::uint64_t value, unsigned bytes) {
  for (unsigned i = 0; i < bytes; ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t& pos,
                     unsigned bytes) {
  if (pos + bytes > in.size()) throw ConfigError("sketch bytes truncated");
  std::uint64_t v = 0;
  for (unsigned i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(in[pos + i]) << (8 * i);
  }
  pos += bytes;
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize(const VertexSketch& sketch) {
  const SketchConfig& c = sketch.config();
  const unsigned fp_bytes = (c.fp_bits + 7u) / 8u;
  std::vector<std::uint8_t> out;
  out.reserve(9 + sketch.cells().size() * (8 + fp_bytes));
  put_le(out, c.n, 4);
  put_le(out, c.levels, 2);
  put_le(out, c.reps, 2);
  put_le(out, c.fp_bits, 1);
  for (const SketchCell& cell : sketch.cells()) {
    put_le(out, cell.xor_label, 8);
    put_le(out, cell.xor_fp, fp_bytes);
  }
  return out;
}

VertexSketch deserialize_sketch(std::span<const std::uint8_t> bytes,
                                const SketchConfig& expected) {
  std::size_t pos = 0;
  const auto n = static_cast<VertexId>(get_le(bytes, pos, 4));
  const auto levels = get_le(bytes, pos, 2);
  const auto reps = get_le(bytes, pos, 2);
  const auto fp_bits = get_le(bytes, pos, 1);
  if (n != expected.n || levels != expected.levels || reps != expected.reps ||
      fp_bits != expected.fp_bits) {
    throw ConfigError("sketch header does not match the expected config");
  }
  VertexSketch sketch(expected);
  const unsigned fp_bytes = (expected.fp_bits + 7u) / 8u;
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < levels; ++i) {
      SketchCell& cell = sketch.cell_mut(r, i);
      cell.xor_label = get_le(bytes, pos, 8);
      cell.xor_fp = get_le(bytes, pos, fp_bytes);
    }
  }
  if (pos != bytes.size()) throw ConfigError("trailing bytes after sketch payload");
  return sketch;
}

}  // namespace agmlab
