#include "agmlab/bcast.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "agmlab/bits.hpp"
#include "agmlab/dsu.hpp"
#include "agmlab/errors.hpp"
#include "agmlab/hash.hpp"
#include "agmlab/parallel.hpp"
#include "agmlab/referee.hpp"

namespace agmlab {

SketchConfig AgmScheme::config_for(VertexId n, std::uint64_t seed) const {
  SketchConfig c = SketchConfig::defaults(n, seed, options_.rep_factor, options_.fp_bits);
  if (options_.reps) c.reps = static_cast<std::uint16_t>(options_.reps);
  if (options_.levels) c.levels = static_cast<std::uint16_t>(options_.levels);
  if (options_.label_bits) c.label_bits = static_cast<std::uint8_t>(options_.label_bits);
  c.validate();
  return c;
}

Message AgmScheme::pack(const VertexSketch& sketch) const {
  const SketchConfig& c = sketch.config();
  BitWriter w;
  for (const SketchCell& cell : sketch.cells()) {
    w.put(cell.xor_label, c.label_bits);
    w.put(cell.xor_fp, c.fp_bits);
  }
  Message m;
  m.bits = w.bits();
  m.bytes = w.take();
  return m;
}

VertexSketch AgmScheme::unpack(const Message& msg, const SketchConfig& config) const {
  if (msg.bits != config.payload_bits()) {
    throw ConfigError("agm message length does not match the config");
  }
  VertexSketch s(config);
  BitReader r(msg.bytes);
  for (std::size_t rep = 0; rep < config.reps; ++rep) {
    for (std::size_t i = 0; i < config.levels; ++i) {
      SketchCell& cell = s.cell_mut(rep, i);
      cell.xor_label = r.get(config.label_bits);
      cell.xor_fp = r.get(config.fp_bits);
    }
  }
  return s;
}

Message AgmScheme::encode(VertexId v, std::span<const VertexId> neighbors, VertexId n,
                          std::uint64_t seed) const {
  return pack(vertex_sketch(neighbors, v, config_for(n, seed)));
}

Verdict AgmScheme::decide(std::span<const Message> messages, VertexId n,
                          std::uint64_t seed) const {
  const SketchConfig c = config_for(n, seed);
  std::vector<VertexSketch> sketches;
  sketches.reserve(messages.size());
  for (const Message& m : messages) sketches.push_back(unpack(m, c));
  ForestDecode dec = decode_spanning_forest(sketches, c);
  return {dec.component_count == 1, std::move(dec.forest)};
}

namespace {

unsigned id_width(VertexId n) { return static_cast<unsigned>(std::bit_width(n)); }

}  // namespace

Message AdjacencyScheme::encode(VertexId, std::span<const VertexId> neighbors,
                                VertexId n, std::uint64_t) const {
  BitWriter w;
  const unsigned width = id_width(n);
  w.put(neighbors.size(), width);
  for (VertexId x : neighbors) w.put(x, width);
  Message m;
  m.bits = w.bits();
  m.bytes = w.take();
  return m;
}

Verdict AdjacencyScheme::decide(std::span<const Message> messages, VertexId n,
                                std::uint64_t) const {
  DisjointSets dsu(n);
  std::vector<Edge> forest;
  const unsigned width = id_width(n);
  for (VertexId v = 1; v <= messages.size(); ++v) {
    BitReader r(messages[v - 1].bytes);
    const auto deg = r.get(width);
    for (std::uint64_t k = 0; k < deg; ++k) {
      const auto w = static_cast<VertexId>(r.get(width));
      if (w < 1 || w > n) throw ConfigError("adjacency message: id out of range");
      if (dsu.unite(v - 1, w - 1)) forest.push_back(normalized({v, w}));
    }
  }
  return {n <= 1 || dsu.count() == 1, std::move(forest)};
}

std::unique_ptr<SketchingScheme> make_scheme(const std::string& name, AgmOptions agm) {
  if (name == "agm") return std::make_unique<AgmScheme>(agm);
  if (name == "adjacency") return std::make_unique<AdjacencyScheme>();
  throw ConfigError("unknown scheme '" + name + "' (expected agm or adjacency)");
}

double MessageStats::avg_bits() const {
  return bits_per_player.empty()
             ? 0.0
             : static_cast<double>(total_bits) / static_cast<double>(bits_per_player.size());
}

RoundResult run_one_round(const Graph& g, const SketchingScheme& scheme,
                          std::uint64_t seed, RoundOptions options) {
  const VertexId n = g.n();
  std::vector<Message> messages(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    const auto v = static_cast<VertexId>(i + 1);
    messages[i] = scheme.encode(v, g.neighbors(v), n, seed);
  });
  RoundResult out;
  out.stats.bits_per_player.resize(n);
  for (VertexId i = 0; i < n; ++i) {
    const std::uint64_t bits = messages[i].bits;
    if (bits > options.cap_bits) {
      throw CapExceeded("player " + std::to_string(i + 1) + " message of " +
                        std::to_string(bits) + " bits exceeds the cap of " +
                        std::to_string(options.cap_bits));
    }
    out.stats.bits_per_player[i] = bits;
    out.stats.total_bits += bits;
    out.stats.max_bits = std::max(out.stats.max_bits, bits);
  }
  out.verdict = scheme.decide(messages, n, seed);
  return out;
}

std::vector<SweepRow> sweep_sizes(std::span<const VertexId> n_list, std::size_t trials,
                                  const SketchingScheme& scheme, std::uint64_t seed,
                                  unsigned threads) {
  for (std::size_t i = 1; i < n_list.size(); ++i) {
    if (n_list[i] < n_list[i - 1]) throw ConfigError("sweep: n list must be ascending");
  }
  if (trials == 0) throw ConfigError("sweep: trials must be >= 1");
  std::vector<SweepRow> rows;
  for (VertexId n : n_list) {
    if (n < 2) throw ConfigError("sweep: n must be >= 2");
    const auto start = std::chrono::steady_clock::now();
    const double p = std::min(1.0, 2.0 * std::log(static_cast<double>(n)) / n);
    std::vector<double> avg(trials);
    std::vector<char> ok(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
      const Graph g = erdos_renyi(n, p, derive_seed(seed, "sweep-graph", n, t));
      const auto res = run_one_round(g, scheme, derive_seed(seed, "sweep-sketch", n, t));
      avg[t] = res.stats.avg_bits();
      ok[t] = res.verdict.connected == ground_truth_connected(g);
    });
    SweepRow row;
    row.n = n;
    for (std::size_t t = 0; t < trials; ++t) {
      row.mean_avg_bits += avg[t];
      row.success_rate += ok[t];
    }
    row.mean_avg_bits /= static_cast<double>(trials);
    row.success_rate /= static_cast<double>(trials);
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows, bool with_timing) {
  out << "n,mean_avg_bits,success_rate,wall_ms\n";
  char buf[128];
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%u,%.6f,%.6f,%.3f\n", r.n, r.mean_avg_bits,
                  r.success_rate, with_timing ? r.wall_ms : 0.0);
    out << buf;
  }
}

}  // namespace agmlab
