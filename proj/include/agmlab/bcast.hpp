#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "agmlab/graph.hpp"
#include "agmlab/message.hpp"
#include "agmlab/sketch.hpp"

namespace agmlab {

struct Verdict {
  bool connected = false;
  std::optional<std::vector<Edge>> forest;
};

/// One-round sketching scheme. encode sees only a vertex, its neighbors, n
/// and the shared seed; decide sees only the messages, n and the seed.
class SketchingScheme {
 public:
  virtual ~SketchingScheme() = default;
  virtual std::string name() const = 0;
  virtual Message encode(VertexId v, std::span<const VertexId> neighbors, VertexId n,
                         std::uint64_t seed) const = 0;
  virtual Verdict decide(std::span<const Message> messages, VertexId n,
                         std::uint64_t seed) const = 0;
};

struct AgmOptions {
  unsigned rep_factor = 4;
  unsigned fp_bits = 32;
  // Zero keeps the default.
  unsigned reps = 0;
  unsigned levels = 0;
  unsigned label_bits = 0;
};

/// Per-vertex AGM sketch, sent as bit-packed cells (label_bits + f each).
class AgmScheme final : public SketchingScheme {
 public:
  explicit AgmScheme(AgmOptions options = {}) : options_(options) {}
  std::string name() const override { return "agm"; }
  SketchConfig config_for(VertexId n, std::uint64_t seed) const;
  Message encode(VertexId v, std::span<const VertexId> neighbors, VertexId n,
                 std::uint64_t seed) const override;
  Verdict decide(std::span<const Message> messages, VertexId n,
                 std::uint64_t seed) const override;

  // Packing used by encode; exposed for the bindings and tests.
  Message pack(const VertexSketch& sketch) const;
  VertexSketch unpack(const Message& msg, const SketchConfig& config) const;

 private:
  AgmOptions options_;
};

/// Baseline: each player sends its full neighbor list; exact referee.
class AdjacencyScheme final : public SketchingScheme {
 public:
  std::string name() const override { return "adjacency"; }
  Message encode(VertexId v, std::span<const VertexId> neighbors, VertexId n,
                 std::uint64_t seed) const override;
  Verdict decide(std::span<const Message> messages, VertexId n,
                 std::uint64_t seed) const override;
};

// "agm" or "adjacency"; throws ConfigError otherwise.
std::unique_ptr<SketchingScheme> make_scheme(const std::string& name,
                                             AgmOptions agm = {});

struct MessageStats {
  std::vector<std::uint64_t> bits_per_player;
  std::uint64_t total_bits = 0;
  std::uint64_t max_bits = 0;
  // total_bits / n exactly, as a reduced-free pair and as a double.
  std::uint64_t avg_numerator() const { return total_bits; }
  std::uint64_t avg_denominator() const { return bits_per_player.size(); }
  double avg_bits() const;
};

struct RoundOptions {
  std::uint64_t cap_bits = std::uint64_t{1} << 20;
  unsigned threads = 1;
};

struct RoundResult {
  Verdict verdict;
  MessageStats stats;
};

// Throws CapExceeded when any message exceeds options.cap_bits.
RoundResult run_one_round(const Graph& g, const SketchingScheme& scheme,
                          std::uint64_t seed, RoundOptions options = {});

struct SweepRow {
  VertexId n = 0;
  double mean_avg_bits = 0;
  double success_rate = 0;
  double wall_ms = 0;
};

/// Erdos-Renyi trials with p = 2 ln n / n at each n. Trial i at size n uses
/// seeds derived from (seed, n, i), so rows do not depend on scheduling.
std::vector<SweepRow> sweep_sizes(std::span<const VertexId> n_list, std::size_t trials,
                                  const SketchingScheme& scheme, std::uint64_t seed,
                                  unsigned threads = 1);

// Header "n,mean_avg_bits,success_rate,wall_ms". Timing is written as 0
// when with_timing is false so the file is reproducible byte for byte.
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows,
                     bool with_timing = true);

}  // namespace agmlab
