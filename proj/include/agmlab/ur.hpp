#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agmlab/message.hpp"

namespace agmlab {

using Element = std::uint64_t;  // 0-based, in [0, U)

/// Schedule of the hard UR_dec distribution: U = m^3 split into m blocks of
/// B = m^2 elements, and the possible sizes t_0 < ... < t_{R-1} < m of T.
struct UrdecParams {
  std::uint64_t U = 0;
  std::uint64_t m = 0;
  std::uint64_t B = 0;
  double delta = 0;
  double log2_inv_delta = 0;
  double alpha = 0;
  std::size_t R = 0;
  std::vector<std::uint64_t> t;
  bool custom_schedule = false;
  // Non-fatal notes, e.g. delta outside the analytic window.
  std::vector<std::string> warnings;

  // ceil(m (1 - (1 - alpha)^r) + 2r) for any r, inside the table or not.
  std::uint64_t schedule_size(std::size_t r) const;
  std::uint64_t block_of(Element x) const { return x / B; }
};

/// Throws ConfigError when U is not a perfect cube, delta is outside (0, 1),
/// R < 1, or the table is not strictly increasing below m.
UrdecParams urdec_params(std::uint64_t U, double delta);
// Same, with delta given as log2(1/delta) to reach values below 1e-308.
UrdecParams urdec_params_log2(std::uint64_t U, double log2_inv_delta);

// Explicit t table over m blocks (t[0] must be 0); used for multi-round lab runs.
UrdecParams urdec_params_custom(std::uint64_t m, double delta,
                                std::vector<std::uint64_t> t);

/// Schedule with delta = 2^-256, valid at small U where realistic delta
/// values give R = 0.
inline constexpr double kDeskScheduleLog2InvDelta = 256.0;
UrdecParams urdec_desk_params(std::uint64_t U);

// urdec_params(U, delta), or the desk schedule with a warning when R < 1.
UrdecParams urdec_params_or_desk(std::uint64_t U, double delta);

enum class Part : std::uint8_t { InT = 0, P1 = 1, P2 = 2 };
enum class Side : std::uint8_t { P1 = 1, P2 = 2 };

struct UrdecInstance {
  std::uint64_t U = 0;
  std::uint64_t m = 0;
  std::uint64_t B = 0;
  double delta = 0;
  std::size_t r = 0;
  std::vector<Element> S;  // sorted; S[j] lies in block j
  std::vector<Element> T;  // sorted subset of S
  std::vector<Part> part;  // size U; InT exactly on T
  Side side = Side::P1;

  std::vector<Element> p1() const;
  std::vector<Element> p2() const;
  std::vector<Element> s_minus_t() const;
};

UrdecInstance sample_urdec(const UrdecParams& p, std::uint64_t seed);

// Empty string when every instance invariant holds, else the first violation.
std::string check_urdec_instance(const UrdecInstance& inst);

/// Text form: "U m delta r", then S, T and P1 as sorted id lists.
void write_urdec_instance(std::ostream& out, const UrdecInstance& inst);
UrdecInstance read_urdec_instance(std::istream& in);

/// Level sketch of a set over [U]: reps x levels cells of (XOR of codes,
/// XOR of fingerprints), bit-packed with code_bits + fp_bits per cell.
struct UrSketchConfig {
  std::uint64_t U = 0;
  unsigned reps = 1;
  unsigned levels = 1;
  unsigned code_bits = 1;
  unsigned fp_bits = 32;
  std::uint64_t seed = 0;

  std::uint64_t message_bits() const {
    return std::uint64_t{reps} * levels * (code_bits + fp_bits);
  }
};

struct UrSketchOptions {
  unsigned rep_factor = 2;
  // Zero keeps the default.
  unsigned reps = 0;
  unsigned levels = 0;
  unsigned fp_bits = 32;
};

// reps = rep_factor * ceil(log2(1/delta)), levels = ceil(log2 U) + 1.
UrSketchConfig ur_sketch_config(std::uint64_t U, double delta, std::uint64_t seed,
                                UrSketchOptions options = {});

Message ur_alice(std::span<const Element> S, const UrSketchConfig& config);
Message ur_alice(std::span<const Element> S, std::uint64_t U, double delta,
                 std::uint64_t seed);

// Removes T from the message by linearity, then tries repetitions in order.
std::optional<Element> ur_bob_search(const Message& msg, std::span<const Element> T,
                                     const UrSketchConfig& config);

// Side of the recovered element; P1 when the search fails.
Side ur_bob_decide(const Message& msg, std::span<const Element> T,
                   std::span<const Part> partition, const UrSketchConfig& config);

/// Deterministic one-way protocol (randomness already fixed inside).
struct OneWayProtocol {
  std::string name;
  std::function<std::vector<std::uint8_t>(std::span<const Element> S)> alice;
  std::function<Side(std::span<const Element> T, std::span<const Part> partition,
                     const std::vector<std::uint8_t>& msg)>
      bob_decide;
  std::function<std::optional<Element>(std::span<const Element> T,
                                       const std::vector<std::uint8_t>& msg)>
      bob_search;
};

OneWayProtocol ur_sketch_protocol(const UrSketchConfig& config, std::string name = "ur-sketch");

}  // namespace agmlab
