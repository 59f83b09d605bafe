#include "agmlab/ur.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "agmlab/bits.hpp"
#include "agmlab/errors.hpp"
#include "agmlab/hash.hpp"
#include "agmlab/rng.hpp"
#include "agmlab/sketch.hpp"

namespace agmlab {

namespace {

unsigned ceil_log2(std::uint64_t x) {
  return x <= 1 ? 0u : static_cast<unsigned>(std::bit_width(x - 1));
}

std::uint64_t exact_cube_root(std::uint64_t U) {
  auto m = static_cast<std::uint64_t>(std::llround(std::cbrt(static_cast<double>(U))));
  for (std::uint64_t c = m > 0 ? m - 1 : 0; c <= m + 1; ++c) {
    if (c * c * c == U) return c;
  }
  return 0;
}

// Shared ceil with a tolerance so exact integers are not bumped by rounding.
std::uint64_t ceil_tol(double x) {
  return static_cast<std::uint64_t>(std::max(0.0, std::ceil(x - 1e-9)));
}

void check_table(const UrdecParams& p) {
  if (p.t.empty() || p.t[0] != 0) throw ConfigError("urdec schedule: t_0 must be 0");
  for (std::size_t r = 1; r < p.t.size(); ++r) {
    if (p.t[r] <= p.t[r - 1]) {
      throw ConfigError("urdec schedule: t must be strictly increasing (r=" +
                        std::to_string(r) + ")");
    }
  }
  if (p.t.back() >= p.m) {
    throw ConfigError("urdec schedule: t_{R-1}=" + std::to_string(p.t.back()) +
                      " is not below m=" + std::to_string(p.m));
  }
}

}  // namespace

std::uint64_t UrdecParams::schedule_size(std::size_t r) const {
  const double x = static_cast<double>(m) * (1.0 - std::pow(1.0 - alpha, r)) + 2.0 * r;
  return ceil_tol(x);
}

UrdecParams urdec_params_log2(std::uint64_t U, double log2_inv_delta) {
  if (!(log2_inv_delta > 0) || !std::isfinite(log2_inv_delta)) {
    throw ConfigError("urdec: delta must lie in (0, 1)");
  }
  const std::uint64_t m = exact_cube_root(U);
  if (m < 2) throw ConfigError("urdec: U=" + std::to_string(U) + " is not a cube >= 8");
  UrdecParams p;
  p.U = U;
  p.m = m;
  p.B = m * m;
  p.log2_inv_delta = log2_inv_delta;
  p.delta = std::exp2(-log2_inv_delta);
  p.alpha = 16.0 / log2_inv_delta;
  const double r_real = std::log2(static_cast<double>(m)) / (16.0 * p.alpha);
  p.R = static_cast<std::size_t>(std::floor(r_real + 1e-12));
  if (p.R < 1) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "urdec: degenerate schedule, R = floor(log2(m)/(16 alpha)) = 0 "
                  "(m=%llu, alpha=%.6g)",
                  static_cast<unsigned long long>(m), p.alpha);
    throw ConfigError(buf);
  }
  for (std::size_t r = 0; r < p.R; ++r) p.t.push_back(p.schedule_size(r));
  check_table(p);

  const double log2U = std::log2(static_cast<double>(U));
  const bool above_floor = log2_inv_delta * std::log(2.0) < std::pow(U, 0.25);
  const bool below_ceiling = log2_inv_delta > 4.0 * std::log2(log2U);
  if (!above_floor || !below_ceiling) {
    p.warnings.push_back("delta outside the analytic window exp(-U^(1/4)) < delta < 1/log2^4(U)");
  }
  return p;
}

UrdecParams urdec_params(std::uint64_t U, double delta) {
  if (!(delta > 0 && delta < 1)) throw ConfigError("urdec: delta must lie in (0, 1)");
  return urdec_params_log2(U, -std::log2(delta));
}

UrdecParams urdec_params_custom(std::uint64_t m, double delta,
                                std::vector<std::uint64_t> t) {
  if (!(delta > 0 && delta < 1)) throw ConfigError("urdec: delta must lie in (0, 1)");
  if (m < 2) throw ConfigError("urdec: m must be >= 2");
  UrdecParams p;
  p.m = m;
  p.B = m * m;
  p.U = m * m * m;
  p.delta = delta;
  p.log2_inv_delta = -std::log2(delta);
  p.alpha = 16.0 / p.log2_inv_delta;
  p.R = t.size();
  p.t = std::move(t);
  p.custom_schedule = true;
  check_table(p);
  return p;
}

UrdecParams urdec_desk_params(std::uint64_t U) {
  return urdec_params_log2(U, kDeskScheduleLog2InvDelta);
}

UrdecParams urdec_params_or_desk(std::uint64_t U, double delta) {
  if (!(delta > 0 && delta < 1)) throw ConfigError("urdec: delta must lie in (0, 1)");
  try {
    return urdec_params(U, delta);
  } catch (const ConfigError& e) {
    if (exact_cube_root(U) < 2) throw;
    UrdecParams p = urdec_desk_params(U);
    p.warnings.insert(p.warnings.begin(),
                      std::string(e.what()) + "; using the desk schedule delta = 2^-256");
    return p;
  }
}

std::vector<Element> UrdecInstance::p1() const {
  std::vector<Element> out;
  for (Element x = 0; x < part.size(); ++x) {
    if (part[x] == Part::P1) out.push_back(x);
  }
  return out;
}

std::vector<Element> UrdecInstance::p2() const {
  std::vector<Element> out;
  for (Element x = 0; x < part.size(); ++x) {
    if (part[x] == Part::P2) out.push_back(x);
  }
  return out;
}

std::vector<Element> UrdecInstance::s_minus_t() const {
  std::vector<Element> out;
  std::set_difference(S.begin(), S.end(), T.begin(), T.end(), std::back_inserter(out));
  return out;
}

UrdecInstance sample_urdec(const UrdecParams& p, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "urdec"));
  UrdecInstance inst;
  inst.U = p.U;
  inst.m = p.m;
  inst.B = p.B;
  inst.delta = p.delta;
  for (std::uint64_t j = 0; j < p.m; ++j) inst.S.push_back(j * p.B + rng.below(p.B));
  inst.r = rng.below(p.R);
  for (auto idx : rng.sample_indices(p.m, p.t[inst.r])) inst.T.push_back(inst.S[idx]);
  std::sort(inst.T.begin(), inst.T.end());
  inst.side = rng.coin() ? Side::P2 : Side::P1;
  inst.part.assign(p.U, Part::P1);
  std::size_t s_pos = 0;
  std::size_t t_pos = 0;
  for (Element x = 0; x < p.U; ++x) {
    if (t_pos < inst.T.size() && inst.T[t_pos] == x) {
      inst.part[x] = Part::InT;
      ++t_pos;
      ++s_pos;
    } else if (s_pos < inst.S.size() && inst.S[s_pos] == x) {
      inst.part[x] = static_cast<Part>(inst.side);
      ++s_pos;
    } else {
      inst.part[x] = rng.coin() ? Part::P2 : Part::P1;
    }
  }
  return inst;
}

std::string check_urdec_instance(const UrdecInstance& inst) {
  if (inst.m < 2 || inst.m * inst.m * inst.m != inst.U) return "U is not m^3";
  if (inst.B * inst.m != inst.U) return "m * B != U";
  if (inst.S.size() != inst.m) return "S does not have m elements";
  for (std::uint64_t j = 0; j < inst.m; ++j) {
    if (inst.S[j] / inst.B != j) return "S is not one element per block";
  }
  if (!std::is_sorted(inst.T.begin(), inst.T.end()) ||
      std::adjacent_find(inst.T.begin(), inst.T.end()) != inst.T.end()) {
    return "T is not a sorted set";
  }
  if (!std::includes(inst.S.begin(), inst.S.end(), inst.T.begin(), inst.T.end())) {
    return "T is not a subset of S";
  }
  if (inst.T.size() >= inst.S.size()) return "T is not a proper subset of S";
  if (inst.part.size() != inst.U) return "partition does not cover [U]";
  std::size_t in_t = 0;
  for (Element x = 0; x < inst.U; ++x) {
    const bool is_t = std::binary_search(inst.T.begin(), inst.T.end(), x);
    if ((inst.part[x] == Part::InT) != is_t) return "partition marks T incorrectly";
    in_t += is_t;
  }
  if (in_t != inst.T.size()) return "partition marks T incorrectly";
  for (Element x : inst.s_minus_t()) {
    if (inst.part[x] != static_cast<Part>(inst.side)) return "S \\ T is not on one side";
  }
  return {};
}

namespace {

void write_list(std::ostream& out, const std::vector<Element>& xs) {
  for (std::size_t i = 0; i < xs.size(); ++i) out << (i ? " " : "") << xs[i];
  out << '\n';
}

std::vector<Element> parse_list(const std::string& line, std::size_t line_no,
                                std::uint64_t U) {
  std::istringstream ss(line);
  std::vector<Element> xs;
  std::string tok;
  while (ss >> tok) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &used);
    } catch (const std::exception&) {
      throw FormatError(line_no, "expected an element id, got '" + tok + "'");
    }
    if (used != tok.size() || v >= U) {
      throw FormatError(line_no, "element id '" + tok + "' invalid for U=" + std::to_string(U));
    }
    if (!xs.empty() && v <= xs.back()) throw FormatError(line_no, "ids must be strictly ascending");
    xs.push_back(v);
  }
  return xs;
}

}  // namespace

void write_urdec_instance(std::ostream& out, const UrdecInstance& inst) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%llu %llu %.17g %zu\n",
                static_cast<unsigned long long>(inst.U),
                static_cast<unsigned long long>(inst.m), inst.delta, inst.r);
  out << buf;
  write_list(out, inst.S);
  write_list(out, inst.T);
  write_list(out, inst.p1());
}

UrdecInstance read_urdec_instance(std::istream& in) {
  std::string lines[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!std::getline(in, lines[i])) throw FormatError(i + 1, "unexpected end of instance");
  }
  std::string rest;
  std::size_t line_no = 4;
  while (std::getline(in, rest)) {
    ++line_no;
    if (rest.find_first_not_of(" \t\r") != std::string::npos) {
      throw FormatError(line_no, "trailing content after instance");
    }
  }
  UrdecInstance inst;
  {
    std::istringstream ss(lines[0]);
    unsigned long long U = 0, m = 0;
    std::size_t r = 0;
    std::string extra;
    if (!(ss >> U >> m >> inst.delta >> r) || (ss >> extra)) {
      throw FormatError(1, "expected 'U m delta r'");
    }
    inst.U = U;
    inst.m = m;
    inst.r = r;
    if (m < 2 || m * m * m != U) throw FormatError(1, "U must equal m^3 with m >= 2");
    inst.B = m * m;
  }
  inst.S = parse_list(lines[1], 2, inst.U);
  inst.T = parse_list(lines[2], 3, inst.U);
  const auto p1 = parse_list(lines[3], 4, inst.U);
  inst.part.assign(inst.U, Part::P2);
  for (Element x : inst.T) inst.part[x] = Part::InT;
  for (Element x : p1) {
    if (inst.part[x] == Part::InT) throw FormatError(4, "P1 intersects T");
    inst.part[x] = Part::P1;
  }
  const auto diff = inst.s_minus_t();
  if (!diff.empty()) inst.side = static_cast<Side>(inst.part[diff.front()]);
  const std::string err = check_urdec_instance(inst);
  if (!err.empty()) throw FormatError(2, err);
  return inst;
}

UrSketchConfig ur_sketch_config(std::uint64_t U, double delta, std::uint64_t seed,
                                UrSketchOptions options) {
  if (U < 2) throw ConfigError("ur sketch: U must be >= 2");
  if (!(delta > 0 && delta < 1)) throw ConfigError("ur sketch: delta must lie in (0, 1)");
  if (options.fp_bits < 1 || options.fp_bits > 64) {
    throw ConfigError("ur sketch: fingerprint bits must be in [1,64]");
  }
  UrSketchConfig c;
  c.U = U;
  const auto log_inv = static_cast<unsigned>(std::ceil(-std::log2(delta) - 1e-12));
  c.reps = options.reps ? options.reps : std::max(1u, options.rep_factor * log_inv);
  c.levels = options.levels ? options.levels : ceil_log2(U) + 1;
  c.code_bits = std::max(1u, ceil_log2(U));
  c.fp_bits = options.fp_bits;
  c.seed = seed;
  return c;
}

namespace {

struct UrCells {
  explicit UrCells(const UrSketchConfig& c)
      : config(c), code(std::size_t{c.reps} * c.levels), fp(code.size()) {
    for (unsigned r = 0; r < c.reps; ++r) {
      lvl_keys.push_back(level_key(c.seed, r));
      fp_keys.push_back(fingerprint_key(c.seed, r));
    }
  }

  void toggle(Element x) {
    for (unsigned r = 0; r < config.reps; ++r) {
      const unsigned top = std::min(level_of_code(x, lvl_keys[r]), config.levels - 1);
      const std::uint64_t f = fingerprint_of_code(x, fp_keys[r], config.fp_bits);
      for (unsigned i = 0; i <= top; ++i) {
        code[r * config.levels + i] ^= x;
        fp[r * config.levels + i] ^= f;
      }
    }
  }

  const UrSketchConfig& config;
  std::vector<std::uint64_t> code;
  std::vector<std::uint64_t> fp;
  std::vector<std::uint64_t> lvl_keys;
  std::vector<std::uint64_t> fp_keys;
};

}  // namespace

Message ur_alice(std::span<const Element> S, const UrSketchConfig& config) {
  UrCells cells(config);
  for (Element x : S) {
    if (x >= config.U) throw ConfigError("ur_alice: element outside [0, U)");
    cells.toggle(x);
  }
  BitWriter w;
  for (std::size_t i = 0; i < cells.code.size(); ++i) {
    w.put(cells.code[i], config.code_bits);
    w.put(cells.fp[i], config.fp_bits);
  }
  Message m;
  m.bits = w.bits();
  m.bytes = w.take();
  return m;
}

Message ur_alice(std::span<const Element> S, std::uint64_t U, double delta,
                 std::uint64_t seed) {
  return ur_alice(S, ur_sketch_config(U, delta, seed));
}

std::optional<Element> ur_bob_search(const Message& msg, std::span<const Element> T,
                                     const UrSketchConfig& config) {
  if (msg.bits != config.message_bits()) {
    throw ConfigError("ur message length does not match the config");
  }
  UrCells cells(config);
  BitReader reader(msg.bytes);
  for (std::size_t i = 0; i < cells.code.size(); ++i) {
    cells.code[i] = reader.get(config.code_bits);
    cells.fp[i] = reader.get(config.fp_bits);
  }
  std::vector<Element> t_sorted(T.begin(), T.end());
  std::sort(t_sorted.begin(), t_sorted.end());
  for (Element x : t_sorted) {
    if (x >= config.U) throw ConfigError("ur_bob_search: element outside [0, U)");
    cells.toggle(x);
  }
  for (unsigned r = 0; r < config.reps; ++r) {
    for (unsigned i = 0; i < config.levels; ++i) {
      const std::size_t k = std::size_t{r} * config.levels + i;
      if (cells.code[k] == 0 && cells.fp[k] == 0) continue;
      const Element x = cells.code[k];
      if (x >= config.U) continue;
      if (fingerprint_of_code(x, cells.fp_keys[r], config.fp_bits) != cells.fp[k]) continue;
      if (std::binary_search(t_sorted.begin(), t_sorted.end(), x)) continue;
      return x;
    }
  }
  return std::nullopt;
}

Side ur_bob_decide(const Message& msg, std::span<const Element> T,
                   std::span<const Part> partition, const UrSketchConfig& config) {
  const auto x = ur_bob_search(msg, T, config);
  if (!x || *x >= partition.size()) return Side::P1;
  return partition[*x] == Part::P2 ? Side::P2 : Side::P1;
}

OneWayProtocol ur_sketch_protocol(const UrSketchConfig& config, std::string name) {
  OneWayProtocol p;
  p.name = std::move(name);
  p.alice = [config](std::span<const Element> S) { return ur_alice(S, config).bytes; };
  p.bob_decide = [config](std::span<const Element> T, std::span<const Part> partition,
                          const std::vector<std::uint8_t>& msg) {
    return ur_bob_decide(Message{msg, config.message_bits()}, T, partition, config);
  };
  p.bob_search = [config](std::span<const Element> T, const std::vector<std::uint8_t>& msg) {
    return ur_bob_search(Message{msg, config.message_bits()}, T, config);
  };
  return p;
}

}  // namespace agmlab
