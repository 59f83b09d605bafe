#include "agmlab/lab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "agmlab/errors.hpp"
#include "agmlab/hash.hpp"
#include "agmlab/rng.hpp"

namespace agmlab {

namespace {

BigInt pow_int(std::uint64_t base, std::uint64_t exp) {
  return boost::multiprecision::pow(BigInt(base), static_cast<unsigned>(exp));
}

// 4 · 4^k · m^k, the round-i reduction before the random blocks.
BigInt pair_denominator(std::uint64_t k, std::uint64_t m) {
  return BigInt(4) * pow_int(4, k) * pow_int(m, k);
}

bool contains_all(const SetSpace& sp, SetCode s, const std::vector<Element>& xs) {
  for (Element x : xs) {
    if (sp.element(s, x / sp.B) != x) return false;
  }
  return true;
}

std::vector<std::uint8_t> u32_bytes(std::span<const std::uint32_t> values) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * 4);
  for (std::uint32_t v : values) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  return out;
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& bytes, std::size_t at) {
  if (at + 4 > bytes.size()) throw ConfigError("protocol message too short");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes[at + i]} << (8 * i);
  return v;
}

Side side_of(const std::vector<Part>& partition, Element x) {
  return partition[x] == Part::P2 ? Side::P2 : Side::P1;
}

}  // namespace

// ---------------------------------------------------------------------------
// Set spaces and collections

std::uint64_t SetSpace::size() const {
  std::uint64_t n = 1;
  for (std::uint64_t j = 0; j < m; ++j) {
    if (n > (std::uint64_t{1} << 40) / B) throw CapExceeded("set space too large");
    n *= B;
  }
  return n;
}

std::uint64_t SetSpace::digit(SetCode s, std::uint64_t block) const {
  std::uint64_t v = s;
  for (std::uint64_t j = block + 1; j < m; ++j) v /= B;
  return v % B;
}

std::vector<Element> SetSpace::elements(SetCode s) const {
  std::vector<Element> out(m);
  std::uint64_t v = s;
  for (std::uint64_t j = m; j-- > 0;) {
    out[j] = j * B + v % B;
    v /= B;
  }
  return out;
}

SetCode SetSpace::encode(const std::vector<Element>& S) const {
  if (S.size() != m) throw ConfigError("set must hold one element per block");
  std::uint64_t v = 0;
  for (std::uint64_t j = 0; j < m; ++j) {
    if (S[j] / B != j) throw ConfigError("set must hold one element per block");
    v = v * B + S[j] % B;
  }
  return static_cast<SetCode>(v);
}

std::vector<std::uint64_t> SetCollection::free_blocks() const {
  std::vector<char> taken(space.m, 0);
  for (Element x : anchor) taken[x / space.B] = 1;
  std::vector<std::uint64_t> out;
  for (std::uint64_t j = 0; j < space.m; ++j) {
    if (!taken[j]) out.push_back(j);
  }
  return out;
}

std::string SetCollection::check() const {
  if (!std::is_sorted(anchor.begin(), anchor.end())) return "anchor not sorted";
  for (std::size_t i = 0; i < anchor.size(); ++i) {
    if (anchor[i] >= space.m * space.B) return "anchor element out of range";
    if (i > 0 && anchor[i] / space.B == anchor[i - 1] / space.B) {
      return "anchor has two elements in one block";
    }
  }
  if (anchor.size() >= space.m) return "anchor is not a proper subset";
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i > 0 && members[i] <= members[i - 1]) return "members not sorted and distinct";
    if (!contains_all(space, members[i], anchor)) return "member misses the anchor";
  }
  return "";
}

std::map<std::vector<std::uint8_t>, std::vector<SetCode>> message_classes(
    const OneWayProtocol& protocol, const UrdecParams& params, std::uint64_t cap,
    const GoodFilter& good) {
  const SetSpace sp = SetSpace::of(params);
  const std::uint64_t total = sp.size();
  if (total > cap) {
    throw CapExceeded("enumeration of B^m = " + std::to_string(total) +
                      " sets exceeds the cap " + std::to_string(cap));
  }
  std::map<std::vector<std::uint8_t>, std::vector<SetCode>> classes;
  for (std::uint64_t code = 0; code < total; ++code) {
    const auto S = sp.elements(static_cast<SetCode>(code));
    if (good && !good(S)) continue;
    classes[protocol.alice(S)].push_back(static_cast<SetCode>(code));
  }
  return classes;
}

SetCollection consistent_sets(const OneWayProtocol& protocol,
                              const std::vector<std::uint8_t>& message,
                              const UrdecParams& params, std::uint64_t cap) {
  SetCollection coll;
  coll.space = SetSpace::of(params);
  auto classes = message_classes(protocol, params, cap);
  if (auto it = classes.find(message); it != classes.end()) coll.members = std::move(it->second);
  return coll;
}

std::vector<std::uint8_t> largest_class_message(
    const std::map<std::vector<std::uint8_t>, std::vector<SetCode>>& classes) {
  if (classes.empty()) throw ConfigError("no message classes");
  auto best = classes.begin();
  for (auto it = classes.begin(); it != classes.end(); ++it) {
    if (it->second.size() > best->second.size()) best = it;
  }
  return best->first;
}

// ---------------------------------------------------------------------------
// Intersection counts

std::vector<BigInt> intersection_pair_counts(const SetCollection& coll) {
  const auto F = coll.free_blocks();
  const std::size_t f = F.size();
  if (f > 24) throw CapExceeded("too many free blocks for pair counting");
  const std::size_t masks = std::size_t{1} << f;

  // at_least[P]: ordered pairs agreeing on every free block in P.
  std::vector<BigInt> at_least(masks);
  std::vector<std::uint64_t> keys(coll.size());
  std::vector<std::vector<std::uint64_t>> digits(coll.size());
  for (std::size_t i = 0; i < coll.size(); ++i) {
    for (std::uint64_t j : F) digits[i].push_back(coll.space.digit(coll.members[i], j));
  }
  for (std::size_t P = 0; P < masks; ++P) {
    for (std::size_t i = 0; i < coll.size(); ++i) {
      std::uint64_t key = 0;
      for (std::size_t b = 0; b < f; ++b) {
        if (P >> b & 1) key = key * coll.space.B + digits[i][b];
      }
      keys[i] = key;
    }
    std::sort(keys.begin(), keys.end());
    BigInt sum = 0;
    for (std::size_t i = 0; i < keys.size();) {
      std::size_t j = i;
      while (j < keys.size() && keys[j] == keys[i]) ++j;
      sum += BigInt(j - i) * (j - i);
      i = j;
    }
    at_least[P] = sum;
  }
  // Moebius inversion over supersets gives agreement on exactly P.
  std::vector<BigInt> exact = at_least;
  for (std::size_t b = 0; b < f; ++b) {
    for (std::size_t P = 0; P < masks; ++P) {
      if (!(P >> b & 1)) exact[P] -= exact[P | (std::size_t{1} << b)];
    }
  }
  std::vector<BigInt> by_k(f + 1);
  for (std::size_t P = 0; P < masks; ++P) by_k[std::popcount(P)] += exact[P];
  return by_k;
}

IntersectionCheck check_intersection_lemma(const SetCollection& coll) {
  IntersectionCheck out;
  out.pairs_by_k = intersection_pair_counts(coll);
  const BigInt n2 = BigInt(coll.size()) * coll.size();
  for (std::size_t k = 0; k < out.pairs_by_k.size(); ++k) {
    out.lhs += (pow_int(2, k) - 1) * out.pairs_by_k[k];
    if (k >= 1 && 4 * pow_int(4, k) * out.pairs_by_k[k] >= n2) out.witness_k.push_back(k);
  }
  out.holds = 4 * out.lhs >= n2;
  return out;
}

// ---------------------------------------------------------------------------
// Random process A

std::size_t ProcessATrace::final_r() const {
  std::size_t r = 0;
  for (const auto& round : rounds) r += round.k;
  return r;
}

namespace {

struct Pick {
  SetCode s_star = 0;
  std::vector<std::uint64_t> positions;  // blocks of Delta T
};

// Agreement of a and b on the free blocks, as a bit mask over F.
std::uint32_t agreement(const std::vector<std::vector<std::uint64_t>>& digits, std::size_t a,
                        std::size_t b) {
  std::uint32_t mask = 0;
  for (std::size_t i = 0; i < digits[a].size(); ++i) {
    if (digits[a][i] == digits[b][i]) mask |= std::uint32_t{1} << i;
  }
  return mask;
}

}  // namespace

ProcessATrace run_process_a(const SetCollection& s0, const UrdecParams& params,
                            std::uint64_t seed, const ProcessAOptions& options) {
  if (s0.space.m != params.m || s0.space.B != params.B) {
    throw ConfigError("process A: collection and params disagree on m, B");
  }
  if (s0.members.empty()) throw ConfigError("process A: empty initial collection");
  if (!s0.anchor.empty()) throw ConfigError("process A: S_0 must have an empty anchor");
  if (const auto err = s0.check(); !err.empty()) throw ConfigError("process A: " + err);

  const SetSpace sp = s0.space;
  const std::uint64_t m = params.m;
  ProcessATrace trace;
  trace.m = m;
  trace.B = params.B;
  trace.R = params.R;
  trace.t = params.t;
  trace.initial_size = s0.size();

  SetCollection cur = s0;
  std::size_t r = 0;
  for (std::size_t i = 0;; ++i) {
    if (options.on_round) options.on_round(i, cur);
    const BigInt n = cur.size();
    const BigInt n2 = n * n;
    const auto F = cur.free_blocks();

    const auto pairs = intersection_pair_counts(cur);
    std::optional<std::uint64_t> k;
    for (std::uint64_t kk = 1; kk < pairs.size(); ++kk) {
      if (4 * pow_int(4, kk) * pairs[kk] >= n2) {
        k = kk;
        break;
      }
    }
    if (!k) {
      trace.failed = true;
      break;
    }

    std::vector<std::vector<std::uint64_t>> digits(cur.size());
    for (std::size_t a = 0; a < cur.size(); ++a) {
      for (std::uint64_t j : F) digits[a].push_back(sp.digit(cur.members[a], j));
    }

    // Lexicographically smallest (S*, Delta T) meeting the averaging bound.
    const BigInt dk = pair_denominator(*k, m);
    std::optional<Pick> pick;
    std::size_t star = 0;
    std::uint32_t star_mask = 0;
    std::vector<std::uint64_t> counts(std::size_t{1} << F.size());
    for (std::size_t a = 0; a < cur.size() && !pick; ++a) {
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t b = 0; b < cur.size(); ++b) ++counts[agreement(digits, a, b)];
      std::optional<std::vector<std::uint64_t>> best;
      std::uint32_t best_mask = 0;
      for (std::uint32_t mask = 0; mask < counts.size(); ++mask) {
        if (static_cast<std::uint64_t>(std::popcount(mask)) != *k) continue;
        if (BigInt(counts[mask]) * dk < n) continue;
        std::vector<std::uint64_t> pos;
        for (std::size_t b = 0; b < F.size(); ++b) {
          if (mask >> b & 1) pos.push_back(F[b]);
        }
        if (!best || pos < *best) {
          best = pos;
          best_mask = mask;
        }
      }
      if (best) {
        pick = Pick{cur.members[a], *best};
        star = a;
        star_mask = best_mask;
      }
    }
    if (!pick) throw std::logic_error("process A: no S* despite the pair-count test");

    ProcessRound round;
    round.k = *k;
    round.r = r;
    round.t_r = cur.anchor.size();
    round.s_star = pick->s_star;
    for (std::uint64_t j : pick->positions) round.delta_t.push_back(sp.element(pick->s_star, j));
    round.size_before = cur.size();

    std::vector<std::size_t> matching;  // (S* ∩ S2) \ T_i = Delta T
    for (std::size_t b = 0; b < cur.size(); ++b) {
      if (agreement(digits, star, b) == star_mask) matching.push_back(b);
    }

    const std::size_t r_next = r + *k;
    std::vector<Element> next_anchor = cur.anchor;
    next_anchor.insert(next_anchor.end(), round.delta_t.begin(), round.delta_t.end());
    BigInt denom = dk;
    if (r_next < params.R) {
      const std::uint64_t c = params.t[r_next] - params.t[r] - *k;
      std::vector<std::uint64_t> eligible;
      for (std::size_t b = 0; b < F.size(); ++b) {
        if (!(star_mask >> b & 1)) eligible.push_back(F[b]);
      }
      if (c > eligible.size()) throw std::logic_error("process A: not enough free blocks");
      Rng rng(derive_seed(seed, "process-a", i));
      for (auto idx : rng.sample_indices(eligible.size(), c)) {
        round.random_blocks.push_back(eligible[idx]);
      }
      std::sort(round.random_blocks.begin(), round.random_blocks.end());
      denom *= pow_int(params.B, c);

      // Delta T' with the most matching sets; ties to the smallest.
      std::map<std::uint64_t, std::uint64_t> by_choice;
      for (std::size_t b : matching) {
        std::uint64_t key = 0;
        for (std::uint64_t j : round.random_blocks) key = key * sp.B + sp.digit(cur.members[b], j);
        ++by_choice[key];
      }
      std::uint64_t best_key = 0, best_count = 0;
      for (const auto& [key, count] : by_choice) {
        if (count > best_count) {
          best_key = key;
          best_count = count;
        }
      }
      if (BigInt(best_count) * denom < n) {
        throw std::logic_error("process A: no Delta T' meets the averaging bound");
      }
      std::vector<std::uint64_t> offs(c);
      for (std::uint64_t q = c; q-- > 0;) {
        offs[q] = best_key % sp.B;
        best_key /= sp.B;
      }
      for (std::uint64_t q = 0; q < c; ++q) {
        round.delta_t_prime.push_back(round.random_blocks[q] * sp.B + offs[q]);
      }
      next_anchor.insert(next_anchor.end(), round.delta_t_prime.begin(),
                         round.delta_t_prime.end());
    } else {
      round.last = true;
    }
    std::sort(next_anchor.begin(), next_anchor.end());

    const BigInt need_big = (n + denom - 1) / denom;
    const auto need = need_big.convert_to<std::uint64_t>();
    SetCollection next;
    next.space = sp;
    next.anchor = next_anchor;
    for (SetCode s : cur.members) {
      if (next.members.size() == need) break;
      if (contains_all(sp, s, next_anchor)) next.members.push_back(s);
    }
    if (next.members.size() < need) throw std::logic_error("process A: S_{i+1} too small");
    round.size_after = next.size();
    trace.rounds.push_back(std::move(round));
    cur = std::move(next);
    r = r_next;
    if (r >= params.R) break;
  }
  trace.I = trace.rounds.size();
  trace.final_anchor = cur.anchor;
  trace.final_members = cur.members;
  return trace;
}

ProcessATrace run_process_a(const OneWayProtocol& protocol, const UrdecParams& params,
                            std::uint64_t seed, const ProcessAOptions& options) {
  const auto classes = message_classes(protocol, params, options.cap, options.good);
  const auto message = options.message ? *options.message : largest_class_message(classes);
  const auto it = classes.find(message);
  if (it == classes.end()) throw ConfigError("process A: no set sends the requested message");
  SetCollection s0;
  s0.space = SetSpace::of(params);
  s0.members = it->second;
  auto trace = run_process_a(s0, params, seed, options);
  trace.message = message;
  return trace;
}

bool TraceCheck::ok() const {
  return thresholds && nesting && termination && product_bound && product_identity &&
         (closed_form || !closed_form_applicable);
}

TraceCheck check_process_trace(const ProcessATrace& tr) {
  TraceCheck out;
  std::ostringstream why;
  const std::uint64_t m = tr.m, B = tr.B;

  out.thresholds = true;
  out.nesting = true;
  BigInt product = 1;
  std::uint64_t K = 0;
  std::vector<Element> T;
  std::uint64_t size = tr.initial_size;
  std::size_t r = 0;
  for (std::size_t i = 0; i < tr.rounds.size(); ++i) {
    const auto& rd = tr.rounds[i];
    if (rd.r != r || rd.t_r != T.size() || r >= tr.R || tr.t[r] != rd.t_r) {
      out.nesting = false;
      why << "round " << i << ": r or |T| off the schedule; ";
    }
    if (rd.size_before != size) {
      out.nesting = false;
      why << "round " << i << ": size chain broken; ";
    }
    if (rd.k < 1 || rd.delta_t.size() != rd.k) {
      out.nesting = false;
      why << "round " << i << ": |Delta T| != k; ";
    }
    const std::size_t r_next = r + rd.k;
    const bool last = r_next >= tr.R;
    if (last != rd.last || (last && i + 1 != tr.rounds.size())) {
      out.nesting = false;
      why << "round " << i << ": last-round flag inconsistent; ";
    }
    std::uint64_t c = rd.delta_t_prime.size();
    if (!last && c != tr.t[r_next] - tr.t[r] - rd.k) {
      out.nesting = false;
      why << "round " << i << ": |Delta T'| != t_{r+k} - t_r - k; ";
    }
    if (last && c != 0) out.nesting = false;

    const BigInt denom = pair_denominator(rd.k, m) * pow_int(B, c);
    if (BigInt(rd.size_after) * denom < BigInt(rd.size_before)) {
      out.thresholds = false;
      why << "round " << i << ": |S_{i+1}| below threshold; ";
    }
    if (rd.size_after > rd.size_before) out.nesting = false;
    product *= denom;
    K += rd.k;

    const std::size_t before = T.size();
    T.insert(T.end(), rd.delta_t.begin(), rd.delta_t.end());
    T.insert(T.end(), rd.delta_t_prime.begin(), rd.delta_t_prime.end());
    std::sort(T.begin(), T.end());
    std::vector<std::uint64_t> blocks;
    for (Element x : T) blocks.push_back(x / B);
    if (std::adjacent_find(blocks.begin(), blocks.end()) != blocks.end() || T.size() <= before) {
      out.nesting = false;
      why << "round " << i << ": T_{i+1} does not strictly extend T_i; ";
    }
    if (!last && T.size() != tr.t[r_next]) {
      out.nesting = false;
      why << "round " << i << ": |T_{i+1}| != t_{r_{i+1}}; ";
    }
    size = rd.size_after;
    r = r_next;
  }
  if (T != tr.final_anchor || size != tr.final_members.size()) {
    out.nesting = false;
    why << "final state does not match the rounds; ";
  }
  const std::uint64_t TI = T.size();
  if (TI < m && BigInt(size) > pow_int(B, m - TI)) {
    out.nesting = false;
    why << "|S_I| exceeds B^{m-|T_I|}; ";
  }
  out.termination = tr.failed == (r < tr.R);
  if (!out.termination) why << "failed flag disagrees with r_I; ";

  if (tr.failed) {
    out.product_bound = out.product_identity = out.closed_form = true;
    out.closed_form_applicable = false;
  } else {
    out.product_bound = BigInt(size) * product >= BigInt(tr.initial_size);
    // Second form: 4^I (4m)^K B^{|T_I| - K}.
    const auto I = tr.rounds.size();
    out.product_identity =
        TI >= K && product == pow_int(4, I) * pow_int(4 * m, K) * pow_int(B, TI - K);
    out.closed_form_applicable = B > 4 * m;
    out.closed_form = BigInt(size) * pow_int(16 * m, tr.R) * pow_int(B, TI) >=
                      BigInt(tr.initial_size) * pow_int(B, tr.R);
    if (!out.product_bound) why << "product bound fails; ";
    if (!out.product_identity) why << "denominator product disagrees with its closed form; ";
    if (!out.closed_form) why << "closed-form bound fails; ";
  }
  out.detail = why.str();
  return out;
}

void write_trace(std::ostream& out, const ProcessATrace& tr) {
  for (std::size_t i = 0; i < tr.rounds.size(); ++i) {
    const auto& rd = tr.rounds[i];
    out << i << ' ' << rd.k << ' ' << rd.r << ' ' << rd.t_r << ' ' << rd.size_before << ' '
        << rd.size_after << '\n';
  }
  if (tr.failed) {
    out << "FAILED\n";
  } else {
    out << "DONE I=" << tr.I << '\n';
  }
}

// ---------------------------------------------------------------------------
// Conditional error

ErrorEstimate conditional_error(const OneWayProtocol& protocol, const SetCollection& coll,
                                ErrorMode mode, std::uint64_t samples, std::uint64_t seed,
                                std::uint64_t cap) {
  if (coll.members.empty()) throw ConfigError("conditional error: empty collection");
  if (const auto err = coll.check(); !err.empty()) throw ConfigError("conditional error: " + err);
  const SetSpace sp = coll.space;
  const std::uint64_t U = sp.m * sp.B;
  const auto& T = coll.anchor;

  std::vector<std::vector<Element>> sets;
  std::vector<std::vector<std::uint8_t>> msgs;
  for (SetCode s : coll.members) {
    sets.push_back(sp.elements(s));
    msgs.push_back(protocol.alice(sets.back()));
  }

  ErrorEstimate out;
  if (mode == ErrorMode::Exact) {
    const std::uint64_t outside = U - sp.m;
    if (outside > 40 || (coll.size() << outside) > cap / 2) {
      throw CapExceeded("exact conditional error: |coll|·2^{U-m+1} exceeds the cap");
    }
    std::uint64_t errors = 0;
    std::vector<Part> part(U);
    for (std::size_t idx = 0; idx < sets.size(); ++idx) {
      const auto& S = sets[idx];
      std::vector<char> in_s(U, 0);
      for (Element x : S) in_s[x] = 1;
      std::vector<Element> rest;
      for (Element x = 0; x < U; ++x) {
        if (!in_s[x]) rest.push_back(x);
      }
      for (Side side : {Side::P1, Side::P2}) {
        for (Element x : S) part[x] = static_cast<Part>(side);
        for (Element x : T) part[x] = Part::InT;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << outside); ++mask) {
          for (std::size_t q = 0; q < rest.size(); ++q) {
            part[rest[q]] = (mask >> q & 1) ? Part::P2 : Part::P1;
          }
          errors += protocol.bob_decide(T, part, msgs[idx]) != side;
        }
      }
    }
    const BigInt total = BigInt(sets.size()) * 2 * (BigInt(1) << outside);
    out.exact = BigRational(BigInt(errors), total);
    out.value = out.exact->convert_to<double>();
    out.samples = total.convert_to<std::uint64_t>();
    return out;
  }

  if (samples < 1) throw ConfigError("conditional error: samples must be >= 1");
  Rng rng(derive_seed(seed, "conderr"));
  std::uint64_t errors = 0;
  std::vector<Part> part(U);
  std::vector<char> in_t(U, 0);
  for (Element x : T) in_t[x] = 1;
  for (std::uint64_t s = 0; s < samples; ++s) {
    const std::size_t idx = rng.below(sets.size());
    const Side side = rng.coin() ? Side::P2 : Side::P1;
    for (Element x = 0; x < U; ++x) part[x] = rng.coin() ? Part::P2 : Part::P1;
    for (Element x : sets[idx]) part[x] = static_cast<Part>(side);
    for (Element x : T) part[x] = Part::InT;
    errors += protocol.bob_decide(T, part, msgs[idx]) != side;
  }
  out.samples = samples;
  out.value = static_cast<double>(errors) / static_cast<double>(samples);
  out.std_error = std::sqrt(std::max(out.value * (1 - out.value), 1.0 / samples) / samples);
  return out;
}

BigRational optimal_conditional_error(const SetCollection& coll, std::uint64_t cap) {
  if (coll.members.empty()) throw ConfigError("optimal error: empty collection");
  if (const auto err = coll.check(); !err.empty()) throw ConfigError("optimal error: " + err);
  const SetSpace sp = coll.space;
  const auto F = coll.free_blocks();
  const std::size_t f = F.size();
  const std::size_t N = coll.size();

  // Per free block, the distinct digits members use there and their bit index.
  std::vector<std::vector<int>> bit_of(f, std::vector<int>(sp.B, -1));
  std::vector<std::size_t> width(f, 0);
  for (SetCode s : coll.members) {
    for (std::size_t b = 0; b < f; ++b) {
      const auto d = sp.digit(s, F[b]);
      if (bit_of[b][d] < 0) bit_of[b][d] = static_cast<int>(width[b]++);
    }
  }
  std::uint64_t W = 0;
  for (auto w : width) W += w;

  // The widest block is summed by subset sums; the rest are enumerated.
  const std::size_t inner = static_cast<std::size_t>(
      std::max_element(width.begin(), width.end()) - width.begin());
  const std::size_t wi = width[inner];
  const std::uint64_t outer_bits = W - wi;
  if (outer_bits > 40 || (std::uint64_t{1} << outer_bits) > cap || wi > 24) {
    throw CapExceeded("optimal error: 2^" + std::to_string(outer_bits) +
                      " placements exceed the cap");
  }
  // Bit position of each member's digit in the outer placement mask.
  std::vector<std::size_t> offset(f, 0);
  {
    std::size_t at = 0;
    for (std::size_t b = 0; b < f; ++b) {
      if (b == inner) continue;
      offset[b] = at;
      at += width[b];
    }
  }
  std::vector<std::uint64_t> outer_mask(N, 0);
  std::vector<std::size_t> inner_bit(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t b = 0; b < f; ++b) {
      const auto bit = static_cast<std::size_t>(bit_of[b][sp.digit(coll.members[i], F[b])]);
      if (b == inner) {
        inner_bit[i] = bit;
      } else {
        outer_mask[i] |= std::uint64_t{1} << (offset[b] + bit);
      }
    }
  }

  const std::uint64_t outer_full = (outer_bits == 64) ? ~0ull : (std::uint64_t{1} << outer_bits) - 1;
  const std::size_t inner_states = std::size_t{1} << wi;
  std::vector<std::int64_t> c1(wi), c2(wi), s1(inner_states), s2(inner_states);
  BigInt total = 0;
  for (std::uint64_t x = 0;; ++x) {
    std::fill(c1.begin(), c1.end(), 0);
    std::fill(c2.begin(), c2.end(), 0);
    for (std::size_t i = 0; i < N; ++i) {
      // A member lies in P1 when all its outer digits are placed in P1 (bit
      // set), in P2 when none are.
      if ((outer_mask[i] & x) == outer_mask[i]) ++c1[inner_bit[i]];
      if ((outer_mask[i] & x) == 0) ++c2[inner_bit[i]];
    }
    std::int64_t all2 = 0;
    for (auto v : c2) all2 += v;
    s1[0] = 0;
    s2[0] = 0;
    std::uint64_t acc = 0;  // y = 0 puts nothing in P1, so A1 = 0
    for (std::size_t y = 1; y < inner_states; ++y) {
      const auto low = static_cast<std::size_t>(std::countr_zero(y));
      s1[y] = s1[y & (y - 1)] + c1[low];
      s2[y] = s2[y & (y - 1)] + c2[low];
      acc += static_cast<std::uint64_t>(std::min(s1[y], all2 - s2[y]));
    }
    total += acc;
    if (x == outer_full) break;
  }
  // Each placement of the W relevant elements has weight 2^{-W}; given it,
  // S is uniform over N members and the side over 2, and the side's part
  // must receive the m - |T| free elements: weight 2^{-(W - f)} per (S, side).
  return BigRational(total, BigInt(N) * (BigInt(1) << (W - f + 1)));
}

// ---------------------------------------------------------------------------
// Singleton probability

SingletonEstimate estimate_singleton_prob(const OneWayProtocol& protocol,
                                          const UrdecParams& params,
                                          const std::vector<std::uint64_t>& k_prefix,
                                          const std::vector<Element>& S,
                                          const std::vector<Element>& T,
                                          std::uint64_t runs, std::uint64_t seed,
                                          const ProcessAOptions& options) {
  const SetSpace sp = SetSpace::of(params);
  const SetCode s_code = sp.encode(S);
  std::size_t ri = 0;
  for (auto k : k_prefix) {
    if (k < 1) throw ConfigError("singleton: every k must be >= 1");
    ri += k;
  }
  if (ri >= params.R) throw ConfigError("singleton: the k prefix reaches r >= R");
  std::vector<Element> Tsorted = T;
  std::sort(Tsorted.begin(), Tsorted.end());
  if (Tsorted.size() != params.t[ri]) throw ConfigError("singleton: |T| must equal t_{r_i}");

  SingletonEstimate out;
  out.runs = runs;
  out.bound = std::exp2(6.0 / params.alpha) /
              std::exp(std::lgamma(params.m + 1.0) - std::lgamma(params.t[ri] + 1.0) -
                       std::lgamma(static_cast<double>(params.m - params.t[ri]) + 1.0));

  const auto classes = message_classes(protocol, params, options.cap, options.good);
  const auto message = options.message ? *options.message : largest_class_message(classes);
  SetCollection s0;
  s0.space = sp;
  s0.members = classes.at(message);

  const std::size_t i = k_prefix.size();
  for (std::uint64_t run = 0; run < runs; ++run) {
    std::optional<std::vector<Element>> anchor_at_i;
    bool member = false;
    ProcessAOptions opts = options;
    opts.on_round = [&](std::size_t round, const SetCollection& c) {
      if (round != i) return;
      anchor_at_i = c.anchor;
      member = std::binary_search(c.members.begin(), c.members.end(), s_code);
    };
    const auto tr = run_process_a(s0, params, derive_seed(seed, "singleton", run), opts);
    if (!anchor_at_i || !member || tr.rounds.size() < i) continue;
    bool prefix = true;
    for (std::size_t q = 0; q < i; ++q) prefix = prefix && tr.rounds[q].k == k_prefix[q];
    if (!prefix) continue;
    ++out.conditioned;
    out.hits += *anchor_at_i == Tsorted;
  }
  if (out.conditioned == 0) {
    out.diagnostic = "undefined: no run met the conditioning event";
    return out;
  }
  const double p = static_cast<double>(out.hits) / static_cast<double>(out.conditioned);
  out.estimate = p;
  out.std_error = std::sqrt(p * (1 - p) / static_cast<double>(out.conditioned));
  return out;
}

// ---------------------------------------------------------------------------
// Protocols

Side swap_invariant_guess(std::span<const Element> /*T*/, std::span<const Part> partition) {
  std::optional<Part> first;
  for (Part p : partition) {
    if (p == Part::InT) continue;
    if (!first) {
      first = p;
    } else {
      return p == *first ? Side::P1 : Side::P2;
    }
  }
  return Side::P1;
}

namespace {

std::vector<Part> to_vector(std::span<const Part> p) { return {p.begin(), p.end()}; }

}  // namespace

OneWayProtocol constant_protocol() {
  OneWayProtocol p;
  p.name = "constant";
  p.alice = [](std::span<const Element>) { return std::vector<std::uint8_t>{}; };
  p.bob_decide = [](std::span<const Element> T, std::span<const Part> part,
                    const std::vector<std::uint8_t>&) { return swap_invariant_guess(T, part); };
  return p;
}

OneWayProtocol identity_protocol(const UrdecParams& params) {
  OneWayProtocol p;
  p.name = "identity";
  p.alice = [](std::span<const Element> S) {
    std::vector<std::uint32_t> v(S.begin(), S.end());
    return u32_bytes(v);
  };
  const std::uint64_t m = params.m;
  p.bob_search = [m](std::span<const Element> T,
                     const std::vector<std::uint8_t>& msg) -> std::optional<Element> {
    for (std::uint64_t j = 0; j < m; ++j) {
      const Element x = read_u32(msg, 4 * j);
      if (!std::binary_search(T.begin(), T.end(), x)) return x;
    }
    return std::nullopt;
  };
  p.bob_decide = [search = p.bob_search](std::span<const Element> T, std::span<const Part> part,
                                         const std::vector<std::uint8_t>& msg) {
    const auto x = search(T, msg);
    return x ? side_of(to_vector(part), *x) : Side::P1;
  };
  return p;
}

OneWayProtocol first_block_protocol(const UrdecParams&) {
  OneWayProtocol p;
  p.name = "first-block";
  p.alice = [](std::span<const Element> S) {
    const std::uint32_t v[1] = {static_cast<std::uint32_t>(S.empty() ? 0 : S[0])};
    return u32_bytes(v);
  };
  p.bob_decide = [](std::span<const Element>, std::span<const Part> part,
                    const std::vector<std::uint8_t>& msg) {
    const Element x = read_u32(msg, 0);
    if (x >= part.size() || part[x] == Part::InT) return Side::P1;
    return part[x] == Part::P2 ? Side::P2 : Side::P1;
  };
  return p;
}

OneWayProtocol truncated_ur_protocol(const UrdecParams& params, unsigned budget_bits,
                                     std::uint64_t seed) {
  const auto config = ur_sketch_config(params.U, 1.0 / 64, seed);
  const std::uint64_t full = config.message_bits();
  const std::uint64_t keep = std::min<std::uint64_t>(budget_bits, full);
  OneWayProtocol p;
  p.name = keep == full ? "ur-sketch" : "ur-trunc-" + std::to_string(keep);
  p.alice = [config, keep](std::span<const Element> S) {
    auto bytes = ur_alice(S, config).bytes;
    bytes.resize((keep + 7) / 8);
    if (keep % 8 != 0) bytes.back() &= static_cast<std::uint8_t>((1u << (keep % 8)) - 1);
    return bytes;
  };
  auto pad = [config](const std::vector<std::uint8_t>& msg) {
    Message full_msg{msg, config.message_bits()};
    full_msg.bytes.resize((config.message_bits() + 7) / 8, 0);
    return full_msg;
  };
  p.bob_decide = [config, pad](std::span<const Element> T, std::span<const Part> part,
                               const std::vector<std::uint8_t>& msg) {
    return ur_bob_decide(pad(msg), T, part, config);
  };
  p.bob_search = [config, pad](std::span<const Element> T, const std::vector<std::uint8_t>& msg) {
    return ur_bob_search(pad(msg), T, config);
  };
  return p;
}

OneWayProtocol random_protocol(std::uint64_t classes, std::uint64_t seed) {
  if (classes < 1) throw ConfigError("random protocol needs at least one class");
  OneWayProtocol p;
  p.name = "random-" + std::to_string(classes) + "-" + std::to_string(seed);
  p.alice = [classes, seed](std::span<const Element> S) {
    std::uint64_t h = seed;
    for (Element x : S) h = keyed_hash(h, x);
    const std::uint32_t v[1] = {static_cast<std::uint32_t>(h % classes)};
    return u32_bytes(v);
  };
  p.bob_decide = [](std::span<const Element> T, std::span<const Part> part,
                    const std::vector<std::uint8_t>&) { return swap_invariant_guess(T, part); };
  return p;
}

std::vector<OneWayProtocol> protocol_battery(const UrdecParams& params, std::uint64_t seed) {
  std::vector<OneWayProtocol> out;
  out.push_back(constant_protocol());
  out.push_back(identity_protocol(params));
  out.push_back(first_block_protocol(params));
  for (unsigned budget : {2u, 4u, 8u, 16u}) {
    out.push_back(truncated_ur_protocol(params, budget, derive_seed(seed, "battery-ur")));
  }
  out.push_back(truncated_ur_protocol(params, ~0u, derive_seed(seed, "battery-ur")));
  for (std::uint64_t classes : {2u, 8u, 32u}) {
    out.push_back(random_protocol(classes, derive_seed(seed, "battery-random", classes)));
  }
  return out;
}

UrdecParams lab_params() {
  return urdec_params_custom(3, std::ldexp(1.0, -static_cast<int>(kDeskScheduleLog2InvDelta)),
                             {0, 2});
}

// ---------------------------------------------------------------------------
// Lemma validation

std::vector<Lemma33Row> validate_lemma33(const std::vector<OneWayProtocol>& protocols,
                                         const UrdecParams& params,
                                         const Lemma33Options& options) {
  std::vector<Lemma33Row> rows;
  auto add = [&](const std::string& name, const std::string& context, const SetCollection& c) {
    Lemma33Row row;
    row.protocol = name;
    row.context = context;
    row.size = c.size();
    row.anchor_size = c.anchor.size();
    const auto check = check_intersection_lemma(c);
    row.lhs = check.lhs;
    row.holds = check.holds;
    if (!row.holds || options.all_errors) {
      row.optimal_error = optimal_conditional_error(c, options.cap);
    }
    rows.push_back(std::move(row));
  };
  for (const auto& protocol : protocols) {
    const auto classes = message_classes(protocol, params, options.cap);
    std::size_t idx = 0;
    for (const auto& [msg, members] : classes) {
      SetCollection c;
      c.space = SetSpace::of(params);
      c.members = members;
      add(protocol.name, "class " + std::to_string(idx++), c);
    }
    SetCollection s0;
    s0.space = SetSpace::of(params);
    s0.members = classes.at(largest_class_message(classes));
    for (std::uint64_t s = 0; s < options.process_seeds; ++s) {
      ProcessAOptions opts;
      opts.cap = options.cap;
      opts.on_round = [&](std::size_t i, const SetCollection& c) {
        if (i == 0) return;  // S_0 is already listed as a class
        add(protocol.name, "process seed=" + std::to_string(s) + " round=" + std::to_string(i), c);
      };
      run_process_a(s0, params, s, opts);
    }
  }
  return rows;
}

std::string to_decimal(const BigRational& q, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, q.convert_to<double>());
  return buf;
}

}  // namespace agmlab
