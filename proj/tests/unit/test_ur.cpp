#include <doctest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <sstream>

#include "agmlab/errors.hpp"
#include "agmlab/hash.hpp"
#include "agmlab/rng.hpp"
#include "agmlab/ur.hpp"

using namespace agmlab;
using boost::multiprecision::cpp_int;

namespace {

// Exact oracle for t_r when log2(1/delta) = L is an integer:
// t_r = ceil((m (L^r - (L-16)^r) + 2r L^r) / L^r).
std::uint64_t t_oracle(std::uint64_t m, long L, unsigned r) {
  cpp_int Lr = 1, Qr = 1;
  for (unsigned i = 0; i < r; ++i) {
    Lr *= L;
    Qr *= (L - 16);
  }
  const cpp_int num = cpp_int(m) * (Lr - Qr) + cpp_int(2 * r) * Lr;
  cpp_int q = num / Lr;
  if (q * Lr < num) ++q;
  return q.convert_to<std::uint64_t>();
}

// R = floor(L log2(m) / 256) for m a power of two.
std::size_t r_oracle(unsigned log2m, long L) { return static_cast<std::size_t>(L * log2m / 256); }

}  // namespace

TEST_CASE("urdec_params examples") {
  const auto p = urdec_desk_params(4096);
  CHECK(p.m == 16);
  CHECK(p.B == 256);
  CHECK(p.R == 4);
  CHECK(p.t == std::vector<std::uint64_t>{0, 3, 6, 9});

  CHECK_THROWS_AS(urdec_params(4096, std::exp2(-16)), ConfigError);
  CHECK_THROWS_AS(urdec_params(4096, 1.0 / 64), ConfigError);
  CHECK_THROWS_AS(urdec_params(4000, 1e-80), ConfigError);
  CHECK_THROWS_AS(urdec_params(4096, 1.5), ConfigError);

  const auto q = urdec_params(4096, std::exp2(-64));
  CHECK(q.alpha == 0.25);
  CHECK(q.R == 1);
  CHECK(q.t == std::vector<std::uint64_t>{0});
  CHECK(q.schedule_size(1) == 6);
  CHECK(t_oracle(16, 64, 1) == 6);
  CHECK_FALSE(q.warnings.empty());

  const auto fb = urdec_params_or_desk(4096, 1.0 / 64);
  CHECK(fb.R == 4);
  CHECK_FALSE(fb.warnings.empty());
}

TEST_CASE("schedule matches the exact rational oracle on a grid") {
  for (unsigned log2m = 1; log2m <= 12; ++log2m) {
    const std::uint64_t m = std::uint64_t{1} << log2m;
    for (long L = 17; L <= 400; L += 7) {
      const std::size_t R = r_oracle(log2m, L);
      bool oracle_ok = R >= 1;
      std::vector<std::uint64_t> t;
      for (unsigned r = 0; r < R; ++r) t.push_back(t_oracle(m, L, r));
      for (std::size_t r = 1; r < t.size(); ++r) oracle_ok &= t[r] > t[r - 1];
      if (!t.empty()) oracle_ok &= t.back() < m;
      if (!oracle_ok) {
        CHECK_THROWS_AS(urdec_params_log2(m * m * m, static_cast<double>(L)), ConfigError);
        continue;
      }
      const auto p = urdec_params_log2(m * m * m, static_cast<double>(L));
      CHECK(p.R == R);
      CHECK(p.t == t);
    }
  }
}

TEST_CASE("custom schedules") {
  const auto p = urdec_params_custom(3, 0.01, {0, 2});
  CHECK(p.U == 27);
  CHECK(p.R == 2);
  CHECK(p.custom_schedule);
  CHECK_THROWS_AS(urdec_params_custom(3, 0.01, {0, 3}), ConfigError);
  CHECK_THROWS_AS(urdec_params_custom(3, 0.01, {1, 2}), ConfigError);
  CHECK_THROWS_AS(urdec_params_custom(3, 0.01, {0, 0}), ConfigError);
}

TEST_CASE("sampled instances satisfy invariants and frequencies") {
  const auto p = urdec_desk_params(4096);
  std::vector<std::size_t> size_count(p.R);
  std::size_t p1_hits = 0, p1_total = 0;
  const int N = 10000;
  for (int i = 0; i < N; ++i) {
    const auto inst = sample_urdec(p, derive_seed(6, "inst", i));
    REQUIRE(check_urdec_instance(inst).empty());
    CHECK(inst.T.size() == p.t[inst.r]);
    ++size_count[inst.r];
    if (i < 500) {
      for (Element x = 0; x < inst.U; ++x) {
        if (!std::binary_search(inst.S.begin(), inst.S.end(), x)) {
          p1_hits += inst.part[x] == Part::P1;
          ++p1_total;
        }
      }
    }
  }
  const double sigma = std::sqrt(N * (1.0 / p.R) * (1 - 1.0 / p.R));
  for (auto c : size_count) CHECK(std::abs(c - static_cast<double>(N) / p.R) <= 3 * sigma);
  const double s2 = std::sqrt(p1_total * 0.25);
  CHECK(std::abs(p1_hits - p1_total / 2.0) <= 3 * s2);
}

TEST_CASE("per-element P1 frequency for a fixed S") {
  // The sampler draws S first; condition on one S by filtering U=8 draws
  // (16 possible sets).
  const auto p = urdec_desk_params(8);
  const auto target = sample_urdec(p, 0).S;
  std::vector<std::size_t> hits(8), seen(8);
  std::size_t kept = 0;
  for (int i = 0; kept < 4000 && i < 200000; ++i) {
    const auto inst = sample_urdec(p, derive_seed(7, "fix", i));
    if (inst.S != target) continue;
    ++kept;
    for (Element x = 0; x < 8; ++x) {
      if (std::binary_search(target.begin(), target.end(), x)) continue;
      hits[x] += inst.part[x] == Part::P1;
      ++seen[x];
    }
  }
  REQUIRE(kept == 4000);
  for (Element x = 0; x < 8; ++x) {
    if (!seen[x]) continue;
    // 4 sigma per element keeps the family-wise false alarm rate small.
    CHECK(std::abs(hits[x] - seen[x] / 2.0) <= 4 * std::sqrt(seen[x] * 0.25));
  }
}

TEST_CASE("instance text round trip") {
  const auto p = urdec_desk_params(64);
  const auto inst = sample_urdec(p, 99);
  std::stringstream ss;
  write_urdec_instance(ss, inst);
  const auto back = read_urdec_instance(ss);
  CHECK(back.S == inst.S);
  CHECK(back.T == inst.T);
  CHECK(back.part == inst.part);
  CHECK(back.side == inst.side);
  CHECK(back.delta == inst.delta);

  std::istringstream bad("64 4 0.5 0\n1 17 33 49\n\n1 2 3\n");
  CHECK_THROWS_AS(read_urdec_instance(bad), FormatError);
}

TEST_CASE("ur sketch basics") {
  const auto c = ur_sketch_config(4096, 1.0 / 64, 12);
  CHECK(c.reps == 12);
  CHECK(c.levels == 13);
  CHECK(c.code_bits == 12);

  const std::vector<Element> none;
  const auto empty = ur_alice(none, c);
  CHECK(empty.bits == c.message_bits());
  CHECK(std::all_of(empty.bytes.begin(), empty.bytes.end(), [](auto b) { return b == 0; }));

  const std::vector<Element> five{5};
  CHECK(ur_bob_search(ur_alice(five, c), none, c) == Element{5});
  const std::vector<Element> zero{0};
  CHECK(ur_bob_search(ur_alice(zero, c), none, c) == Element{0});
  CHECK_FALSE(ur_bob_search(ur_alice(five, c), five, c).has_value());
}

TEST_CASE("ur sketch linearity") {
  const auto c = ur_sketch_config(4096, 1.0 / 64, 3);
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Element> S;
    for (auto x : rng.sample_indices(4096, 20)) S.push_back(x);
    std::sort(S.begin(), S.end());
    const std::vector<Element> T(S.begin(), S.begin() + 7);
    const std::vector<Element> D(S.begin() + 7, S.end());
    const auto a = ur_alice(S, c).bytes;
    const auto b = ur_alice(T, c).bytes;
    const auto d = ur_alice(D, c).bytes;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] ^ b[i]) == d[i]);
  }
}

TEST_CASE("ur search succeeds with probability at least 1 - delta") {
  const double delta = 1.0 / 64;
  Rng rng(2024);
  int fail = 0;
  const int N = 10000;
  for (int i = 0; i < N; ++i) {
    const auto c = ur_sketch_config(4096, delta, rng.next());
    const auto diff = 1 + rng.below(64);
    const auto tsize = rng.below(64);
    std::vector<Element> S;
    for (auto x : rng.sample_indices(4096, diff + tsize)) S.push_back(x);
    std::vector<Element> T(S.begin(), S.begin() + static_cast<long>(tsize));
    std::sort(S.begin(), S.end());
    std::sort(T.begin(), T.end());
    const auto got = ur_bob_search(ur_alice(S, c), T, c);
    const bool ok = got && std::binary_search(S.begin(), S.end(), *got) &&
                    !std::binary_search(T.begin(), T.end(), *got);
    fail += !ok;
  }
  CHECK(fail <= delta * N);
}

TEST_CASE("decision reduces to search on the hard distribution") {
  const auto p = urdec_desk_params(4096);
  const double delta = 1.0 / 64;
  int errors = 0;
  const int N = 2000;
  for (int i = 0; i < N; ++i) {
    const auto inst = sample_urdec(p, derive_seed(3, "dec", i));
    const auto c = ur_sketch_config(4096, delta, derive_seed(3, "shared", i));
    const auto msg = ur_alice(inst.S, c);
    const auto found = ur_bob_search(msg, inst.T, c);
    const Side got = ur_bob_decide(msg, inst.T, inst.part, c);
    const auto diff = inst.s_minus_t();
    if (found && std::binary_search(diff.begin(), diff.end(), *found)) {
      CHECK(got == inst.side);
    }
    errors += got != inst.side;
  }
  CHECK(errors <= delta * N);
  CHECK(ur_sketch_config(4096, delta, 0).message_bits() <= 64.0 * 6 * 144);
}

TEST_CASE("protocol wrapper") {
  const auto c = ur_sketch_config(27, 0.25, 5);
  const auto proto = ur_sketch_protocol(c);
  const std::vector<Element> S{2, 10, 20};
  const std::vector<Element> T{10};
  std::vector<Part> part(27, Part::P1);
  part[10] = Part::InT;
  part[2] = part[20] = Part::P2;
  const auto msg = proto.alice(S);
  const auto found = proto.bob_search(T, msg);
  if (found) CHECK((*found == 2 || *found == 20));
  CHECK(proto.bob_decide(T, part, msg) == (found ? Side::P2 : Side::P1));
}
