#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agmlab/ur.hpp"

namespace agmlab {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 24;

/// A set with one element per block, stored as the integer whose base-B
/// digits (most significant first) are the in-block offsets. Numeric order
/// of codes is lexicographic order of the sorted element lists.
using SetCode = std::uint32_t;

struct SetSpace {
  std::uint64_t m = 0;
  std::uint64_t B = 0;

  static SetSpace of(const UrdecParams& p) { return {p.m, p.B}; }
  std::uint64_t size() const;  // B^m
  std::uint64_t digit(SetCode s, std::uint64_t block) const;
  Element element(SetCode s, std::uint64_t block) const { return block * B + digit(s, block); }
  std::vector<Element> elements(SetCode s) const;
  SetCode encode(const std::vector<Element>& S) const;
};

/// Sets that all contain the anchor T. Members are sorted and distinct.
struct SetCollection {
  SetSpace space;
  std::vector<SetCode> members;
  std::vector<Element> anchor;

  std::size_t size() const { return members.size(); }
  // Blocks that do not hold an element of the anchor.
  std::vector<std::uint64_t> free_blocks() const;
  // Empty string when every invariant holds.
  std::string check() const;
};

using GoodFilter = std::function<bool(const std::vector<Element>& S)>;

/// Alice's message on every one-per-block set, grouped by message.
/// Throws CapExceeded when B^m > cap.
std::map<std::vector<std::uint8_t>, std::vector<SetCode>> message_classes(
    const OneWayProtocol& protocol, const UrdecParams& params,
    std::uint64_t cap = kDefaultEnumerationCap, const GoodFilter& good = {});

SetCollection consistent_sets(const OneWayProtocol& protocol,
                              const std::vector<std::uint8_t>& message,
                              const UrdecParams& params,
                              std::uint64_t cap = kDefaultEnumerationCap);

// The most popular message; ties go to the lexicographically smallest.
std::vector<std::uint8_t> largest_class_message(
    const std::map<std::vector<std::uint8_t>, std::vector<SetCode>>& classes);

/// Ordered pairs (S1, S2), self-pairs included, by |(S1 ∩ S2) \ T|.
std::vector<BigInt> intersection_pair_counts(const SetCollection& coll);

struct IntersectionCheck {
  BigInt lhs;                     // sum over pairs of 2^{|(S1∩S2)\T|} - 1
  bool holds = false;             // 4·lhs >= |coll|^2
  std::vector<std::uint64_t> witness_k;  // k >= 1 with 4·4^k·pairs_k >= |coll|^2
  std::vector<BigInt> pairs_by_k;
};

IntersectionCheck check_intersection_lemma(const SetCollection& coll);

// ---------------------------------------------------------------------------
// Random process A

struct ProcessRound {
  std::uint64_t k = 0;
  std::size_t r = 0;            // r_i
  std::uint64_t t_r = 0;        // |T_i|
  SetCode s_star = 0;
  std::vector<Element> delta_t;
  std::vector<std::uint64_t> random_blocks;
  std::vector<Element> delta_t_prime;
  std::uint64_t size_before = 0;
  std::uint64_t size_after = 0;
  bool last = false;            // r_{i+1} >= R, no random blocks drawn
};

struct ProcessATrace {
  std::uint64_t m = 0;
  std::uint64_t B = 0;
  std::size_t R = 0;
  std::vector<std::uint64_t> t;
  std::vector<std::uint8_t> message;
  std::uint64_t initial_size = 0;
  std::vector<ProcessRound> rounds;
  bool failed = false;
  std::size_t I = 0;
  std::vector<Element> final_anchor;
  std::vector<SetCode> final_members;

  std::size_t final_r() const;
};

struct ProcessAOptions {
  std::uint64_t cap = kDefaultEnumerationCap;
  GoodFilter good;
  // Start from this message instead of the most popular one.
  std::optional<std::vector<std::uint8_t>> message;
  // Called with (i, S_i, T_i) before each round's test.
  std::function<void(std::size_t, const SetCollection&)> on_round;
};

ProcessATrace run_process_a(const OneWayProtocol& protocol, const UrdecParams& params,
                            std::uint64_t seed, const ProcessAOptions& options = {});

// Runs the process from an explicit S_0 (all members sharing one message).
ProcessATrace run_process_a(const SetCollection& s0, const UrdecParams& params,
                            std::uint64_t seed, const ProcessAOptions& options = {});

struct TraceCheck {
  bool thresholds = false;       // every |S_{i+1}| meets its selection threshold
  bool nesting = false;          // |T_i| = t_{r_i}, T grows, sizes shrink
  bool termination = false;      // r_I >= R iff not failed
  bool product_bound = false;    // |S_I| · prod(denominators) >= |S_0|
  bool product_identity = false; // prod(denominators) = 4^I (4m)^K B^{|T_I|-K}
  bool closed_form_applicable = false;  // B > 4m
  bool closed_form = false;      // |S_I| >= |S_0| (B/16m)^R B^{-|T_I|}
  std::string detail;

  // Everything that must hold; the closed form only when applicable.
  bool ok() const;
};

TraceCheck check_process_trace(const ProcessATrace& trace);

// "i k_i r_i t_{r_i} |S_i| |S_{i+1}|" per round, then "FAILED" or "DONE I=<v>".
void write_trace(std::ostream& out, const ProcessATrace& trace);

// ---------------------------------------------------------------------------
// Conditional error given S uniform in a collection and T = anchor

enum class ErrorMode { Exact, MonteCarlo };

struct ErrorEstimate {
  double value = 0;
  double std_error = 0;
  std::optional<BigRational> exact;
  std::uint64_t samples = 0;
};

/// Error of protocol.bob_decide under the hard distribution conditioned on
/// S in coll and T = coll.anchor. Exact mode enumerates S, the side and every
/// placement of the elements outside S; throws CapExceeded when
/// |coll| · 2^{U-m} exceeds the cap.
ErrorEstimate conditional_error(const OneWayProtocol& protocol, const SetCollection& coll,
                                ErrorMode mode, std::uint64_t samples = 100000,
                                std::uint64_t seed = 0,
                                std::uint64_t cap = kDefaultEnumerationCap);

/// Smallest error any Bob can reach when every member sends the same message:
/// the expected min(A1, A2) weight over partitions. Only elements that some
/// member holds in a free block matter, so the sum runs over their placements,
/// block by block. Throws CapExceeded when the placements of all but the widest
/// free block exceed the cap.
BigRational optimal_conditional_error(const SetCollection& coll,
                                      std::uint64_t cap = kDefaultEnumerationCap);

// ---------------------------------------------------------------------------
// Singleton probability along process A

struct SingletonEstimate {
  std::uint64_t runs = 0;
  std::uint64_t conditioned = 0;  // runs with the k prefix and S in S_i
  std::uint64_t hits = 0;         // of those, T_i = T
  std::optional<double> estimate;
  double std_error = 0;
  double bound = 0;               // 2^{6/alpha} / C(m, t_{r_i})
  std::string diagnostic;
};

SingletonEstimate estimate_singleton_prob(const OneWayProtocol& protocol,
                                          const UrdecParams& params,
                                          const std::vector<std::uint64_t>& k_prefix,
                                          const std::vector<Element>& S,
                                          const std::vector<Element>& T,
                                          std::uint64_t runs, std::uint64_t seed,
                                          const ProcessAOptions& options = {});

// ---------------------------------------------------------------------------
// Protocol battery

// Bob's answer is unchanged when the two parts swap, so its error is exactly 1/2.
Side swap_invariant_guess(std::span<const Element> T, std::span<const Part> partition);

OneWayProtocol constant_protocol();
OneWayProtocol identity_protocol(const UrdecParams& params);
OneWayProtocol first_block_protocol(const UrdecParams& params);
// First `budget_bits` of the UR sketch message; Bob decodes the zero-padded rest.
OneWayProtocol truncated_ur_protocol(const UrdecParams& params, unsigned budget_bits,
                                     std::uint64_t seed);
// Alice hashes S into `classes` messages; Bob guesses.
OneWayProtocol random_protocol(std::uint64_t classes, std::uint64_t seed);

std::vector<OneWayProtocol> protocol_battery(const UrdecParams& params, std::uint64_t seed);

// Lab schedule at U = 27: t = {0, 2}, so process A runs two rounds and draws
// one random block.
UrdecParams lab_params();

// ---------------------------------------------------------------------------
// Lemma validation harness

struct Lemma33Row {
  std::string protocol;
  std::string context;  // "class" or "process seed=<s> round=<i>"
  std::uint64_t size = 0;
  std::uint64_t anchor_size = 0;
  BigInt lhs;
  bool holds = false;
  // Computed whenever the inequality fails, since only then can the row
  // violate the lemma; for every row with Lemma33Options::all_errors.
  std::optional<BigRational> optimal_error;
  bool premise() const { return optimal_error && *optimal_error <= BigRational(1, 4); }
  bool violation() const { return premise() && !holds; }
};

struct Lemma33Options {
  std::uint64_t process_seeds = 4;
  std::uint64_t cap = kDefaultEnumerationCap;
  bool all_errors = false;
};

std::vector<Lemma33Row> validate_lemma33(const std::vector<OneWayProtocol>& protocols,
                                         const UrdecParams& params,
                                         const Lemma33Options& options = {});

std::string to_decimal(const BigRational& q, int digits = 6);

}  // namespace agmlab
