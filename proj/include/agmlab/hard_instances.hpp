#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "agmlab/graph.hpp"
#include "agmlab/rng.hpp"
#include "agmlab/ur.hpp"

namespace agmlab {

/// Role-set sizes for one block. Local layout: ids 0..3 are s1, s2, t1, t2;
/// the positive half is [4, 4 + half); the negative copy of v is v + half;
/// an odd leftover vertex (if any) is a filler attached to t1.
struct BlockScale {
  VertexId block_n = 0;
  VertexId vm = 0;       // |V^m| = |V~^m|
  VertexId vr_half = 0;  // |V^r_1| = |V^r_2|
  std::uint64_t U = 0;   // universe of the embedded UR_dec instances
  double log2_inv_delta = 0;

  VertexId half() const { return block_n >= 4 ? (block_n - 4) / 2 : 0; }
  bool has_filler() const { return block_n >= 4 && (block_n - 4) % 2 == 1; }
  UrdecParams urdec() const;
  std::uint64_t t_max() const;

  // Throws ConfigError for malformed values, CapExceeded when the role sets
  // do not fit in the positive half.
  void validate() const;
  // Embedding additionally needs |P_i| <= vr_half and room for the injection.
  void validate_embedding() const;

  /// Exponents as written: block sqrt(n), |V^m| = n^(1/4), |V^r_i| = n^(1/8),
  /// U = n^(1/8), delta = 4 n^(-1/32). Fails validation at any practical n.
  static BlockScale paper(VertexId n);

  /// Largest-U desk scale that fits sqrt(n)-vertex blocks, see README.
  static BlockScale desk(VertexId n, bool for_embedding = false);

  std::string describe() const;
  friend bool operator==(const BlockScale&, const BlockScale&) = default;
};

enum class Role : std::uint8_t { S1, S2, T1, T2, Vl, Vm, VmTilde, Vr1, Vr2, Unused, Filler,
                                 PartS, PartSBar, PartS1, PartSBar1, PartS2, PartSBar2 };

struct RoleTag {
  Role role = Role::Unused;
  bool negative = false;
  std::int32_t j = -1;  // group index for Vl, Vm, VmTilde
};

std::string role_name(const RoleTag& tag);

struct BlockInstance {
  BlockScale scale;
  int procedure = 1;  // 1 = D_blk, 2 = V^m-like halves, 3 = V^r-like quarters
  Graph graph;        // local ids 1..block_n (local index + 1)
  std::vector<RoleTag> roles;        // by local index
  std::vector<VertexId> mirror;      // local index -> its +/- copy (specials: self)
  std::vector<VertexId> vm, vm_tilde;  // matched by position
  std::vector<VertexId> vr1, vr2;
  std::vector<UrdecInstance> embedded;  // per j, procedure 1 only
  std::int32_t jstar = -1;
  int b = 0;

  static constexpr VertexId kS1 = 0, kS2 = 1, kT1 = 2, kT2 = 3;
};

// 0 if s1 and t1 share a component inside the block, else 1 (union-find).
int block_case(const BlockInstance& blk);

// Empty string when the two-component, separation, mirror and b invariants hold.
std::string check_block(const BlockInstance& blk);

/// Empirical degree laws of +V^m and +V^r vertices under D_blk at a scale.
class DegreeTables {
 public:
  static constexpr std::size_t kDefaultDraws = 10000;

  static DegreeTables estimate(const BlockScale& scale, std::size_t draws = kDefaultDraws,
                               std::uint64_t seed = 0x5eed);
  // Estimated once per scale and kept for the process lifetime.
  static std::shared_ptr<const DegreeTables> cached(const BlockScale& scale);

  void save(std::ostream& out) const;
  static DegreeTables load(std::istream& in);

  // Inverse-CDF draw from the degree histogram.
  std::size_t sample_vm(Rng& rng) const;
  std::size_t sample_vr(Rng& rng) const;

  const std::vector<std::uint64_t>& vm_hist() const { return vm_hist_; }
  const std::vector<std::uint64_t>& vr_hist() const { return vr_hist_; }
  const BlockScale& scale() const { return scale_; }

 private:
  BlockScale scale_;
  std::vector<std::uint64_t> vm_hist_;
  std::vector<std::uint64_t> vr_hist_;
};

BlockInstance sample_block(const BlockScale& scale, std::uint64_t seed);
BlockInstance sample_block_bar(const BlockScale& scale, std::uint64_t seed);
// Procedures 2 and 3 directly, with explicit degree tables.
BlockInstance sample_block_procedure(int procedure, const BlockScale& scale,
                                     std::uint64_t seed, const DegreeTables* tables);

struct VertexNeighborhood {
  VertexId vertex = 0;  // local id (1-based)
  std::vector<VertexId> neighbors;
  friend bool operator==(const VertexNeighborhood&, const VertexNeighborhood&) = default;
};

struct EmbeddedBlock {
  BlockInstance block;
  // Neighborhoods of +v^m_{j*} and -v^m_{j*}: Alice's part of the simulation.
  std::vector<VertexNeighborhood> alice_view;
  // Adjacency Bob can build from (T, P1, P2) and the shared objects; lists of
  // +-v^m_{j*} and +-V^r are withheld (empty, hidden = true).
  std::vector<std::vector<VertexId>> bob_adjacency;
  std::vector<char> bob_hidden;
};

/// Places inst at a uniformly chosen v^m_{j*} through a random injection of
/// [U] into the positive half; the rest of the block follows D_blk.
EmbeddedBlock embed_urdec_block(const UrdecInstance& inst, const BlockScale& scale,
                                std::uint64_t seed);

// Same S, freshly drawn (r, T, side, partition); used for view-split checks.
UrdecInstance resample_bob_side(const UrdecInstance& inst, const UrdecParams& p,
                                std::uint64_t seed);

struct ConnInstance {
  VertexId n = 0;
  VertexId block_n = 0;
  std::vector<BlockInstance> blocks;
  Graph graph;  // global ids: block i, local index x -> i * block_n + x + 1
  std::vector<Edge> chain;
  std::vector<int> b;
  bool connected = false;

  VertexId global_id(std::size_t block, VertexId local_index) const {
    return static_cast<VertexId>(block * block_n + local_index + 1);
  }
};

/// sqrt(n) blocks from the mixed block law, chained t1(i)-s1(i+1) and
/// t2(i)-s2(i+1) cyclically. connected = XOR of b, cross-checked by union-find.
ConnInstance sample_conn(VertexId n, std::uint64_t seed);
ConnInstance sample_conn(VertexId n, std::uint64_t seed, const BlockScale& scale);
// Chains given blocks (all of one block size) into a cyclic instance.
ConnInstance assemble_conn(std::vector<BlockInstance> blocks);

// Line-oriented sidecar: roles, b vector, jstar, embedded instance digests.
void write_conn_metadata(std::ostream& out, const ConnInstance& inst);
void write_block_metadata(std::ostream& out, const BlockInstance& blk);
std::uint64_t urdec_digest(const UrdecInstance& inst);

}  // namespace agmlab
