#include "agmlab/hard_instances.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "agmlab/dsu.hpp"
#include "agmlab/errors.hpp"
#include "agmlab/hash.hpp"

namespace agmlab {

namespace {

constexpr VertexId kS1 = BlockInstance::kS1;
constexpr VertexId kS2 = BlockInstance::kS2;
constexpr VertexId kT1 = BlockInstance::kT1;
constexpr VertexId kT2 = BlockInstance::kT2;
constexpr VertexId kFirstPositive = 4;

VertexId exact_sqrt(VertexId n) {
  auto r = static_cast<VertexId>(std::llround(std::sqrt(static_cast<double>(n))));
  while (static_cast<std::uint64_t>(r) * r > n) --r;
  while (static_cast<std::uint64_t>(r + 1) * (r + 1) <= n) ++r;
  return static_cast<std::uint64_t>(r) * r == n ? r : 0;
}

// Accumulates a block: positive-half edges are mirrored at finalize().
struct BlockBuilder {
  explicit BlockBuilder(const BlockScale& scale, int procedure) {
    blk.scale = scale;
    blk.procedure = procedure;
    half = scale.half();
    const VertexId n = scale.block_n;
    blk.roles.assign(n, RoleTag{});
    blk.roles[kS1].role = Role::S1;
    blk.roles[kS2].role = Role::S2;
    blk.roles[kT1].role = Role::T1;
    blk.roles[kT2].role = Role::T2;
    blk.mirror.resize(n);
    std::iota(blk.mirror.begin(), blk.mirror.end(), VertexId{0});
    for (VertexId v = kFirstPositive; v < kFirstPositive + half; ++v) {
      blk.mirror[v] = v + half;
      blk.mirror[v + half] = v;
      blk.roles[v + half].negative = true;
    }
    if (scale.has_filler()) blk.roles[n - 1].role = Role::Filler;
  }

  VertexId neg(VertexId v) const { return v + half; }

  void set_role(VertexId v, Role r, std::int32_t j = -1) {
    blk.roles[v].role = r;
    blk.roles[v].j = j;
    blk.roles[neg(v)].role = r;
    blk.roles[neg(v)].j = j;
  }

  void positive_edge(VertexId a, VertexId b) { pos_edges.push_back({a, b}); }
  void edge(VertexId a, VertexId b) { extra_edges.push_back({a, b}); }

  void filler_to_t1() {
    if (blk.scale.has_filler()) edge(blk.scale.block_n - 1, kT1);
  }

  BlockInstance finalize() {
    std::vector<Edge> all;
    all.reserve(2 * pos_edges.size() + extra_edges.size());
    for (const Edge& e : pos_edges) {
      all.push_back({e.u + 1, e.v + 1});
      all.push_back({neg(e.u) + 1, neg(e.v) + 1});
    }
    for (const Edge& e : extra_edges) all.push_back({e.u + 1, e.v + 1});
    blk.graph = Graph::from_edges(blk.scale.block_n, all);
    blk.b = block_case(blk);
    return std::move(blk);
  }

  BlockInstance blk;
  VertexId half = 0;
  std::vector<Edge> pos_edges;
  std::vector<Edge> extra_edges;
};

std::vector<VertexId> positive_ids(VertexId half) {
  std::vector<VertexId> ids(half);
  std::iota(ids.begin(), ids.end(), kFirstPositive);
  return ids;
}

// Removes and returns a uniformly random member of a sorted pool.
VertexId take_random(std::vector<VertexId>& pool, Rng& rng) {
  if (pool.empty()) throw CapExceeded("block: ran out of unused vertices");
  const auto idx = static_cast<std::ptrdiff_t>(rng.below(pool.size()));
  const VertexId v = pool[static_cast<std::size_t>(idx)];
  pool.erase(pool.begin() + idx);
  return v;
}

// t-wiring shared by D_blk and the embedding.
void wire_terminals(BlockBuilder& bb, std::int32_t jstar, const std::vector<VertexId>& pool) {
  auto& blk = bb.blk;
  for (VertexId v : blk.vr1) {
    bb.edge(v, kT1);
    bb.edge(bb.neg(v), kT2);
  }
  for (VertexId v : blk.vr2) {
    bb.edge(v, kT2);
    bb.edge(bb.neg(v), kT1);
  }
  const VertexId tilde = blk.vm_tilde[static_cast<std::size_t>(jstar)];
  bb.edge(kS1, tilde);
  bb.edge(kS2, bb.neg(tilde));
  for (VertexId v : pool) {
    bb.edge(v, kT1);
    bb.edge(bb.neg(v), kT1);
  }
  bb.filler_to_t1();
  blk.jstar = jstar;
}

// One v^m_j with its own UR_dec instance: V^l_j from the pool, V^r edges on its side.
void wire_vm(BlockBuilder& bb, std::size_t j, const UrdecInstance& inst,
             std::vector<VertexId>& pool, Rng& rng) {
  auto& blk = bb.blk;
  const VertexId v = blk.vm[j];
  bb.positive_edge(v, blk.vm_tilde[j]);
  for (std::size_t k = 0; k < inst.T.size(); ++k) {
    const VertexId w = take_random(pool, rng);
    bb.set_role(w, Role::Vl, static_cast<std::int32_t>(j));
    bb.positive_edge(v, w);
  }
  const auto& side = inst.side == Side::P1 ? blk.vr1 : blk.vr2;
  const std::size_t diff = inst.S.size() - inst.T.size();
  if (diff > side.size()) throw CapExceeded("block: |S \\ T| exceeds |V^r_i|");
  for (auto idx : rng.sample_indices(side.size(), diff)) bb.positive_edge(v, side[idx]);
}

void s_wiring(BlockBuilder& bb, int c) {
  if (c == 0) {
    bb.edge(kS1, kT1);
    bb.edge(kS2, kT2);
  } else {
    bb.edge(kS1, kT2);
    bb.edge(kS2, kT1);
  }
}

UrdecInstance sample_given_s(const UrdecParams& p, std::vector<Element> S, Rng& rng) {
  UrdecInstance inst;
  inst.U = p.U;
  inst.m = p.m;
  inst.B = p.B;
  inst.delta = p.delta;
  inst.S = std::move(S);
  inst.r = rng.below(p.R);
  for (auto idx : rng.sample_indices(p.m, p.t[inst.r])) inst.T.push_back(inst.S[idx]);
  std::sort(inst.T.begin(), inst.T.end());
  inst.side = rng.coin() ? Side::P2 : Side::P1;
  inst.part.assign(p.U, Part::P1);
  for (Element x = 0; x < p.U; ++x) {
    if (std::binary_search(inst.T.begin(), inst.T.end(), x)) {
      inst.part[x] = Part::InT;
    } else if (std::binary_search(inst.S.begin(), inst.S.end(), x)) {
      inst.part[x] = static_cast<Part>(inst.side);
    } else {
      inst.part[x] = rng.coin() ? Part::P2 : Part::P1;
    }
  }
  return inst;
}

}  // namespace

UrdecParams BlockScale::urdec() const { return urdec_params_log2(U, log2_inv_delta); }

std::uint64_t BlockScale::t_max() const { return urdec().t.back(); }

void BlockScale::validate() const {
  if (block_n < 8) throw ConfigError("block scale: block_n must be >= 8");
  if (vm < 1) throw ConfigError("block scale: |V^m| must be >= 1");
  const UrdecParams p = urdec();
  if (vr_half < p.m) {
    throw ConfigError("block scale: |V^r_i| must be at least m = U^(1/3)");
  }
  const std::uint64_t need = 2ull * vm + 2ull * vr_half + std::uint64_t{vm} * p.t.back();
  if (need > half()) {
    throw CapExceeded("block scale: role sets need " + std::to_string(need) +
                      " positive vertices but the block has " + std::to_string(half()));
  }
}

void BlockScale::validate_embedding() const {
  validate();
  if (vr_half < U) {
    throw CapExceeded("block scale: embedding needs |V^r_i| >= U (" + std::to_string(vr_half) +
                      " < " + std::to_string(U) + ")");
  }
}

BlockScale BlockScale::paper(VertexId n) {
  const VertexId root = exact_sqrt(n);
  if (root == 0) throw ConfigError("block scale: n must be a perfect square");
  const double dn = n;
  BlockScale s;
  s.block_n = root;
  s.vm = static_cast<VertexId>(std::llround(std::pow(dn, 0.25)));
  s.vr_half = static_cast<VertexId>(std::llround(std::pow(dn, 0.125)));
  s.U = static_cast<std::uint64_t>(std::llround(std::pow(dn, 0.125)));
  s.log2_inv_delta = std::log2(dn) / 32.0 - 2.0;
  return s;
}

BlockScale BlockScale::desk(VertexId n, bool for_embedding) {
  const VertexId root = exact_sqrt(n);
  if (root == 0) throw ConfigError("block scale: n must be a perfect square");
  const double dn = n;
  const auto target = std::max<VertexId>(1, static_cast<VertexId>(std::llround(std::pow(dn, 0.25))));
  const auto base_vr = static_cast<VertexId>(std::llround(std::pow(dn, 0.125)));
  const double paper_log2 = std::log2(dn) / 32.0 - 2.0;
  BlockScale best;
  for (std::uint64_t U : {512ull, 64ull, 8ull}) {
    BlockScale s;
    s.block_n = root;
    s.U = U;
    UrdecParams p;
    bool paper_ok = false;
    if (paper_log2 > 0) {
      try {
        p = urdec_params_log2(U, paper_log2);
        s.log2_inv_delta = paper_log2;
        paper_ok = true;
      } catch (const ConfigError&) {
      }
    }
    if (!paper_ok) {
      p = urdec_desk_params(U);
      s.log2_inv_delta = kDeskScheduleLog2InvDelta;
    }
    s.vr_half = std::max<VertexId>(static_cast<VertexId>(p.m), base_vr);
    if (for_embedding) s.vr_half = std::max<VertexId>(s.vr_half, static_cast<VertexId>(U));
    const std::uint64_t half = s.half();
    if (half < 2ull * s.vr_half) continue;
    const std::uint64_t fit = (half - 2ull * s.vr_half) / (2 + p.t.back());
    s.vm = static_cast<VertexId>(std::min<std::uint64_t>(target, fit));
    if (s.vm < 1) continue;
    if (s.vm >= std::max<VertexId>(2, (target + 1) / 2)) return s;
    if (s.vm > best.vm) best = s;
  }
  if (best.vm < 1) {
    throw CapExceeded("block scale: n=" + std::to_string(n) +
                      " is too small for any desk block scale");
  }
  return best;
}

std::string BlockScale::describe() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "block_n=%u vm=%u vr_half=%u U=%llu log2_inv_delta=%.17g",
                block_n, vm, vr_half, static_cast<unsigned long long>(U), log2_inv_delta);
  return buf;
}

std::string role_name(const RoleTag& tag) {
  std::string base;
  switch (tag.role) {
    case Role::S1: return "s1";
    case Role::S2: return "s2";
    case Role::T1: return "t1";
    case Role::T2: return "t2";
    case Role::Filler: return "filler";
    case Role::Vl: base = "Vl[" + std::to_string(tag.j) + "]"; break;
    case Role::Vm: base = "Vm[" + std::to_string(tag.j) + "]"; break;
    case Role::VmTilde: base = "Vm~[" + std::to_string(tag.j) + "]"; break;
    case Role::Vr1: base = "Vr1"; break;
    case Role::Vr2: base = "Vr2"; break;
    case Role::Unused: base = "unused"; break;
    case Role::PartS: base = "S"; break;
    case Role::PartSBar: base = "Sbar"; break;
    case Role::PartS1: base = "S1"; break;
    case Role::PartSBar1: base = "Sbar1"; break;
    case Role::PartS2: base = "S2"; break;
    case Role::PartSBar2: base = "Sbar2"; break;
  }
  return (tag.negative ? "-" : "") + base;
}

int block_case(const BlockInstance& blk) {
  DisjointSets dsu(blk.graph.n());
  for (const Edge& e : blk.graph.edges()) dsu.unite(e.u - 1, e.v - 1);
  return dsu.same(kS1, kT1) ? 0 : 1;
}

std::string check_block(const BlockInstance& blk) {
  const Graph& g = blk.graph;
  DisjointSets dsu(g.n());
  for (const Edge& e : g.edges()) dsu.unite(e.u - 1, e.v - 1);
  if (dsu.count() != 2) return "block has " + std::to_string(dsu.count()) + " components";
  if (dsu.same(kS1, kS2)) return "s1 and s2 share a component";
  if (dsu.same(kT1, kT2)) return "t1 and t2 share a component";
  if (block_case(blk) != blk.b) return "stored b disagrees with union-find";

  const VertexId half = blk.scale.half();
  const auto positive = [&](VertexId v) { return v >= kFirstPositive && v < kFirstPositive + half; };
  const auto negative = [&](VertexId v) { return v >= kFirstPositive + half && v < kFirstPositive + 2 * half; };
  std::size_t pos_count = 0, neg_count = 0;
  for (const Edge& e : g.edges()) {
    const VertexId a = e.u - 1, b = e.v - 1;
    if (positive(a) && positive(b)) {
      ++pos_count;
      if (!g.has_edge(blk.mirror[a] + 1, blk.mirror[b] + 1)) return "mirror copy is missing an edge";
    } else if (negative(a) && negative(b)) {
      ++neg_count;
    } else if ((positive(a) && negative(b)) || (negative(a) && positive(b))) {
      return "edge between the two signed halves";
    }
  }
  if (pos_count != neg_count) return "mirror copy has extra edges";

  if (blk.procedure == 1) {
    if (blk.vm.size() != blk.scale.vm || blk.vm_tilde.size() != blk.scale.vm) {
      return "|V^m| does not match the scale";
    }
    if (blk.vr1.size() != blk.scale.vr_half || blk.vr2.size() != blk.scale.vr_half) {
      return "|V^r_i| does not match the scale";
    }
    if (blk.jstar < 0 || static_cast<std::size_t>(blk.jstar) >= blk.embedded.size()) {
      return "jstar out of range";
    }
    const Side side = blk.embedded[static_cast<std::size_t>(blk.jstar)].side;
    if (blk.b != (side == Side::P2 ? 1 : 0)) return "b disagrees with the jstar instance side";
  }
  return {};
}

DegreeTables DegreeTables::estimate(const BlockScale& scale, std::size_t draws,
                                    std::uint64_t seed) {
  scale.validate();
  DegreeTables t;
  t.scale_ = scale;
  auto bump = [](std::vector<std::uint64_t>& h, std::size_t d) {
    if (h.size() <= d) h.resize(d + 1);
    ++h[d];
  };
  for (std::size_t i = 0; i < draws; ++i) {
    const BlockInstance blk = sample_block(scale, derive_seed(seed, "degtab", i));
    for (VertexId v : blk.vm) bump(t.vm_hist_, blk.graph.degree(v + 1));
    for (VertexId v : blk.vr1) bump(t.vr_hist_, blk.graph.degree(v + 1));
    for (VertexId v : blk.vr2) bump(t.vr_hist_, blk.graph.degree(v + 1));
  }
  return t;
}

std::shared_ptr<const DegreeTables> DegreeTables::cached(const BlockScale& scale) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<const DegreeTables>> cache;
  const std::string key = scale.describe();
  std::lock_guard lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto t = std::make_shared<const DegreeTables>(estimate(scale));
  cache.emplace(key, t);
  return t;
}

void DegreeTables::save(std::ostream& out) const {
  out << "degree-tables " << scale_.block_n << ' ' << scale_.vm << ' ' << scale_.vr_half << ' '
      << scale_.U << ' ';
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", scale_.log2_inv_delta);
  out << buf << '\n';
  out << "vm";
  for (auto c : vm_hist_) out << ' ' << c;
  out << "\nvr";
  for (auto c : vr_hist_) out << ' ' << c;
  out << '\n';
}

DegreeTables DegreeTables::load(std::istream& in) {
  DegreeTables t;
  std::string line;
  std::string tag;
  if (!std::getline(in, line)) throw FormatError(1, "missing degree-tables header");
  {
    std::istringstream ss(line);
    if (!(ss >> tag >> t.scale_.block_n >> t.scale_.vm >> t.scale_.vr_half >> t.scale_.U >>
          t.scale_.log2_inv_delta) ||
        tag != "degree-tables") {
      throw FormatError(1, "expected 'degree-tables block_n vm vr_half U log2_inv_delta'");
    }
  }
  for (std::size_t line_no = 2; line_no <= 3; ++line_no) {
    if (!std::getline(in, line)) throw FormatError(line_no, "missing histogram line");
    std::istringstream ss(line);
    const char* want = line_no == 2 ? "vm" : "vr";
    if (!(ss >> tag) || tag != want) throw FormatError(line_no, std::string("expected '") + want + "'");
    auto& h = line_no == 2 ? t.vm_hist_ : t.vr_hist_;
    std::uint64_t c = 0;
    while (ss >> c) h.push_back(c);
    if (!ss.eof()) throw FormatError(line_no, "bad histogram count");
    if (std::accumulate(h.begin(), h.end(), std::uint64_t{0}) == 0) {
      throw FormatError(line_no, "empty histogram");
    }
  }
  return t;
}

namespace {

std::size_t sample_hist(const std::vector<std::uint64_t>& h, Rng& rng) {
  const std::uint64_t total = std::accumulate(h.begin(), h.end(), std::uint64_t{0});
  if (total == 0) throw ConfigError("degree table is empty");
  std::uint64_t x = rng.below(total);
  for (std::size_t d = 0; d < h.size(); ++d) {
    if (x < h[d]) return d;
    x -= h[d];
  }
  return h.size() - 1;
}

}  // namespace

std::size_t DegreeTables::sample_vm(Rng& rng) const { return sample_hist(vm_hist_, rng); }
std::size_t DegreeTables::sample_vr(Rng& rng) const { return sample_hist(vr_hist_, rng); }

BlockInstance sample_block(const BlockScale& scale, std::uint64_t seed) {
  scale.validate();
  const UrdecParams params = scale.urdec();
  Rng rng(derive_seed(seed, "blk"));
  BlockBuilder bb(scale, 1);
  auto& blk = bb.blk;

  auto pos = positive_ids(bb.half);
  rng.shuffle(pos);
  auto it = pos.begin();
  auto take = [&](std::size_t k) {
    std::vector<VertexId> out(it, it + static_cast<std::ptrdiff_t>(k));
    it += static_cast<std::ptrdiff_t>(k);
    return out;
  };
  blk.vm = take(scale.vm);
  blk.vm_tilde = take(scale.vm);
  blk.vr1 = take(scale.vr_half);
  blk.vr2 = take(scale.vr_half);
  std::vector<VertexId> pool(it, pos.end());
  std::sort(pool.begin(), pool.end());
  for (std::size_t j = 0; j < scale.vm; ++j) {
    bb.set_role(blk.vm[j], Role::Vm, static_cast<std::int32_t>(j));
    bb.set_role(blk.vm_tilde[j], Role::VmTilde, static_cast<std::int32_t>(j));
  }
  for (VertexId v : blk.vr1) bb.set_role(v, Role::Vr1);
  for (VertexId v : blk.vr2) bb.set_role(v, Role::Vr2);

  for (std::size_t j = 0; j < scale.vm; ++j) {
    blk.embedded.push_back(sample_urdec(params, derive_seed(seed, "blk-ur", j)));
    wire_vm(bb, j, blk.embedded.back(), pool, rng);
  }
  const auto jstar = static_cast<std::int32_t>(rng.below(scale.vm));
  wire_terminals(bb, jstar, pool);
  return bb.finalize();
}

BlockInstance sample_block_procedure(int procedure, const BlockScale& scale,
                                     std::uint64_t seed, const DegreeTables* tables) {
  if (procedure == 1) return sample_block(scale, seed);
  if (procedure != 2 && procedure != 3) throw ConfigError("block procedure must be 1, 2 or 3");
  if (!tables) throw ConfigError("block procedures 2 and 3 need degree tables");
  scale.validate();
  Rng rng(derive_seed(seed, "blk-bar", static_cast<std::uint64_t>(procedure)));
  BlockBuilder bb(scale, procedure);
  const int c = rng.coin() ? 1 : 0;
  s_wiring(bb, c);
  auto pos = positive_ids(bb.half);
  rng.shuffle(pos);

  if (procedure == 2) {
    const std::size_t s_size = (pos.size() + 1) / 2;
    const std::vector<VertexId> S(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(s_size));
    const std::vector<VertexId> Sbar(pos.begin() + static_cast<std::ptrdiff_t>(s_size), pos.end());
    for (VertexId v : S) bb.set_role(v, Role::PartS);
    for (VertexId v : Sbar) bb.set_role(v, Role::PartSBar);
    for (VertexId v : S) {
      const std::size_t d = std::min(tables->sample_vm(rng), Sbar.size());
      for (auto idx : rng.sample_indices(Sbar.size(), d)) bb.positive_edge(v, Sbar[idx]);
    }
    for (VertexId v : Sbar) {
      bb.edge(v, kT1);
      bb.edge(bb.neg(v), kT1);
    }
  } else {
    std::size_t sizes[4];
    for (std::size_t i = 0; i < 4; ++i) sizes[i] = pos.size() / 4 + (i < pos.size() % 4 ? 1 : 0);
    std::vector<VertexId> parts[4];
    std::size_t at = 0;
    const Role part_roles[4] = {Role::PartS1, Role::PartSBar1, Role::PartS2, Role::PartSBar2};
    for (std::size_t i = 0; i < 4; ++i) {
      parts[i].assign(pos.begin() + static_cast<std::ptrdiff_t>(at),
                      pos.begin() + static_cast<std::ptrdiff_t>(at + sizes[i]));
      at += sizes[i];
      for (VertexId v : parts[i]) bb.set_role(v, part_roles[i]);
    }
    for (int side = 0; side < 2; ++side) {
      const VertexId t = side == 0 ? kT1 : kT2;
      const auto& S = parts[2 * side];
      const auto& Sbar = parts[2 * side + 1];
      for (VertexId v : S) {
        const std::size_t d = tables->sample_vr(rng);
        const std::size_t k = std::min(d > 0 ? d - 1 : 0, Sbar.size());
        for (auto idx : rng.sample_indices(Sbar.size(), k)) bb.positive_edge(v, Sbar[idx]);
        bb.edge(v, t);
        bb.edge(bb.neg(v), t);
      }
      for (VertexId v : Sbar) {
        bb.edge(v, t);
        bb.edge(bb.neg(v), t);
      }
    }
  }
  bb.filler_to_t1();
  return bb.finalize();
}

BlockInstance sample_block_bar(const BlockScale& scale, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "blk-bar-choice"));
  const int procedure = 1 + static_cast<int>(rng.below(3));
  if (procedure == 1) return sample_block(scale, seed);
  const auto tables = DegreeTables::cached(scale);
  return sample_block_procedure(procedure, scale, seed, tables.get());
}

UrdecInstance resample_bob_side(const UrdecInstance& inst, const UrdecParams& p,
                                std::uint64_t seed) {
  if (inst.U != p.U) throw ConfigError("resample: instance universe differs from params");
  Rng rng(derive_seed(seed, "bob-side"));
  return sample_given_s(p, inst.S, rng);
}

EmbeddedBlock embed_urdec_block(const UrdecInstance& inst, const BlockScale& scale,
                                std::uint64_t seed) {
  scale.validate_embedding();
  if (inst.U != scale.U) throw ConfigError("embed: instance universe differs from the scale's U");
  if (const auto err = check_urdec_instance(inst); !err.empty()) {
    throw ConfigError("embed: invalid instance: " + err);
  }
  const UrdecParams params = scale.urdec();
  std::size_t p1 = 0, p2 = 0;
  for (Part x : inst.part) {
    p1 += x == Part::P1;
    p2 += x == Part::P2;
  }
  if (p1 > scale.vr_half || p2 > scale.vr_half) {
    throw CapExceeded("embed: |P_i| exceeds |V^r_i|");
  }

  // Steps 1-3 use public randomness; the rest is Bob's.
  Rng shared(derive_seed(seed, "embed-shared"));
  Rng bob(derive_seed(seed, "embed-bob"));
  BlockBuilder bb(scale, 1);
  auto& blk = bb.blk;

  auto pos = positive_ids(bb.half);
  shared.shuffle(pos);
  blk.vm.assign(pos.begin(), pos.begin() + scale.vm);
  blk.vm_tilde.assign(pos.begin() + scale.vm, pos.begin() + 2 * scale.vm);
  const auto jstar = static_cast<std::int32_t>(shared.below(scale.vm));
  std::vector<VertexId> rest(pos.begin() + 2 * scale.vm, pos.end());
  std::sort(rest.begin(), rest.end());
  if (rest.size() < inst.U) throw CapExceeded("embed: injection of [U] does not fit");
  std::vector<VertexId> f(inst.U);
  std::vector<char> used(scale.block_n, 0);
  const auto image = shared.sample_indices(rest.size(), inst.U);
  for (Element x = 0; x < inst.U; ++x) {
    f[x] = rest[image[x]];
    used[f[x]] = 1;
  }
  std::vector<VertexId> pool;
  for (VertexId v : rest) {
    if (!used[v]) pool.push_back(v);
  }

  for (std::size_t j = 0; j < scale.vm; ++j) {
    bb.set_role(blk.vm[j], Role::Vm, static_cast<std::int32_t>(j));
    bb.set_role(blk.vm_tilde[j], Role::VmTilde, static_cast<std::int32_t>(j));
  }
  // Steps 4-6.
  for (Element x : inst.T) bb.set_role(f[x], Role::Vl, jstar);
  for (Element x = 0; x < inst.U; ++x) {
    if (inst.part[x] == Part::P1) blk.vr1.push_back(f[x]);
  }
  while (blk.vr1.size() < scale.vr_half) blk.vr1.push_back(take_random(pool, bob));
  for (Element x = 0; x < inst.U; ++x) {
    if (inst.part[x] == Part::P2) blk.vr2.push_back(f[x]);
  }
  while (blk.vr2.size() < scale.vr_half) blk.vr2.push_back(take_random(pool, bob));
  for (VertexId v : blk.vr1) bb.set_role(v, Role::Vr1);
  for (VertexId v : blk.vr2) bb.set_role(v, Role::Vr2);

  // Step 7: Alice's vertex.
  const VertexId vstar = blk.vm[static_cast<std::size_t>(jstar)];
  bb.positive_edge(vstar, blk.vm_tilde[static_cast<std::size_t>(jstar)]);
  for (Element x : inst.S) bb.positive_edge(vstar, f[x]);

  // Step 8: the other v^m_j follow D_blk.
  blk.embedded.resize(scale.vm);
  for (std::size_t j = 0; j < scale.vm; ++j) {
    if (static_cast<std::int32_t>(j) == jstar) {
      blk.embedded[j] = inst;
      continue;
    }
    blk.embedded[j] = sample_urdec(params, derive_seed(seed, "embed-ur", j));
    wire_vm(bb, j, blk.embedded[j], pool, bob);
  }
  // Steps 9-10.
  wire_terminals(bb, jstar, pool);

  EmbeddedBlock out;
  out.block = bb.finalize();
  const Graph& g = out.block.graph;
  for (VertexId v : {vstar, out.block.mirror[vstar]}) {
    const auto nb = g.neighbors(v + 1);
    out.alice_view.push_back({v + 1, std::vector<VertexId>(nb.begin(), nb.end())});
  }
  out.bob_adjacency.resize(g.n());
  out.bob_hidden.assign(g.n(), 0);
  out.bob_hidden[vstar] = out.bob_hidden[out.block.mirror[vstar]] = 1;
  for (VertexId v : out.block.vr1) out.bob_hidden[v] = out.bob_hidden[out.block.mirror[v]] = 1;
  for (VertexId v : out.block.vr2) out.bob_hidden[v] = out.bob_hidden[out.block.mirror[v]] = 1;
  for (VertexId v = 0; v < g.n(); ++v) {
    if (out.bob_hidden[v]) continue;
    const auto nb = g.neighbors(v + 1);
    out.bob_adjacency[v].assign(nb.begin(), nb.end());
  }
  return out;
}

ConnInstance sample_conn(VertexId n, std::uint64_t seed) {
  return sample_conn(n, seed, BlockScale::desk(n));
}

ConnInstance sample_conn(VertexId n, std::uint64_t seed, const BlockScale& scale) {
  const VertexId root = exact_sqrt(n);
  if (root == 0) throw ConfigError("conn: n must be a perfect square");
  if (root < 2) throw ConfigError("conn: need at least two blocks");
  if (scale.block_n != root) throw ConfigError("conn: scale block size must equal sqrt(n)");
  std::vector<BlockInstance> blocks;
  for (VertexId i = 0; i < root; ++i) {
    blocks.push_back(sample_block_bar(scale, derive_seed(seed, "conn-block", i)));
  }
  return assemble_conn(std::move(blocks));
}

ConnInstance assemble_conn(std::vector<BlockInstance> blocks) {
  if (blocks.size() < 2) throw ConfigError("conn: need at least two blocks");
  ConnInstance c;
  c.block_n = blocks.front().scale.block_n;
  c.n = static_cast<VertexId>(blocks.size()) * c.block_n;
  c.blocks = std::move(blocks);
  std::vector<Edge> edges;
  int parity = 0;
  const std::size_t k = c.blocks.size();
  for (std::size_t i = 0; i < k; ++i) {
    const BlockInstance& blk = c.blocks[i];
    if (blk.graph.n() != c.block_n) throw ConfigError("conn: blocks differ in size");
    for (const Edge& e : blk.graph.edges()) {
      edges.push_back({c.global_id(i, e.u - 1), c.global_id(i, e.v - 1)});
    }
    c.b.push_back(blk.b);
    parity ^= blk.b;
  }
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t next = (i + 1) % k;
    c.chain.push_back(normalized({c.global_id(i, kT1), c.global_id(next, kS1)}));
    c.chain.push_back(normalized({c.global_id(i, kT2), c.global_id(next, kS2)}));
  }
  edges.insert(edges.end(), c.chain.begin(), c.chain.end());
  c.graph = Graph::from_edges(c.n, edges);
  c.connected = parity == 1;
  if (ground_truth_connected(c.graph) != c.connected) {
    throw std::logic_error("conn: XOR of block bits disagrees with union-find");
  }
  return c;
}

std::uint64_t urdec_digest(const UrdecInstance& inst) {
  std::uint64_t h = derive_seed(inst.U, "urdec-digest", inst.r, static_cast<std::uint64_t>(inst.side));
  for (Element x : inst.S) h = mix64(h ^ (x + 1));
  h = mix64(h ^ 0xabcdefULL);
  for (Element x : inst.T) h = mix64(h ^ (x + 1));
  for (Element x = 0; x < inst.part.size(); ++x) h = mix64(h + static_cast<std::uint64_t>(inst.part[x]) * (x + 3));
  return h;
}

namespace {

void write_block_lines(std::ostream& out, const BlockInstance& blk, std::size_t index,
                       VertexId offset) {
  out << "block " << index << " procedure " << blk.procedure << " b " << blk.b << " jstar "
      << blk.jstar << " embedded " << blk.embedded.size() << '\n';
  char buf[32];
  for (std::size_t j = 0; j < blk.embedded.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(urdec_digest(blk.embedded[j])));
    out << "instance " << index << ' ' << j << ' ' << buf << '\n';
  }
  for (VertexId v = 0; v < blk.roles.size(); ++v) {
    out << "role " << offset + v + 1 << ' ' << role_name(blk.roles[v]) << '\n';
  }
}

}  // namespace

void write_block_metadata(std::ostream& out, const BlockInstance& blk) {
  out << "# block metadata\n";
  out << "scale " << blk.scale.describe() << '\n';
  write_block_lines(out, blk, 0, 0);
}

void write_conn_metadata(std::ostream& out, const ConnInstance& inst) {
  out << "# conn metadata\n";
  out << "n " << inst.n << " block_n " << inst.block_n << " blocks " << inst.blocks.size() << '\n';
  if (!inst.blocks.empty()) out << "scale " << inst.blocks.front().scale.describe() << '\n';
  out << "connected " << (inst.connected ? 1 : 0) << '\n';
  out << "b";
  for (int x : inst.b) out << ' ' << x;
  out << '\n';
  for (std::size_t i = 0; i < inst.blocks.size(); ++i) {
    write_block_lines(out, inst.blocks[i], i, static_cast<VertexId>(i * inst.block_n));
  }
}

}  // namespace agmlab
