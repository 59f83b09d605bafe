#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <exception>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "agmlab/bcast.hpp"
#include "agmlab/errors.hpp"
#include "agmlab/graph.hpp"
#include "agmlab/hard_instances.hpp"
#include "agmlab/hash.hpp"
#include "agmlab/lab.hpp"
#include "agmlab/parallel.hpp"
#include "agmlab/ur.hpp"

namespace agmlab {

namespace {

struct ScaleFlags {
  VertexId block_n = 0;
  VertexId vm = 0;
  VertexId vr_half = 0;
  std::uint64_t universe = 0;
  double log2_inv_delta = 0;

  void add(CLI::App* app) {
    app->add_option("--scale-block-n", block_n, "Override the block size");
    app->add_option("--scale-vm", vm, "Override |V^m|");
    app->add_option("--scale-vr-half", vr_half, "Override |V^r_1| = |V^r_2|");
    app->add_option("--scale-universe", universe, "Override the embedded UR universe");
    app->add_option("--scale-log2-inv-delta", log2_inv_delta,
                    "Override log2(1/delta) of the embedded schedule");
  }

  BlockScale resolve(VertexId n) const {
    BlockScale s;
    if (block_n == 0 && vm == 0 && vr_half == 0 && universe == 0 && log2_inv_delta == 0) {
      s = BlockScale::desk(n);
    } else {
      try {
        s = BlockScale::desk(n);
      } catch (const std::exception&) {
        s.log2_inv_delta = kDeskScheduleLog2InvDelta;
      }
      if (block_n) s.block_n = block_n;
      if (vm) s.vm = vm;
      if (vr_half) s.vr_half = vr_half;
      if (universe) s.U = universe;
      if (log2_inv_delta > 0) s.log2_inv_delta = log2_inv_delta;
    }
    s.validate();
    return s;
  }
};

struct Output {
  std::ostream* stream = nullptr;
  std::unique_ptr<std::ofstream> file;

  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream = &fallback;
    } else {
      file = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file) throw ConfigError("cannot open " + path + " for writing");
      stream = file.get();
    }
  }
  std::ostream& operator*() { return *stream; }
};

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const auto v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad ") + what + " entry '" + item + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// gen

struct GenFlags {
  VertexId n = 1024;
  std::uint64_t seed = 0;
  std::uint64_t universe = 4096;
  double delta = 1.0 / 64;
  std::string out;
  ScaleFlags scale;
};

void write_graph_with_meta(const std::string& path, const Graph& g,
                           const std::function<void(std::ostream&)>& meta) {
  {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path + " for writing");
    write_graph(f, g);
  }
  std::ofstream m(path + ".meta", std::ios::binary);
  if (!m) throw ConfigError("cannot open " + path + ".meta for writing");
  meta(m);
}

int run_gen(const std::string& kind, const GenFlags& f, std::ostream& err) {
  if (kind == "conn") {
    const auto c = sample_conn(f.n, f.seed, f.scale.resolve(f.n));
    write_graph_with_meta(f.out, c.graph, [&](std::ostream& o) { write_conn_metadata(o, c); });
  } else if (kind == "block" || kind == "block-bar") {
    const auto scale = f.scale.resolve(f.n);
    const auto blk = kind == "block" ? sample_block(scale, f.seed) : sample_block_bar(scale, f.seed);
    write_graph_with_meta(f.out, blk.graph,
                          [&](std::ostream& o) { write_block_metadata(o, blk); });
  } else if (kind == "urdec") {
    const auto params = urdec_params_or_desk(f.universe, f.delta);
    for (const auto& w : params.warnings) err << "warning: " << w << '\n';
    const auto inst = sample_urdec(params, f.seed);
    {
      std::ofstream o(f.out, std::ios::binary);
      if (!o) throw ConfigError("cannot open " + f.out + " for writing");
      write_urdec_instance(o, inst);
    }
    std::ofstream m(f.out + ".meta", std::ios::binary);
    m << "urdec U " << params.U << " m " << params.m << " B " << params.B << '\n';
    m << "schedule log2_inv_delta " << params.log2_inv_delta << " R " << params.R << " t";
    for (auto t : params.t) m << ' ' << t;
    m << '\n';
    m << "side " << (inst.side == Side::P1 ? 1 : 2) << '\n';
    m << "digest " << urdec_digest(inst) << '\n';
  } else {
    throw ConfigError("unknown generator " + kind);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// run

struct RunFlags {
  std::string scheme = "agm";
  unsigned rep_factor = 4;
  unsigned fp_bits = 32;
  std::string graph_file;
  std::string family = "er";
  VertexId n = 256;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::uint64_t cap_bits = std::uint64_t{1} << 20;
  bool no_timing = false;
  std::string out = "-";
  ScaleFlags scale;
};

Graph family_graph(const RunFlags& f, std::uint64_t seed, std::optional<bool>* truth) {
  if (f.family == "er") {
    const double p = f.n > 1 ? 2.0 * std::log(static_cast<double>(f.n)) / f.n : 0.0;
    return erdos_renyi(f.n, std::min(1.0, p), seed);
  }
  if (f.family == "star") return star_graph(f.n);
  if (f.family == "path") return path_graph(f.n);
  if (f.family == "two-cliques") return two_cliques(f.n);
  if (f.family == "conn") {
    auto c = sample_conn(f.n, seed, f.scale.resolve(f.n));
    *truth = c.connected;
    return std::move(c.graph);
  }
  throw ConfigError("unknown family " + f.family + " (er, star, path, two-cliques, conn)");
}

int run_run(const RunFlags& f, std::ostream& out, std::ostream& err) {
  AgmOptions agm;
  agm.rep_factor = f.rep_factor;
  agm.fp_bits = f.fp_bits;
  const auto scheme = make_scheme(f.scheme, agm);

  std::optional<Graph> fixed_graph;
  if (!f.graph_file.empty()) {
    std::ifstream in(f.graph_file);
    if (!in) throw ConfigError("cannot open " + f.graph_file);
    fixed_graph = read_graph(in);
  }
  if (f.trials < 1) throw ConfigError("--trials must be >= 1");

  struct Row {
    bool verdict = false, truth = false;
    double avg_bits = 0, millis = 0;
    std::uint64_t max_bits = 0;
  };
  std::vector<Row> rows(f.trials);
  std::vector<std::exception_ptr> failures(f.trials);
  RoundOptions ro;
  ro.cap_bits = f.cap_bits;
  parallel_for(f.trials, f.threads, [&](std::size_t t) {
    try {
      std::optional<bool> truth;
      Graph g = fixed_graph ? *fixed_graph
                            : family_graph(f, derive_seed(f.seed, "run-graph", t), &truth);
      const auto start = std::chrono::steady_clock::now();
      const auto res = run_one_round(g, *scheme, derive_seed(f.seed, "run-sketch", t), ro);
      rows[t].millis = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start).count();
      rows[t].verdict = res.verdict.connected;
      rows[t].truth = truth ? *truth : ground_truth_connected(g);
      rows[t].avg_bits = res.stats.avg_bits();
      rows[t].max_bits = res.stats.max_bits;
    } catch (...) {
      failures[t] = std::current_exception();
    }
  });
  for (const auto& e : failures) {
    if (e) std::rethrow_exception(e);
  }

  Output o(f.out, out);
  *o << "trial,verdict,truth,correct,avg_bits,max_bits,millis\n";
  std::size_t correct = 0;
  for (std::size_t t = 0; t < f.trials; ++t) {
    const auto& r = rows[t];
    const bool ok = r.verdict == r.truth;
    correct += ok;
    *o << t << ',' << r.verdict << ',' << r.truth << ',' << ok << ',' << fixed(r.avg_bits, 4)
       << ',' << r.max_bits << ',' << (f.no_timing ? "0" : fixed(r.millis, 3)) << '\n';
  }
  err << "trials=" << f.trials << " correct=" << correct << " success_rate="
      << fixed(static_cast<double>(correct) / static_cast<double>(f.trials)) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepFlags {
  std::string scheme = "agm";
  unsigned rep_factor = 4;
  std::string n_list;
  VertexId n_min = 64;
  VertexId n_max = 4096;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool no_timing = false;
  std::string out = "-";
};

int run_sweep(const SweepFlags& f, std::ostream& out) {
  std::vector<VertexId> ns;
  if (!f.n_list.empty()) {
    ns = parse_list<VertexId>(f.n_list, "--n-list");
  } else {
    if (f.n_min < 2 || f.n_max < f.n_min) throw ConfigError("need 2 <= --n-min <= --n-max");
    for (std::uint64_t n = f.n_min; n <= f.n_max; n *= 2) ns.push_back(static_cast<VertexId>(n));
  }
  AgmOptions agm;
  agm.rep_factor = f.rep_factor;
  const auto scheme = make_scheme(f.scheme, agm);
  const auto rows = sweep_sizes(ns, f.trials, *scheme, f.seed, f.threads);
  Output o(f.out, out);
  write_sweep_csv(*o, rows, !f.no_timing);
  return 0;
}

// ---------------------------------------------------------------------------
// lab

struct LabFlags {
  std::uint64_t universe = 27;
  std::string schedule;
  double delta = 0;
  std::string protocol = "constant";
  std::uint64_t seed = 0;
  std::uint64_t cap = kDefaultEnumerationCap;
  std::string out = "-";
  // process-a
  std::uint64_t runs = 200;
  std::string trace;
  // lemma33
  std::uint64_t process_seeds = 4;
  std::uint64_t random_protocols = 0;
  bool all_errors = false;
  // lemma34
  std::string k_prefix;
  std::string set;
  std::string tset;
  // conderr
  std::string mode = "montecarlo";
  std::uint64_t samples = 100000;
  long class_index = -1;
};

UrdecParams lab_params_from(const LabFlags& f) {
  if (!f.schedule.empty()) {
    std::uint64_t m = 1;
    while ((m + 1) * (m + 1) * (m + 1) <= f.universe) ++m;
    if (m * m * m != f.universe) throw ConfigError("--universe must be a perfect cube");
    const double delta = f.delta > 0 ? f.delta : std::ldexp(1.0, -256);
    return urdec_params_custom(m, delta, parse_list<std::uint64_t>(f.schedule, "--schedule"));
  }
  if (f.delta > 0) return urdec_params_or_desk(f.universe, f.delta);
  if (f.universe == 27) return lab_params();
  return urdec_desk_params(f.universe);
}

OneWayProtocol find_protocol(const std::string& name, const UrdecParams& p, std::uint64_t seed) {
  if (name.rfind("random-", 0) == 0) {
    const auto k = parse_list<std::uint64_t>(name.substr(7), "random protocol class count");
    if (k.size() != 1) throw ConfigError("use random-<classes>");
    return random_protocol(k[0], derive_seed(seed, "cli-random"));
  }
  for (auto& proto : protocol_battery(p, seed)) {
    if (proto.name == name) return proto;
  }
  std::string names;
  for (const auto& proto : protocol_battery(p, seed)) names += " " + proto.name;
  throw ConfigError("unknown protocol " + name + "; known:" + names + " random-<k>");
}

int run_lab_process(const LabFlags& f, std::ostream& out, std::ostream& err) {
  const auto p = lab_params_from(f);
  const auto proto = find_protocol(f.protocol, p, f.seed);
  const auto classes = message_classes(proto, p, f.cap);
  SetCollection s0{SetSpace::of(p), classes.at(largest_class_message(classes)), {}};
  Output o(f.out, out);
  *o << "run,failed,I,r_I,size_0,size_I,T_I,thresholds,nesting,product_bound,"
        "closed_form_applicable,closed_form,ok\n";
  std::size_t failed = 0, bad = 0;
  for (std::uint64_t run = 0; run < f.runs; ++run) {
    ProcessAOptions opts;
    opts.cap = f.cap;
    const auto tr = run_process_a(s0, p, derive_seed(f.seed, "cli-process", run), opts);
    const auto chk = check_process_trace(tr);
    if (run == 0 && !f.trace.empty()) {
      std::ofstream t(f.trace, std::ios::binary);
      if (!t) throw ConfigError("cannot open " + f.trace + " for writing");
      write_trace(t, tr);
    }
    failed += tr.failed;
    bad += !chk.ok();
    *o << run << ',' << tr.failed << ',' << tr.I << ',' << tr.final_r() << ','
       << tr.initial_size << ',' << tr.final_members.size() << ',' << tr.final_anchor.size()
       << ',' << chk.thresholds << ',' << chk.nesting << ',' << chk.product_bound << ','
       << chk.closed_form_applicable << ',' << chk.closed_form << ',' << chk.ok() << '\n';
  }
  err << "runs=" << f.runs << " failed=" << failed << " check_failures=" << bad << '\n';
  return 0;
}

int run_lab_lemma33(const LabFlags& f, std::ostream& out, std::ostream& err) {
  const auto p = lab_params_from(f);
  auto protocols = protocol_battery(p, f.seed);
  for (std::uint64_t i = 0; i < f.random_protocols; ++i) {
    protocols.push_back(random_protocol(2 + derive_seed(f.seed, "cli-classes", i) % 63,
                                        derive_seed(f.seed, "cli-random", i)));
  }
  Lemma33Options opts;
  opts.process_seeds = f.process_seeds;
  opts.cap = f.cap;
  opts.all_errors = f.all_errors;
  const auto rows = validate_lemma33(protocols, p, opts);
  Output o(f.out, out);
  *o << "protocol,context,size,anchor_size,lhs,holds,optimal_error,premise,violations\n";
  std::size_t violations = 0;
  for (const auto& r : rows) {
    violations += r.violation();
    *o << r.protocol << ',' << r.context << ',' << r.size << ',' << r.anchor_size << ','
       << r.lhs << ',' << r.holds << ','
       << (r.optimal_error ? to_decimal(*r.optimal_error, 8) : std::string()) << ','
       << r.premise() << ',' << r.violation() << '\n';
  }
  err << "collections=" << rows.size() << " violations=" << violations << '\n';
  return 0;
}

int run_lab_lemma34(const LabFlags& f, std::ostream& out) {
  const auto p = lab_params_from(f);
  const auto proto = find_protocol(f.protocol, p, f.seed);
  const auto ks = parse_list<std::uint64_t>(f.k_prefix, "--k-prefix");
  const auto S = parse_list<Element>(f.set, "--set");
  const auto T = parse_list<Element>(f.tset, "--tset");
  ProcessAOptions opts;
  opts.cap = f.cap;
  const auto est = estimate_singleton_prob(proto, p, ks, S, T, f.runs, f.seed, opts);
  Output o(f.out, out);
  *o << "i,runs,conditioned,hits,estimate,std_error,bound,diagnostic\n";
  *o << ks.size() << ',' << est.runs << ',' << est.conditioned << ',' << est.hits << ','
     << (est.estimate ? fixed(*est.estimate) : std::string()) << ','
     << (est.estimate ? fixed(est.std_error) : std::string()) << ',' << est.bound << ','
     << est.diagnostic << '\n';
  return 0;
}

int run_lab_conderr(const LabFlags& f, std::ostream& out) {
  const auto p = lab_params_from(f);
  const auto proto = find_protocol(f.protocol, p, f.seed);
  ErrorMode mode;
  if (f.mode == "exact") {
    mode = ErrorMode::Exact;
  } else if (f.mode == "montecarlo") {
    mode = ErrorMode::MonteCarlo;
  } else {
    throw ConfigError("--mode must be exact or montecarlo");
  }
  const auto classes = message_classes(proto, p, f.cap);
  Output o(f.out, out);
  *o << "protocol,class,size,mode,error,std_error,exact,optimal\n";
  long idx = -1;
  for (const auto& [msg, members] : classes) {
    ++idx;
    if (f.class_index >= 0 && idx != f.class_index) continue;
    SetCollection c{SetSpace::of(p), members, {}};
    const auto e = conditional_error(proto, c, mode, f.samples,
                                     derive_seed(f.seed, "cli-conderr", idx), f.cap);
    const auto opt = optimal_conditional_error(c, f.cap);
    *o << proto.name << ',' << idx << ',' << c.size() << ',' << f.mode << ',' << fixed(e.value)
       << ',' << fixed(e.std_error) << ',' << (e.exact ? e.exact->str() : std::string())
       << ',' << to_decimal(opt, 8) << '\n';
  }
  if (f.class_index >= static_cast<long>(classes.size())) {
    throw ConfigError("--class-index out of range");
  }
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"AGM sketch and lower-bound experiment runner", "agmlab"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "Read options from a TOML file");
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config, "Print the resolved options as TOML and exit");

  // gen
  GenFlags gen;
  std::string gen_kind;
  auto* g = app.add_subcommand("gen", "Generate an instance and its metadata sidecar");
  g->add_option("kind", gen_kind, "conn | block | block-bar | urdec")
      ->required()
      ->check(CLI::IsMember({"conn", "block", "block-bar", "urdec"}));
  g->add_option("--n", gen.n, "Vertex count (conn, block sizes from sqrt(n))");
  g->add_option("--seed", gen.seed, "Master seed")->required();
  g->add_option("--universe", gen.universe, "UR universe size (urdec)");
  g->add_option("--delta", gen.delta, "UR error target (urdec)");
  g->add_option("--out", gen.out, "Output path; metadata goes to <out>.meta")->required();
  gen.scale.add(g);

  // run
  RunFlags run;
  auto* r = app.add_subcommand("run", "Run a sketching scheme over trials");
  r->add_option("--scheme", run.scheme, "agm | adjacency");
  r->add_option("--rep-factor", run.rep_factor, "AGM repetitions per log2 n");
  r->add_option("--fp-bits", run.fp_bits, "AGM fingerprint bits");
  r->add_option("--graph", run.graph_file, "Graph file used for every trial");
  r->add_option("--family", run.family, "er | star | path | two-cliques | conn");
  r->add_option("--n", run.n, "Vertex count for generated graphs");
  r->add_option("--trials", run.trials, "Trial count");
  r->add_option("--seed", run.seed, "Master seed")->required();
  r->add_option("--threads", run.threads, "Worker threads");
  r->add_option("--cap-bits", run.cap_bits, "Per-message bit cap");
  r->add_flag("--no-timing", run.no_timing, "Write 0 in the millis column");
  r->add_option("--out", run.out, "CSV path or - for stdout");
  run.scale.add(r);

  // sweep
  SweepFlags sweep;
  auto* s = app.add_subcommand("sweep", "Mean message size over doubling n");
  s->add_option("--scheme", sweep.scheme, "agm | adjacency");
  s->add_option("--rep-factor", sweep.rep_factor, "AGM repetitions per log2 n");
  s->add_option("--n-list", sweep.n_list, "Comma-separated ascending sizes");
  s->add_option("--n-min", sweep.n_min, "Smallest n when doubling");
  s->add_option("--n-max", sweep.n_max, "Largest n when doubling");
  s->add_option("--trials", sweep.trials, "Trials per size");
  s->add_option("--seed", sweep.seed, "Master seed")->required();
  s->add_option("--threads", sweep.threads, "Worker threads");
  s->add_flag("--no-timing", sweep.no_timing, "Write 0 in the wall_ms column");
  s->add_option("--out", sweep.out, "CSV path or - for stdout");

  // lab
  LabFlags lab;
  auto* l = app.add_subcommand("lab", "Counting-lemma experiments at enumerable scale");
  l->require_subcommand(1);
  auto common = [&lab](CLI::App* c) {
    c->add_option("--universe", lab.universe, "Universe size U = m^3");
    c->add_option("--schedule", lab.schedule, "Custom t table, e.g. 0,2");
    c->add_option("--delta", lab.delta, "Schedule delta (default: lab schedule)");
    c->add_option("--seed", lab.seed, "Master seed")->required();
    c->add_option("--cap", lab.cap, "Enumeration cap");
    c->add_option("--out", lab.out, "CSV path or - for stdout");
  };
  auto* lp = l->add_subcommand("process-a", "Run process A and check every trace");
  common(lp);
  lp->add_option("--protocol", lab.protocol, "Protocol name from the battery or random-<k>");
  lp->add_option("--runs", lab.runs, "Number of runs");
  lp->add_option("--trace", lab.trace, "Write the first run's trace here");
  auto* l3 = l->add_subcommand("lemma33", "Check the intersection inequality");
  common(l3);
  l3->add_option("--process-seeds", lab.process_seeds, "Process runs per protocol");
  l3->add_option("--random-protocols", lab.random_protocols, "Extra hashed protocols");
  l3->add_flag("--all-errors", lab.all_errors, "Compute the optimal error on every row");
  auto* l4 = l->add_subcommand("lemma34", "Estimate Pr[T_i = T | S in S_i, k prefix]");
  common(l4);
  l4->add_option("--protocol", lab.protocol, "Protocol name");
  l4->add_option("--k-prefix", lab.k_prefix, "k_0,...,k_{i-1}");
  l4->add_option("--set", lab.set, "S as comma-separated elements")->required();
  l4->add_option("--tset", lab.tset, "T as comma-separated elements");
  l4->add_option("--runs", lab.runs, "Process runs");
  auto* lc = l->add_subcommand("conderr", "Conditional error per message class");
  common(lc);
  lc->add_option("--protocol", lab.protocol, "Protocol name");
  lc->add_option("--mode", lab.mode, "exact | montecarlo");
  lc->add_option("--samples", lab.samples, "Monte Carlo samples");
  lc->add_option("--class-index", lab.class_index, "Only this class (default all)");

  std::vector<const char*> argv{"agmlab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  if (dump_config) {
    // Only the chosen subcommand, so the file replays exactly that command.
    for (CLI::App* sub : {g, r, s, lp, l3, l4, lc}) {
      if (!sub->parsed()) continue;
      const bool nested = sub->get_parent() == l;
      out << '[' << (nested ? "lab." : "") << sub->get_name() << "]\n";
      out << sub->config_to_str(true, false);
    }
    return 0;
  }

  try {
    if (g->parsed()) return run_gen(gen_kind, gen, err);
    if (r->parsed()) return run_run(run, out, err);
    if (s->parsed()) return run_sweep(sweep, out);
    if (lp->parsed()) return run_lab_process(lab, out, err);
    if (l3->parsed()) return run_lab_lemma33(lab, out, err);
    if (l4->parsed()) return run_lab_lemma34(lab, out);
    if (lc->parsed()) return run_lab_conderr(lab, out);
  } catch (const CapExceeded& e) {
    err << "cap exceeded: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace agmlab
