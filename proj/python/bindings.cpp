#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "agmlab/bcast.hpp"
#include "agmlab/errors.hpp"
#include "agmlab/graph.hpp"
#include "agmlab/hard_instances.hpp"
#include "agmlab/lab.hpp"
#include "agmlab/referee.hpp"
#include "agmlab/sketch.hpp"
#include "agmlab/ur.hpp"

namespace py = pybind11;
using namespace agmlab;

namespace {

Graph graph_from_pairs(VertexId n, const std::vector<std::pair<VertexId, VertexId>>& pairs) {
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (auto [u, v] : pairs) edges.push_back({u, v});
  return Graph::from_edges(n, edges);
}

std::vector<std::pair<VertexId, VertexId>> edge_pairs(const std::vector<Edge>& edges) {
  std::vector<std::pair<VertexId, VertexId>> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.emplace_back(e.u, e.v);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sketching lab: AGM connectivity sketches, UR protocols and hard instances";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CapExceeded>(m, "CapExceeded", PyExc_RuntimeError);

  py::class_<SketchConfig>(m, "SketchConfig")
      .def_static("defaults", &SketchConfig::defaults, py::arg("n"), py::arg("seed"),
                  py::arg("rep_factor") = 4, py::arg("fp_bits") = 32)
      .def_readonly("n", &SketchConfig::n)
      .def_readonly("levels", &SketchConfig::levels)
      .def_readonly("reps", &SketchConfig::reps)
      .def_readonly("fp_bits", &SketchConfig::fp_bits)
      .def_readonly("label_bits", &SketchConfig::label_bits)
      .def_readonly("master_seed", &SketchConfig::master_seed)
      .def("payload_bits", &SketchConfig::payload_bits);

  py::class_<ForestDecode>(m, "ForestDecode")
      .def_property_readonly("forest", [](const ForestDecode& d) { return edge_pairs(d.forest); })
      .def_readonly("component_of", &ForestDecode::component_of)
      .def_readonly("component_count", &ForestDecode::component_count);

  // Sketches every vertex of the graph and runs the referee.
  m.def(
      "decode_graph",
      [](VertexId n, const std::vector<std::pair<VertexId, VertexId>>& edges,
         std::uint64_t seed) {
        const auto g = graph_from_pairs(n, edges);
        const auto config = SketchConfig::defaults(n, seed);
        return decode_spanning_forest(sketch_graph(g, config), config);
      },
      py::arg("n"), py::arg("edges"), py::arg("seed"));

  m.def(
      "components",
      [](VertexId n, const std::vector<std::pair<VertexId, VertexId>>& edges) {
        return ground_truth_components(graph_from_pairs(n, edges));
      },
      py::arg("n"), py::arg("edges"));

  // One broadcast round of the AGM scheme: (connected, avg_bits, max_bits).
  m.def(
      "run_agm",
      [](VertexId n, const std::vector<std::pair<VertexId, VertexId>>& edges, std::uint64_t seed,
         unsigned rep_factor, unsigned fp_bits) {
        AgmOptions opts;
        opts.rep_factor = rep_factor;
        opts.fp_bits = fp_bits;
        const auto res = run_one_round(graph_from_pairs(n, edges), AgmScheme(opts), seed);
        return py::make_tuple(res.verdict.connected, res.stats.avg_bits(), res.stats.max_bits);
      },
      py::arg("n"), py::arg("edges"), py::arg("seed"), py::arg("rep_factor") = 4,
      py::arg("fp_bits") = 32);

  py::enum_<Side>(m, "Side").value("P1", Side::P1).value("P2", Side::P2);
  py::enum_<Part>(m, "Part").value("InT", Part::InT).value("P1", Part::P1).value("P2", Part::P2);

  py::class_<UrdecParams>(m, "UrdecParams")
      .def_readonly("U", &UrdecParams::U)
      .def_readonly("m", &UrdecParams::m)
      .def_readonly("B", &UrdecParams::B)
      .def_readonly("delta", &UrdecParams::delta)
      .def_readonly("alpha", &UrdecParams::alpha)
      .def_readonly("R", &UrdecParams::R)
      .def_readonly("t", &UrdecParams::t)
      .def_readonly("warnings", &UrdecParams::warnings);

  m.def("urdec_params", &urdec_params, py::arg("U"), py::arg("delta"));
  m.def("urdec_params_log2", &urdec_params_log2, py::arg("U"), py::arg("log2_inv_delta"));
  m.def("urdec_desk_params", &urdec_desk_params, py::arg("U"));
  m.def("urdec_params_custom", &urdec_params_custom, py::arg("m"), py::arg("delta"),
        py::arg("t"));
  m.def("lab_params", &lab_params);

  py::class_<UrdecInstance>(m, "UrdecInstance")
      .def_readonly("U", &UrdecInstance::U)
      .def_readonly("r", &UrdecInstance::r)
      .def_readonly("S", &UrdecInstance::S)
      .def_readonly("T", &UrdecInstance::T)
      .def_readonly("part", &UrdecInstance::part)
      .def_readonly("side", &UrdecInstance::side)
      .def("check", &check_urdec_instance);

  m.def("sample_urdec", &sample_urdec, py::arg("params"), py::arg("seed"));

  // Alice's UR sketch and Bob's decision under shared seed `seed`.
  m.def(
      "ur_decide",
      [](const UrdecInstance& inst, double delta, std::uint64_t seed) {
        const auto config = ur_sketch_config(inst.U, delta, seed);
        const auto msg = ur_alice(inst.S, config);
        return py::make_tuple(ur_bob_decide(msg, inst.T, inst.part, config), msg.bits);
      },
      py::arg("instance"), py::arg("delta"), py::arg("seed"));

  py::class_<BlockScale>(m, "BlockScale")
      .def_static("desk", &BlockScale::desk, py::arg("n"), py::arg("for_embedding") = false)
      .def_readonly("block_n", &BlockScale::block_n)
      .def("describe", &BlockScale::describe);

  py::class_<ConnInstance>(m, "ConnInstance")
      .def_readonly("n", &ConnInstance::n)
      .def_readonly("block_n", &ConnInstance::block_n)
      .def_readonly("b", &ConnInstance::b)
      .def_readonly("connected", &ConnInstance::connected)
      .def_property_readonly("edges",
                             [](const ConnInstance& c) { return edge_pairs(c.graph.edges()); });

  m.def("sample_conn", py::overload_cast<VertexId, std::uint64_t>(&sample_conn), py::arg("n"),
        py::arg("seed"));
  m.def(
      "sample_block",
      [](const BlockScale& scale, std::uint64_t seed, bool mixed) {
        const auto blk = mixed ? sample_block_bar(scale, seed) : sample_block(scale, seed);
        return py::make_tuple(blk.b, check_block(blk));
      },
      py::arg("scale"), py::arg("seed"), py::arg("mixed") = false);

  // Lab: process A on a battery protocol, returned as the text trace plus the
  // verdict of the trace checker.
  m.def("protocol_names", [] {
    std::vector<std::string> names;
    for (const auto& p : protocol_battery(lab_params(), 0)) names.push_back(p.name);
    return names;
  });
  m.def(
      "process_a",
      [](const std::string& protocol, std::uint64_t seed) {
        const auto params = lab_params();
        for (const auto& p : protocol_battery(params, seed)) {
          if (p.name != protocol) continue;
          const auto tr = run_process_a(p, params, seed);
          std::ostringstream os;
          write_trace(os, tr);
          const auto chk = check_process_trace(tr);
          return py::make_tuple(os.str(), chk.ok(), chk.detail);
        }
        throw ConfigError("unknown protocol: " + protocol);
      },
      py::arg("protocol"), py::arg("seed"));

  // Rows of the intersection-lemma sweep as dicts; errors as decimal strings.
  m.def(
      "validate_lemma33",
      [](std::uint64_t seed, std::uint64_t process_seeds) {
        const auto params = lab_params();
        Lemma33Options opts;
        opts.process_seeds = process_seeds;
        py::list rows;
        for (const auto& r : validate_lemma33(protocol_battery(params, seed), params, opts)) {
          py::dict d;
          d["protocol"] = r.protocol;
          d["context"] = r.context;
          d["size"] = r.size;
          d["anchor_size"] = r.anchor_size;
          d["lhs"] = r.lhs.str();
          d["holds"] = r.holds;
          d["optimal_error"] = r.optimal_error ? py::object(py::str(to_decimal(*r.optimal_error)))
                                               : py::object(py::none());
          d["violation"] = r.violation();
          rows.append(d);
        }
        return rows;
      },
      py::arg("seed") = 0, py::arg("process_seeds") = 4);
}
