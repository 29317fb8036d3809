#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hybrist/experiment.hpp"

namespace py = pybind11;
using namespace hybrist;

namespace {

py::dict report_dict(const net::MetricsReport& r) {
  py::dict d;
  d["sent"] = r.sent;
  d["delivered"] = r.delivered;
  d["dropped"] = r.dropped;
  d["in_flight"] = r.in_flight;
  d["pdf"] = r.pdf;
  d["mean_e2e_delay"] = r.mean_e2e_delay;
  d["dropped_no_route"] = r.dropped_no_route;
  d["dropped_collision"] = r.dropped_collision;
  d["dropped_ttl"] = r.dropped_ttl;
  d["dropped_queue"] = r.dropped_queue;
  return d;
}

}  // namespace

PYBIND11_MODULE(_hybrist, m) {
  m.doc() = "Road topologies, vehicle mobility traces and ad hoc network simulation";

  // Translators are tried newest first, so the base goes in first.
  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", base);
  py::register_exception<ValidationError>(m, "ValidationError", base);
  py::register_exception<NoRoute>(m, "NoRoute", base);

  py::enum_<ModelKind>(m, "ModelKind")
      .value("HMM", ModelKind::HMM)
      .value("UMM", ModelKind::UMM)
      .value("HWM", ModelKind::HWM);

  py::enum_<mobility::TraceFormat>(m, "TraceFormat")
      .value("NS2", mobility::TraceFormat::Ns2Movement)
      .value("CSV", mobility::TraceFormat::NativeCsv);

  py::class_<road::TopologyParams>(m, "TopologyParams")
      .def(py::init<>())
      .def_readwrite("corridor_length", &road::TopologyParams::corridor_length)
      .def_readwrite("corridor_width", &road::TopologyParams::corridor_width)
      .def_readwrite("umm_grid_rows", &road::TopologyParams::umm_grid_rows)
      .def_readwrite("umm_grid_cols", &road::TopologyParams::umm_grid_cols)
      .def_readwrite("umm_block_length", &road::TopologyParams::umm_block_length)
      .def_readwrite("metrobus_stations", &road::TopologyParams::metrobus_stations)
      .def_readwrite("hwm_stops", &road::TopologyParams::hwm_stops)
      .def("validate", &road::TopologyParams::validate);

  py::class_<road::RoadNetwork>(m, "RoadNetwork")
      .def_property_readonly("node_count", [](const road::RoadNetwork& n) { return n.nodes.size(); })
      .def_property_readonly("edge_count", [](const road::RoadNetwork& n) { return n.edges.size(); })
      .def_property_readonly("intersection_count", [](const road::RoadNetwork& n) { return n.intersections.size(); })
      .def_property_readonly("station_count", [](const road::RoadNetwork& n) { return n.stations.size(); })
      .def("violations", [](const road::RoadNetwork& n) { return road::validate_network(n).size(); })
      .def("serialize", &road::serialize_network);

  m.def("build_topology", &road::build_topology, py::arg("params"), py::arg("kind"));
  m.def("parse_network", &road::parse_network, py::arg("text"));

  py::class_<mobility::MobilityConfig>(m, "MobilityConfig")
      .def(py::init<>())
      .def_readwrite("duration", &mobility::MobilityConfig::duration)
      .def_readwrite("vehicle_count", &mobility::MobilityConfig::vehicle_count)
      .def_readwrite("seed", &mobility::MobilityConfig::seed)
      .def_readwrite("dt", &mobility::MobilityConfig::dt)
      .def_readwrite("sigma", &mobility::MobilityConfig::sigma)
      .def_readwrite("metrobus_fraction", &mobility::MobilityConfig::metrobus_fraction);

  py::class_<mobility::MobilityTrace>(m, "MobilityTrace")
      .def_readonly("vehicle_count", &mobility::MobilityTrace::vehicle_count)
      .def_readonly("step_count", &mobility::MobilityTrace::step_count)
      .def_readonly("dt", &mobility::MobilityTrace::dt)
      .def("end_time", &mobility::MobilityTrace::end_time)
      .def(
          "sample",
          [](const mobility::MobilityTrace& t, std::size_t step) {
            if (step >= t.step_count) throw py::index_error("step out of range");
            std::vector<std::tuple<double, double, double>> out;
            for (std::size_t i = 0; i < t.vehicle_count; ++i) {
              const auto& r = t.at(step, i);
              out.emplace_back(r.x, r.y, r.speed);
            }
            return out;
          },
          py::arg("step"), "(x, y, speed) of every vehicle at one sample time")
      .def("export", &mobility::export_trace, py::arg("format"));

  m.def("run_mobility", &mobility::run_mobility, py::arg("network"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("parse_trace", &mobility::parse_trace, py::arg("text"), py::arg("format"));

  m.def(
      "run_network_sim",
      [](const mobility::MobilityTrace& trace, const std::vector<std::tuple<int, int, double, double>>& flows,
         double tx_range, std::uint64_t seed) {
        std::vector<net::CbrFlowConfig> cfg;
        for (const auto& [src, dst, start, stop] : flows) {
          net::CbrFlowConfig f;
          f.src = static_cast<VehicleId>(src);
          f.dst = static_cast<VehicleId>(dst);
          f.start = start;
          f.stop = stop;
          cfg.push_back(f);
        }
        net::SimResult result;
        {
          py::gil_scoped_release release;
          result = net::run_network_sim(trace, cfg, net::RadioParams::for_range(tx_range), seed);
        }
        return report_dict(result.report);
      },
      py::arg("trace"), py::arg("flows"), py::arg("tx_range") = 250.0, py::arg("seed") = 1,
      "Flows are (src, dst, start, stop) tuples of 512-byte packets every 50 ms.");

  m.def(
      "validate_config",
      [](const std::string& text) { return experiment::parse_config(text).run_count(); }, py::arg("text"),
      "Parses a sweep configuration and returns its run count.");

  m.def(
      "run_experiment",
      [](const std::string& text, const std::string& preset, unsigned jobs) {
        const auto base =
            preset.empty() ? experiment::ExperimentSpec{} : experiment::preset_spec(experiment::parse_preset(preset));
        const auto spec = experiment::parse_config(text, base);
        experiment::ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = experiment::run_experiment(spec, jobs);
        }
        py::dict out;
        out["results"] = experiment::results_csv(result);
        out["fig7_pdf_vs_cbr"] = experiment::figure_csv(result.fig7_pdf, "pdf");
        out["fig8_delay_vs_cbr"] = experiment::figure_csv(result.fig8_delay, "mean_delay_s");
        out["fig9_loss_vs_cbr"] = experiment::figure_csv(result.fig9_loss, "dropped");
        out["fig10_pdr_vs_range"] = experiment::figure_csv(result.fig10_pdr, "pdr");
        out["all_ok"] = result.all_ok();
        return out;
      },
      py::arg("config"), py::arg("preset") = "", py::arg("jobs") = 1,
      "Runs a sweep and returns the CSV outputs as strings.");
}
