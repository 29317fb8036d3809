#include "hybrist/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <thread>

#include "hybrist/rng.hpp"

namespace hybrist::experiment {

namespace {

constexpr std::uint64_t kFlowStream = 0xf10e;
constexpr double kFlowStartMin = 1.0;
constexpr double kFlowStartMax = 6.0;
constexpr double kFlowStopMargin = 10.0;

struct Group {
  std::size_t model;
  std::size_t vehicles;
  std::size_t seed;
};

std::string fmt_value(const FigureRow& r) { return r.n == 0 ? std::string() : fmt::format("{:.6f}", r.value); }

}  // namespace

bool ExperimentResult::all_ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const RunRow& r) { return r.ok; });
}

mobility::MobilityTrace build_trace(const ExperimentSpec& spec, ModelKind model, int vehicles, std::uint64_t seed) {
  const auto net = road::build_topology(spec.topology, model);
  auto cfg = spec.mobility;
  cfg.vehicle_count = vehicles;
  cfg.seed = seed;
  return mobility::run_mobility(net, cfg);
}

// Vehicles keep their id for the whole run (a vehicle that leaves the road
// is re-placed), so every vehicle is eligible as an endpoint.
std::vector<net::CbrFlowConfig> select_flows(const mobility::MobilityTrace& trace, int count,
                                             const ExperimentSpec& spec, std::uint64_t seed) {
  if (count < 0 || 2 * static_cast<std::size_t>(count) > trace.vehicle_count)
    throw ValidationError("not enough vehicles for " + std::to_string(count) + " disjoint flows");
  std::vector<std::uint32_t> ids(trace.vehicle_count);
  std::iota(ids.begin(), ids.end(), 0u);
  RngStream rng(seed, kFlowStream);
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);

  std::vector<net::CbrFlowConfig> flows;
  for (int f = 0; f < count; ++f) {
    net::CbrFlowConfig c;
    c.src = static_cast<VehicleId>(ids[2 * f]);
    c.dst = static_cast<VehicleId>(ids[2 * f + 1]);
    c.packet_size = spec.packet_size;
    c.interval = spec.cbr_interval;
    c.start = trace.start_time + rng.uniform(kFlowStartMin, kFlowStartMax);
    c.stop = trace.end_time() - kFlowStopMargin;
    flows.push_back(c);
  }
  return flows;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, unsigned jobs) {
  spec.validate();
  const auto M = spec.models.size(), V = spec.vehicle_counts.size(), C = spec.cbr_source_counts.size(),
             R = spec.tx_ranges.size(), S = spec.seeds.size();
  auto slot = [&](std::size_t m, std::size_t v, std::size_t c, std::size_t r, std::size_t s) {
    return (((m * V + v) * C + c) * R + r) * S + s;
  };

  ExperimentResult result;
  result.rows.resize(spec.run_count());
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t v = 0; v < V; ++v)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t r = 0; r < R; ++r)
          for (std::size_t s = 0; s < S; ++s) {
            auto& key = result.rows[slot(m, v, c, r, s)].key;
            key = {spec.models[m], spec.vehicle_counts[v], spec.cbr_source_counts[c], spec.tx_ranges[r],
                   spec.seeds[s]};
          }

  // One mobility trace per group, shared by all its CBR and range points.
  std::vector<Group> groups;
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t v = 0; v < V; ++v)
      for (std::size_t s = 0; s < S; ++s) groups.push_back({m, v, s});

  auto run_group = [&](const Group& g) {
    const auto seed = spec.seeds[g.seed];
    auto fail = [&](std::size_t c, std::size_t r, const std::string& what) {
      auto& row = result.rows[slot(g.model, g.vehicles, c, r, g.seed)];
      row.ok = false;
      row.error = what;
      row.report = {};
      row.report.key = row.key;
    };
    const int most = *std::max_element(spec.cbr_source_counts.begin(), spec.cbr_source_counts.end());
    mobility::MobilityTrace trace;
    std::vector<net::CbrFlowConfig> all_flows;
    try {
      trace = build_trace(spec, spec.models[g.model], spec.vehicle_counts[g.vehicles], seed);
      all_flows = select_flows(trace, most, spec, seed);
    } catch (const std::exception& e) {
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t r = 0; r < R; ++r) fail(c, r, e.what());
      return;
    }
    for (std::size_t c = 0; c < C; ++c) {
      const auto flows = std::span(all_flows).first(static_cast<std::size_t>(spec.cbr_source_counts[c]));
      for (std::size_t r = 0; r < R; ++r) {
        auto& row = result.rows[slot(g.model, g.vehicles, c, r, g.seed)];
        try {
          auto radio = spec.radio;
          radio.tx_range = spec.tx_ranges[r];
          radio.interference_range = spec.interference_factor * spec.tx_ranges[r];
          row.report = net::run_network_sim(trace, flows, radio, seed).report;
          row.report.key = row.key;
        } catch (const std::exception& e) {
          fail(c, r, e.what());
        }
      }
    }
  };

  const auto workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(groups.size())));
  if (workers == 1) {
    for (const auto& g : groups) run_group(g);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (auto i = next++; i < groups.size(); i = next++) run_group(groups[i]);
      });
  }

  aggregate(spec, result);
  return result;
}

void aggregate(const ExperimentSpec& spec, ExperimentResult& result) {
  const int vehicles = spec.figure_vehicle_count();
  const double range = spec.figure_range();
  auto mean = [&](ModelKind m, int cbr, double r, auto value) {
    FigureRow out{m, vehicles, cbr, r, 0.0, 0};
    double sum = 0.0;
    for (const auto& row : result.rows) {
      const auto& k = row.key;
      if (!row.ok || k.model != m || k.vehicles != vehicles || k.cbr_sources != cbr || k.tx_range != r) continue;
      if (const auto v = value(row.report)) {
        sum += *v;
        ++out.n;
      }
    }
    if (out.n > 0) out.value = sum / static_cast<double>(out.n);
    return out;
  };
  auto pdf = [](const net::MetricsReport& r) { return std::optional<double>(r.pdf); };
  auto delay = [](const net::MetricsReport& r) {
    return r.delivered > 0 ? std::optional<double>(r.mean_e2e_delay) : std::nullopt;
  };
  auto loss = [](const net::MetricsReport& r) { return std::optional<double>(static_cast<double>(r.dropped)); };

  result.fig7_pdf.clear();
  result.fig8_delay.clear();
  result.fig9_loss.clear();
  result.fig10_pdr.clear();
  for (auto m : spec.models)
    for (int cbr : spec.cbr_source_counts) {
      result.fig7_pdf.push_back(mean(m, cbr, range, pdf));
      result.fig8_delay.push_back(mean(m, cbr, range, delay));
      result.fig9_loss.push_back(mean(m, cbr, range, loss));
      for (double r : spec.tx_ranges) result.fig10_pdr.push_back(mean(m, cbr, r, pdf));
    }
}

std::string results_csv(const ExperimentResult& result) {
  std::string out = net::csv_header() + ",status\n";
  for (const auto& row : result.rows) {
    out += net::csv_row(row.report);
    out += row.ok ? ",ok\n" : ",failed\n";
  }
  return out;
}

std::string figure_csv(std::span<const FigureRow> rows, std::string_view value_column) {
  std::string out = fmt::format("model,vehicles,cbr_sources,tx_range,{},n\n", value_column);
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{:.6f},{},{}\n", to_string(r.model), r.vehicles, r.cbr_sources, r.tx_range,
                       fmt_value(r), r.n);
  return out;
}

void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& body) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    f << body;
    if (!f) throw Error("cannot write " + (dir / name).string());
  };
  write("results.csv", results_csv(result));
  write("fig7_pdf_vs_cbr.csv", figure_csv(result.fig7_pdf, "pdf"));
  write("fig8_delay_vs_cbr.csv", figure_csv(result.fig8_delay, "mean_delay_s"));
  write("fig9_loss_vs_cbr.csv", figure_csv(result.fig9_loss, "dropped"));
  write("fig10_pdr_vs_range.csv", figure_csv(result.fig10_pdr, "pdr"));
}

}  // namespace hybrist::experiment
