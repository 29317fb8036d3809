#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hybrist/mobility.hpp"
#include "hybrist/network_sim.hpp"
#include "hybrist/road_network.hpp"

namespace hybrist::experiment {

/// One sweep: every combination of the list fields is simulated once.
struct ExperimentSpec {
  road::TopologyParams topology;
  mobility::MobilityConfig mobility;
  net::RadioParams radio;
  double interference_factor = 1.8;  // interference_range = factor * tx_range
  int packet_size = 512;
  double cbr_interval = 0.05;

  std::vector<ModelKind> models{ModelKind::HMM, ModelKind::UMM, ModelKind::HWM};
  std::vector<int> vehicle_counts{160, 200, 250};
  std::vector<int> cbr_source_counts{5, 10, 15, 20};
  std::vector<double> tx_ranges{50, 100, 150, 200, 250, 300};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  /// Slice used by the figures. A zero range picks 250 m when swept, else
  /// the first range; zero vehicles picks the first count.
  double figure_tx_range = 0.0;
  int figure_vehicles = 0;

  std::string output_dir = "results";

  void validate() const;
  std::size_t run_count() const;
  double figure_range() const;
  int figure_vehicle_count() const;
};

enum class Preset : std::uint8_t { Desk, Paper };

Preset parse_preset(std::string_view name);

/// Defaults with the preset's sweep applied on top.
ExperimentSpec preset_spec(Preset preset);

/// `key = value` lines, `#` comments, comma-separated lists. Keys absent from
/// the text keep their value in `base`. Throws ParseError or ValidationError.
ExperimentSpec parse_config(std::string_view text, const ExperimentSpec& base = {});

struct RunRow {
  net::SweepKey key;
  net::MetricsReport report;
  bool ok = true;
  std::string error;
};

struct FigureRow {
  ModelKind model = ModelKind::HMM;
  int vehicles = 0;
  int cbr_sources = 0;
  double tx_range = 0.0;
  double value = 0.0;
  std::size_t n = 0;  // runs averaged; delay skips runs that delivered nothing
};

struct ExperimentResult {
  std::vector<RunRow> rows;  // sweep order: model, vehicles, cbr, range, seed
  std::vector<FigureRow> fig7_pdf;
  std::vector<FigureRow> fig8_delay;
  std::vector<FigureRow> fig9_loss;
  std::vector<FigureRow> fig10_pdr;

  bool all_ok() const;
};

/// CBR flows for one trace: disjoint src/dst pairs drawn with `seed`,
/// nested so that the first k flows of a larger count equal the smaller set.
std::vector<net::CbrFlowConfig> select_flows(const mobility::MobilityTrace& trace, int count,
                                             const ExperimentSpec& spec, std::uint64_t seed);

/// Runs the sweep on up to `jobs` threads. Rows come back in sweep order
/// whatever the completion order.
ExperimentResult run_experiment(const ExperimentSpec& spec, unsigned jobs = 1);

/// Averages over seeds from the successful rows of `rows`.
void aggregate(const ExperimentSpec& spec, ExperimentResult& result);

std::string results_csv(const ExperimentResult& result);
std::string figure_csv(std::span<const FigureRow> rows, std::string_view value_column);

/// Writes results.csv and the four figure files into `dir`.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

/// Mobility trace for one sweep point, as the sweep itself would build it.
mobility::MobilityTrace build_trace(const ExperimentSpec& spec, ModelKind model, int vehicles, std::uint64_t seed);

}  // namespace hybrist::experiment
