#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hybrist/experiment.hpp"

using namespace hybrist;
using namespace hybrist::experiment;

namespace {

// Small enough to run in about a second, large enough for 20 flows.
constexpr const char* kSmall = R"(
duration = 30
vehicle_counts = 40
cbr_source_counts = 5, 10, 15, 20
tx_ranges = 250
seeds = 1, 2, 3, 4, 5
)";

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("empty configuration is the full default sweep") {
  const auto spec = parse_config("");
  CHECK(spec.models == std::vector{ModelKind::HMM, ModelKind::UMM, ModelKind::HWM});
  CHECK(spec.mobility.duration == 1000.0);
  CHECK(spec.topology.corridor_length == 6380.0);
  CHECK(spec.topology.corridor_width == 1934.0);
  CHECK(spec.vehicle_counts == std::vector{160, 200, 250});
  CHECK(spec.tx_ranges == std::vector<double>{50, 100, 150, 200, 250, 300});
  CHECK(spec.run_count() == 3 * 3 * 4 * 6 * 5);
}

TEST_CASE("configuration parsing") {
  CHECK(parse_config("tx_ranges = 50,100,150,200,250,300\n").tx_ranges.size() == 6);
  CHECK(parse_config("models = UMM  # only urban\n").models == std::vector{ModelKind::UMM});
  CHECK_THROWS_AS(parse_config("cbr_source_counts = 0\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("seeds = 1, 1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("vehicle_counts = 30\n"), ValidationError);  // 20 flows need 40
  CHECK_THROWS_AS(parse_config("figure_tx_range = 125\n"), ValidationError);
  try {
    parse_config("seeds = 1\n\nbogus_key = 3\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  try {
    parse_config("seeds = 1\nseeds = 2\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_config("duration = fast\n"), ParseError);
  CHECK_THROWS_AS(parse_config("duration\n"), ParseError);
}

TEST_CASE("presets are a base the configuration overrides") {
  const auto desk = preset_spec(Preset::Desk);
  CHECK(desk.mobility.duration == 300.0);
  CHECK(desk.vehicle_counts == std::vector{40});
  CHECK(desk.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(desk.cbr_source_counts == std::vector{5, 10, 15, 20});
  CHECK(desk.run_count() == 3 * 1 * 4 * 6 * 2);
  const auto spec = parse_config("seeds = 9\n", desk);
  CHECK(spec.seeds == std::vector<std::uint64_t>{9});
  CHECK(spec.mobility.duration == 300.0);
  CHECK(parse_preset("paper") == Preset::Paper);
  CHECK_THROWS_AS(parse_preset("laptop"), ValidationError);
}

TEST_CASE("flows are disjoint, nested and deterministic") {
  const auto spec = parse_config(kSmall);
  const auto trace = build_trace(spec, ModelKind::UMM, 40, 3);
  const auto twenty = select_flows(trace, 20, spec, 3);
  const auto five = select_flows(trace, 5, spec, 3);
  REQUIRE(twenty.size() == 20);
  std::set<VehicleId> used;
  for (const auto& f : twenty) {
    used.insert(f.src);
    used.insert(f.dst);
    CHECK(f.start >= 1.0);
    CHECK(f.start < 6.0);
    CHECK(f.stop == doctest::Approx(trace.end_time() - 10.0));
    CHECK(f.interval == 0.05);
    CHECK(f.packet_size == 512);
  }
  CHECK(used.size() == 40);
  for (std::size_t i = 0; i < five.size(); ++i) {
    CHECK(five[i].src == twenty[i].src);
    CHECK(five[i].dst == twenty[i].dst);
    CHECK(five[i].start == twenty[i].start);
  }
  CHECK(select_flows(trace, 20, spec, 4)[0].src != twenty[0].src);
  CHECK_THROWS_AS(select_flows(trace, 21, spec, 3), ValidationError);
}

TEST_CASE("sweep rows, aggregates and determinism") {
  const auto spec = parse_config(kSmall);
  const auto result = run_experiment(spec, 2);

  REQUIRE(result.rows.size() == 60);
  CHECK(result.all_ok());
  std::size_t i = 0;
  for (auto m : spec.models)
    for (int c : spec.cbr_source_counts)
      for (auto s : spec.seeds) {
        const auto& row = result.rows[i++];
        CHECK(row.key.model == m);
        CHECK(row.key.cbr_sources == c);
        CHECK(row.key.seed == s);
        const auto& r = row.report;
        CHECK(r.sent == r.delivered + r.dropped + r.in_flight);
        CHECK(r.per_flow.size() == static_cast<std::size_t>(c));
      }

  CHECK(result.fig7_pdf.size() == spec.models.size() * spec.cbr_source_counts.size());
  CHECK(result.fig9_loss.size() == result.fig7_pdf.size());
  CHECK(result.fig10_pdr.size() == spec.models.size() * spec.cbr_source_counts.size() * spec.tx_ranges.size());

  // Recompute every aggregate from the raw rows.
  std::map<std::pair<ModelKind, int>, std::vector<const net::MetricsReport*>> groups;
  for (const auto& row : result.rows) groups[{row.key.model, row.key.cbr_sources}].push_back(&row.report);
  for (std::size_t k = 0; k < result.fig7_pdf.size(); ++k) {
    const auto& pdf = result.fig7_pdf[k];
    const auto& runs = groups.at({pdf.model, pdf.cbr_sources});
    double sum_pdf = 0, sum_drop = 0, sum_delay = 0;
    std::size_t delivered_runs = 0;
    for (const auto* r : runs) {
      sum_pdf += r->pdf;
      sum_drop += static_cast<double>(r->dropped);
      if (r->delivered > 0) {
        sum_delay += r->mean_e2e_delay;
        ++delivered_runs;
      }
    }
    CHECK(pdf.n == runs.size());
    CHECK(pdf.value == doctest::Approx(sum_pdf / runs.size()).epsilon(1e-9));
    CHECK(result.fig9_loss[k].value == doctest::Approx(sum_drop / runs.size()).epsilon(1e-9));
    CHECK(result.fig8_delay[k].n == delivered_runs);
    if (delivered_runs > 0) CHECK(result.fig8_delay[k].value == doctest::Approx(sum_delay / delivered_runs).epsilon(1e-9));
    CHECK(result.fig10_pdr[k].value == doctest::Approx(pdf.value).epsilon(1e-9));
  }

  const auto again = run_experiment(spec, 1);
  CHECK(results_csv(again) == results_csv(result));
  CHECK(figure_csv(again.fig7_pdf, "pdf") == figure_csv(result.fig7_pdf, "pdf"));
  CHECK(figure_csv(again.fig8_delay, "mean_delay_s") == figure_csv(result.fig8_delay, "mean_delay_s"));

  const auto csv = results_csv(result);
  CHECK(csv.starts_with(net::csv_header() + ",status\n"));
  CHECK(line_count(csv) == 61);
  CHECK(csv.find(",failed\n") == std::string::npos);
}

TEST_CASE("outputs land in the directory and figure headers are fixed") {
  auto spec = parse_config("duration = 20\nvehicle_counts = 10\ncbr_source_counts = 2\ntx_ranges = 200, 250\nseeds = 1\n");
  const auto result = run_experiment(spec, 1);
  const auto dir = std::filesystem::temp_directory_path() / "hybrist_test_outputs";
  std::filesystem::remove_all(dir);
  write_outputs(result, dir);
  CHECK(slurp(dir / "results.csv") == results_csv(result));
  CHECK(slurp(dir / "fig7_pdf_vs_cbr.csv").starts_with("model,vehicles,cbr_sources,tx_range,pdf,n\n"));
  CHECK(slurp(dir / "fig8_delay_vs_cbr.csv").starts_with("model,vehicles,cbr_sources,tx_range,mean_delay_s,n\n"));
  CHECK(slurp(dir / "fig9_loss_vs_cbr.csv").starts_with("model,vehicles,cbr_sources,tx_range,dropped,n\n"));
  CHECK(line_count(slurp(dir / "fig10_pdr_vs_range.csv")) == 1 + 3 * 1 * 2);
  CHECK(line_count(slurp(dir / "fig7_pdf_vs_cbr.csv")) == 1 + 3);
  std::filesystem::remove_all(dir);
}
