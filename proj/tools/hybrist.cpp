#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "hybrist/experiment.hpp"

namespace {

using namespace hybrist;

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

experiment::ExperimentSpec load(const std::string& path, const std::string& preset) {
  const auto base = preset.empty() ? experiment::ExperimentSpec{}
                                   : experiment::preset_spec(experiment::parse_preset(preset));
  return experiment::parse_config(slurp(path), base);
}

int cmd_run(const std::string& config, const std::string& preset, unsigned jobs, const std::string& out) {
  auto spec = load(config, preset);
  if (!out.empty()) spec.output_dir = out;
  const auto result = experiment::run_experiment(spec, jobs);
  experiment::write_outputs(result, spec.output_dir);
  std::size_t failed = 0;
  for (const auto& row : result.rows) {
    if (row.ok) continue;
    ++failed;
    const auto& k = row.key;
    std::cerr << fmt::format("run failed: model={} vehicles={} cbr={} range={} seed={}: {}\n", to_string(k.model),
                             k.vehicles, k.cbr_sources, k.tx_range, k.seed, row.error);
  }
  std::cout << fmt::format("{} runs, {} failed, results in {}\n", result.rows.size(), failed, spec.output_dir);
  return failed == 0 ? 0 : 1;
}

int cmd_trace(const std::string& config, const std::string& preset, const std::string& format,
              const std::string& model, int vehicles, std::uint64_t seed, const std::string& out) {
  const auto spec = load(config, preset);
  const auto kind = model.empty() ? spec.models.front() : parse_model_kind(model);
  const auto n = vehicles > 0 ? vehicles : spec.vehicle_counts.front();
  const auto s = seed > 0 ? seed : spec.seeds.front();
  const auto trace = experiment::build_trace(spec, kind, n, s);
  const auto text = mobility::export_trace(
      trace, format == "ns2" ? mobility::TraceFormat::Ns2Movement : mobility::TraceFormat::NativeCsv);
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) throw Error("cannot write " + out);
  }
  return 0;
}

int cmd_validate(const std::string& config, const std::string& preset) {
  const auto spec = load(config, preset);
  std::cout << fmt::format("ok: {} runs ({} models x {} vehicle counts x {} cbr counts x {} ranges x {} seeds)\n",
                           spec.run_count(), spec.models.size(), spec.vehicle_counts.size(),
                           spec.cbr_source_counts.size(), spec.tx_ranges.size(), spec.seeds.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vehicular mobility and ad hoc network simulation sweeps"};
  app.require_subcommand(1);

  std::string config, preset, out, format = "csv", model;
  unsigned jobs = 1;
  int vehicles = 0;
  std::uint64_t seed = 0;
  const std::vector<std::string> presets{"desk", "paper"};

  auto* run = app.add_subcommand("run", "Run the sweep and write results.csv and the figure files");
  run->add_option("config", config, "Configuration file")->required();
  run->add_option("--preset", preset, "Base sweep before the configuration is applied")
      ->check(CLI::IsMember(presets));
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1u, 4096u));
  run->add_option("--out", out, "Output directory, overrides output_dir");

  auto* trace = app.add_subcommand("trace", "Export one mobility trace");
  trace->add_option("config", config, "Configuration file")->required();
  trace->add_option("--preset", preset, "Base sweep")->check(CLI::IsMember(presets));
  trace->add_option("--format", format, "ns2 or csv")->check(CLI::IsMember({"ns2", "csv"}));
  trace->add_option("--model", model, "HMM, UMM or HWM; default the first configured model");
  trace->add_option("--vehicles", vehicles, "Default the first configured count");
  trace->add_option("--seed", seed, "Default the first configured seed");
  trace->add_option("--out", out, "Output file; default stdout");

  auto* validate = app.add_subcommand("validate", "Check a configuration file");
  validate->add_option("config", config, "Configuration file")->required();
  validate->add_option("--preset", preset, "Base sweep")->check(CLI::IsMember(presets));

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config, preset, jobs, out);
    if (trace->parsed()) return cmd_trace(config, preset, format, model, vehicles, seed, out);
    return cmd_validate(config, preset);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
