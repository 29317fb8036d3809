#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "hybrist/experiment.hpp"
#include "hybrist/text.hpp"

namespace hybrist::experiment {

namespace {

using Setter = std::function<void(ExperimentSpec&, std::string_view, std::size_t)>;

template <typename T>
T parse_scalar(std::string_view v, std::size_t line) {
  if constexpr (std::is_same_v<T, double>) {
    return text::parse_double(v, line);
  } else if constexpr (std::is_same_v<T, bool>) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ParseError(line, "expected true or false, got '" + std::string(v) + "'");
  } else {
    const auto n = text::parse_int(v, line);
    if constexpr (std::is_unsigned_v<T>) {
      if (n < 0) throw ParseError(line, "expected a non-negative integer, got '" + std::string(v) + "'");
    }
    return static_cast<T>(n);
  }
}

template <typename T, typename F>
std::vector<T> parse_list(std::string_view v, std::size_t line, F&& item) {
  std::vector<T> out;
  for (auto tok : text::split(v, ',')) {
    tok = text::trim(tok);
    if (tok.empty()) throw ParseError(line, "empty list item");
    out.push_back(item(tok));
  }
  return out;
}

template <typename T>
Setter field(T ExperimentSpec::*member) {
  return [member](ExperimentSpec& s, std::string_view v, std::size_t line) { s.*member = parse_scalar<T>(v, line); };
}

template <typename T>
Setter topology(T road::TopologyParams::*member) {
  return [member](ExperimentSpec& s, std::string_view v, std::size_t line) {
    s.topology.*member = parse_scalar<T>(v, line);
  };
}

template <typename T>
Setter mobility(T mobility::MobilityConfig::*member) {
  return [member](ExperimentSpec& s, std::string_view v, std::size_t line) {
    s.mobility.*member = parse_scalar<T>(v, line);
  };
}

template <typename T>
Setter radio(T net::RadioParams::*member) {
  return [member](ExperimentSpec& s, std::string_view v, std::size_t line) {
    s.radio.*member = parse_scalar<T>(v, line);
  };
}

template <typename T>
Setter list(std::vector<T> ExperimentSpec::*member) {
  return [member](ExperimentSpec& s, std::string_view v, std::size_t line) {
    s.*member = parse_list<T>(v, line, [line](std::string_view tok) { return parse_scalar<T>(tok, line); });
  };
}

mobility::TurnModel parse_turn_model(std::string_view v, std::size_t line) {
  if (v == "shortest_path") return mobility::TurnModel::ShortestPath;
  if (v == "manhattan") return mobility::TurnModel::Manhattan;
  throw ParseError(line, "unknown turn model '" + std::string(v) + "'");
}

const std::map<std::string, Setter, std::less<>>& setters() {
  using TP = road::TopologyParams;
  using MC = mobility::MobilityConfig;
  using RP = net::RadioParams;
  static const std::map<std::string, Setter, std::less<>> table = {
      {"corridor_length", topology(&TP::corridor_length)},
      {"corridor_width", topology(&TP::corridor_width)},
      {"metrobus_lanes_per_direction", topology(&TP::metrobus_lanes_per_direction)},
      {"metrobus_speed", topology(&TP::metrobus_speed)},
      {"metrobus_bidirectional", topology(&TP::metrobus_bidirectional)},
      {"main_road_lanes_per_direction", topology(&TP::main_road_lanes_per_direction)},
      {"main_road_speed", topology(&TP::main_road_speed)},
      {"hwm_lanes", topology(&TP::hwm_lanes)},
      {"hwm_speed", topology(&TP::hwm_speed)},
      {"umm_lanes", topology(&TP::umm_lanes)},
      {"umm_speed", topology(&TP::umm_speed)},
      {"metrobus_stations", topology(&TP::metrobus_stations)},
      {"main_road_stops", topology(&TP::main_road_stops)},
      {"hwm_stops", topology(&TP::hwm_stops)},
      {"umm_stops", topology(&TP::umm_stops)},
      {"umm_grid_rows", topology(&TP::umm_grid_rows)},
      {"umm_grid_cols", topology(&TP::umm_grid_cols)},
      {"umm_block_length", topology(&TP::umm_block_length)},
      {"umm_grid_width", topology(&TP::umm_grid_width)},
      {"umm_control",
       [](ExperimentSpec& s, std::string_view v, std::size_t line) {
         try {
           s.topology.umm_control = road::parse_urban_control(v);
         } catch (const Error& e) {
           throw ParseError(line, e.what());
         }
       }},
      {"ptsm_stop_probability", topology(&TP::ptsm_stop_probability)},
      {"ptsm_max_wait", topology(&TP::ptsm_max_wait)},
      {"tlm_green_time", topology(&TP::tlm_green_time)},
      {"metrobus_dwell_min", topology(&TP::metrobus_dwell_min)},
      {"metrobus_dwell_max", topology(&TP::metrobus_dwell_max)},
      {"stop_dwell_min", topology(&TP::stop_dwell_min)},
      {"stop_dwell_max", topology(&TP::stop_dwell_max)},

      {"dt", mobility(&MC::dt)},
      {"accel", mobility(&MC::accel)},
      {"decel", mobility(&MC::decel)},
      {"tau", mobility(&MC::tau)},
      {"sigma", mobility(&MC::sigma)},
      {"min_gap", mobility(&MC::min_gap)},
      {"vehicle_length", mobility(&MC::vehicle_length)},
      {"lane_width", mobility(&MC::lane_width)},
      {"rwp_pause", mobility(&MC::rwp_pause)},
      {"rwp_speed_min", mobility(&MC::rwp_speed_min)},
      {"rwp_speed_max", mobility(&MC::rwp_speed_max)},
      {"ssm_stop_time", mobility(&MC::ssm_stop_time)},
      {"duration", mobility(&MC::duration)},
      {"metrobus_fraction", mobility(&MC::metrobus_fraction)},
      {"turn_model",
       [](ExperimentSpec& s, std::string_view v, std::size_t line) {
         s.mobility.turn_model = parse_turn_model(v, line);
       }},

      {"bitrate", radio(&RP::bitrate)},
      {"per_hop_overhead", radio(&RP::per_hop_overhead)},
      {"control_size", radio(&RP::control_size)},
      {"slot", radio(&RP::slot)},
      {"max_backoff_slots", radio(&RP::max_backoff_slots)},
      {"retry_limit", radio(&RP::retry_limit)},
      {"queue_capacity", radio(&RP::queue_capacity)},
      {"carrier_sense_range", radio(&RP::carrier_sense_range)},
      {"interference_factor", field(&ExperimentSpec::interference_factor)},
      {"packet_size", field(&ExperimentSpec::packet_size)},
      {"cbr_interval", field(&ExperimentSpec::cbr_interval)},

      {"models",
       [](ExperimentSpec& s, std::string_view v, std::size_t line) {
         s.models = parse_list<ModelKind>(v, line, [line](std::string_view tok) {
           try {
             return parse_model_kind(tok);
           } catch (const Error& e) {
             throw ParseError(line, e.what());
           }
         });
       }},
      {"vehicle_counts", list(&ExperimentSpec::vehicle_counts)},
      {"cbr_source_counts", list(&ExperimentSpec::cbr_source_counts)},
      {"tx_ranges", list(&ExperimentSpec::tx_ranges)},
      {"seeds", list(&ExperimentSpec::seeds)},
      {"figure_tx_range", field(&ExperimentSpec::figure_tx_range)},
      {"figure_vehicles", field(&ExperimentSpec::figure_vehicles)},
      {"output_dir", [](ExperimentSpec& s, std::string_view v, std::size_t) { s.output_dir = std::string(v); }},
  };
  return table;
}

template <typename T>
void require_distinct(const std::vector<T>& v, const char* name) {
  if (v.empty()) throw ValidationError(std::string(name) + " must not be empty");
  if (std::set<T>(v.begin(), v.end()).size() != v.size())
    throw ValidationError(std::string(name) + " has duplicate entries");
}

// CBR flows start before 6 s and stop 10 s before the end.
constexpr double kMinDuration = 16.0;

}  // namespace

void ExperimentSpec::validate() const {
  require_distinct(models, "models");
  require_distinct(vehicle_counts, "vehicle_counts");
  require_distinct(cbr_source_counts, "cbr_source_counts");
  require_distinct(tx_ranges, "tx_ranges");
  require_distinct(seeds, "seeds");
  for (int v : vehicle_counts)
    if (v <= 0) throw ValidationError("vehicle_counts must be positive");
  const int fewest = *std::min_element(vehicle_counts.begin(), vehicle_counts.end());
  for (int c : cbr_source_counts) {
    if (c <= 0) throw ValidationError("cbr_source_counts must be positive");
    if (2 * c > fewest) throw ValidationError("cbr_source_counts must not exceed vehicle_count/2");
  }
  for (double r : tx_ranges)
    if (!(r > 0)) throw ValidationError("tx_ranges must be positive");
  if (!(interference_factor >= 1.0)) throw ValidationError("interference_factor must be >= 1");
  if (packet_size <= 0) throw ValidationError("packet_size must be positive");
  if (!(cbr_interval > 0)) throw ValidationError("cbr_interval must be positive");
  if (!(mobility.duration > kMinDuration)) throw ValidationError("duration must exceed 16 s");
  if (figure_tx_range != 0.0 && std::find(tx_ranges.begin(), tx_ranges.end(), figure_tx_range) == tx_ranges.end())
    throw ValidationError("figure_tx_range must be one of tx_ranges");
  if (figure_vehicles != 0 &&
      std::find(vehicle_counts.begin(), vehicle_counts.end(), figure_vehicles) == vehicle_counts.end())
    throw ValidationError("figure_vehicles must be one of vehicle_counts");
  if (output_dir.empty()) throw ValidationError("output_dir must not be empty");

  topology.validate();
  auto m = mobility;
  m.vehicle_count = fewest;
  m.validate();
  for (double r : tx_ranges) {
    auto rp = radio;
    rp.tx_range = r;
    rp.interference_range = interference_factor * r;
    rp.validate();
  }
}

std::size_t ExperimentSpec::run_count() const {
  return models.size() * vehicle_counts.size() * cbr_source_counts.size() * tx_ranges.size() * seeds.size();
}

double ExperimentSpec::figure_range() const {
  if (figure_tx_range != 0.0) return figure_tx_range;
  return std::find(tx_ranges.begin(), tx_ranges.end(), 250.0) != tx_ranges.end() ? 250.0 : tx_ranges.front();
}

int ExperimentSpec::figure_vehicle_count() const {
  return figure_vehicles == 0 ? vehicle_counts.front() : figure_vehicles;
}

Preset parse_preset(std::string_view name) {
  if (name == "desk") return Preset::Desk;
  if (name == "paper") return Preset::Paper;
  throw ValidationError("unknown preset '" + std::string(name) + "'");
}

ExperimentSpec preset_spec(Preset preset) {
  ExperimentSpec s;
  if (preset == Preset::Desk) {
    s.mobility.duration = 300.0;
    s.vehicle_counts = {40};
    s.seeds = {1, 2};
  }
  return s;
}

ExperimentSpec parse_config(std::string_view text, const ExperimentSpec& base) {
  ExperimentSpec spec = base;
  std::set<std::string, std::less<>> seen;
  const auto lines = text::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto no = i + 1;
    auto line = lines[i];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(no, "expected 'key = value'");
    const auto key = text::trim(line.substr(0, eq));
    const auto value = text::trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(no, "missing key");
    if (value.empty()) throw ParseError(no, "missing value for '" + std::string(key) + "'");
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ParseError(no, "unknown key '" + std::string(key) + "'");
    if (!seen.emplace(key).second) throw ParseError(no, "duplicate key '" + std::string(key) + "'");
    it->second(spec, value, no);
  }
  spec.validate();
  return spec;
}

}  // namespace hybrist::experiment
