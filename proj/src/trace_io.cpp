#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "hybrist/mobility.hpp"
#include "hybrist/text.hpp"

namespace hybrist::mobility {

namespace {

std::string export_ns2(const MobilityTrace& trace) {
  std::string out;
  const auto n = trace.vehicle_count;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& first = trace.at(0, i);
    fmt::format_to(std::back_inserter(out), "$node_({}) set X_ {:.6f}\n", i, first.x);
    fmt::format_to(std::back_inserter(out), "$node_({}) set Y_ {:.6f}\n", i, first.y);
    fmt::format_to(std::back_inserter(out), "$node_({}) set Z_ {:.6f}\n", i, 0.0);
    for (std::size_t k = 0; k + 1 < trace.step_count; ++k) {
      const auto& from = trace.at(k, i);
      const auto& to = trace.at(k + 1, i);
      fmt::format_to(std::back_inserter(out), "$ns_ at {:.6f} \"$node_({}) setdest {:.6f} {:.6f} {:.6f}\"\n",
                     from.time, i, to.x, to.y, to.speed);
    }
  }
  return out;
}

std::string export_csv(const MobilityTrace& trace) {
  std::string out = "time,vehicle,x,y,speed\n";
  for (const auto& r : trace.records)
    fmt::format_to(std::back_inserter(out), "{:.6f},{},{:.6f},{:.6f},{:.6f}\n", r.time, index(r.vehicle), r.x, r.y,
                   r.speed);
  return out;
}

/// Fills the grid fields from sorted records; rejects ragged traces.
void finish_grid(MobilityTrace& trace, std::size_t vehicles) {
  trace.vehicle_count = vehicles;
  if (vehicles == 0 || trace.records.empty()) {
    trace.records.clear();
    trace.step_count = 0;
    return;
  }
  if (trace.records.size() % vehicles != 0) throw ParseError(0, "trace is not a complete time grid");
  trace.step_count = trace.records.size() / vehicles;
  trace.start_time = trace.records.front().time;
  trace.dt = trace.step_count > 1 ? trace.at(1, 0).time - trace.start_time : 1.0;
  for (std::size_t k = 0; k < trace.step_count; ++k) {
    for (std::size_t i = 0; i < vehicles; ++i) {
      const auto& r = trace.at(k, i);
      if (index(r.vehicle) != i || std::abs(r.time - trace.at(k, 0).time) > 1e-9)
        throw ParseError(0, "trace is not a complete time grid");
    }
  }
  trace.config.dt = trace.dt;
  trace.config.duration = trace.end_time();
  trace.config.vehicle_count = static_cast<int>(vehicles);
}

MobilityTrace parse_csv(std::string_view text) {
  MobilityTrace trace;
  const auto lines = text::split_lines(text);
  std::size_t vehicles = 0;
  bool header = false;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto line = text::trim(lines[n]);
    if (line.empty()) continue;
    if (!header) {
      if (line != "time,vehicle,x,y,speed") throw ParseError(n + 1, "expected header time,vehicle,x,y,speed");
      header = true;
      continue;
    }
    const auto f = text::split(line, ',');
    if (f.size() != 5) throw ParseError(n + 1, "expected 5 fields");
    TraceRecord r;
    r.time = text::parse_double(f[0], n + 1);
    const auto id = text::parse_int(f[1], n + 1);
    if (id < 0) throw ParseError(n + 1, "negative vehicle id");
    r.vehicle = static_cast<VehicleId>(id);
    r.x = text::parse_double(f[2], n + 1);
    r.y = text::parse_double(f[3], n + 1);
    r.speed = text::parse_double(f[4], n + 1);
    vehicles = std::max(vehicles, static_cast<std::size_t>(id) + 1);
    trace.records.push_back(r);
  }
  std::stable_sort(trace.records.begin(), trace.records.end(), [](const auto& a, const auto& b) {
    return a.time != b.time ? a.time < b.time : index(a.vehicle) < index(b.vehicle);
  });
  finish_grid(trace, vehicles);
  return trace;
}

struct Setdest {
  double time;
  double x;
  double y;
  double speed;
};

struct Ns2Node {
  std::optional<double> x;
  std::optional<double> y;
  std::vector<Setdest> moves;
};

/// Extracts `i` from `$node_(i)`.
std::size_t node_index(std::string_view token, std::size_t line) {
  constexpr std::string_view prefix = "$node_(";
  if (!token.starts_with(prefix) || !token.ends_with(")")) throw ParseError(line, "expected $node_(i)");
  token.remove_prefix(prefix.size());
  token.remove_suffix(1);
  const auto v = text::parse_int(token, line);
  if (v < 0) throw ParseError(line, "negative node index");
  return static_cast<std::size_t>(v);
}

MobilityTrace parse_ns2(std::string_view text) {
  std::map<std::size_t, Ns2Node> nodes;
  const auto lines = text::split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto line = text::trim(lines[n]);
    if (line.empty() || line.front() == '#') continue;
    auto tok = text::split_ws(line);
    if (tok.size() == 4 && tok[1] == "set") {
      auto& node = nodes[node_index(tok[0], n + 1)];
      const double v = text::parse_double(tok[3], n + 1);
      if (tok[2] == "X_") node.x = v;
      else if (tok[2] == "Y_") node.y = v;
      else if (tok[2] != "Z_") throw ParseError(n + 1, "unknown coordinate '" + std::string(tok[2]) + "'");
      continue;
    }
    if (tok.size() == 8 && tok[0] == "$ns_" && tok[1] == "at" && tok[3].starts_with('"') && tok[4] == "setdest" &&
        tok[7].ends_with('"')) {
      auto& node = nodes[node_index(tok[3].substr(1), n + 1)];
      auto speed = tok[7];
      speed.remove_suffix(1);
      node.moves.push_back({text::parse_double(tok[2], n + 1), text::parse_double(tok[5], n + 1),
                            text::parse_double(tok[6], n + 1), text::parse_double(speed, n + 1)});
      continue;
    }
    throw ParseError(n + 1, "unrecognized movement line");
  }

  MobilityTrace trace;
  if (nodes.empty()) return trace;
  const auto vehicles = nodes.rbegin()->first + 1;
  if (nodes.size() != vehicles) throw ParseError(0, "node indices must be contiguous from 0");
  for (auto& [i, node] : nodes) {
    if (!node.x || !node.y) throw ParseError(0, fmt::format("node {} has no initial position", i));
    std::stable_sort(node.moves.begin(), node.moves.end(),
                     [](const Setdest& a, const Setdest& b) { return a.time < b.time; });
  }

  // Sample times: each command time, then the arrival at the final destination.
  const auto& ref = nodes.begin()->second.moves;
  std::vector<double> times;
  for (const auto& m : ref) times.push_back(m.time);
  if (ref.size() >= 2) {
    times.push_back(ref.back().time + (ref[1].time - ref[0].time));
  } else if (ref.size() == 1) {
    const auto& m = ref.front();
    const double dist = std::hypot(m.x - *nodes.begin()->second.x, m.y - *nodes.begin()->second.y);
    times.push_back(m.time + (m.speed > 0 && dist > 0 ? dist / m.speed : 1.0));
  } else {
    times.push_back(0.0);
  }

  for (std::size_t k = 0; k < times.size(); ++k) {
    for (const auto& [i, node] : nodes) {
      if (node.moves.size() != ref.size() ||
          (k < ref.size() && std::abs(node.moves[k].time - ref[k].time) > 1e-9))
        throw ParseError(0, "setdest commands are not on a common time grid");
      TraceRecord r;
      r.time = times[k];
      r.vehicle = static_cast<VehicleId>(i);
      if (k == 0) {
        r.x = *node.x;
        r.y = *node.y;
      } else {
        const auto& m = node.moves[k - 1];
        r.x = m.x;
        r.y = m.y;
        r.speed = m.speed;
      }
      trace.records.push_back(r);
    }
  }
  finish_grid(trace, vehicles);
  return trace;
}

}  // namespace

std::string export_trace(const MobilityTrace& trace, TraceFormat format) {
  return format == TraceFormat::Ns2Movement ? export_ns2(trace) : export_csv(trace);
}

MobilityTrace parse_trace(std::string_view text, TraceFormat format) {
  return format == TraceFormat::Ns2Movement ? parse_ns2(text) : parse_csv(text);
}

}  // namespace hybrist::mobility
