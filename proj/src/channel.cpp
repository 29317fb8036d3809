#include <algorithm>
#include <cmath>

#include "hybrist/network_sim.hpp"

namespace hybrist::net {

RadioParams RadioParams::for_range(double tx_range, double factor) {
  RadioParams r;
  r.tx_range = tx_range;
  r.interference_range = factor * tx_range;
  return r;
}

void RadioParams::validate() const {
  if (!(tx_range > 0)) throw ValidationError("tx_range must be > 0");
  if (!(interference_range >= tx_range)) throw ValidationError("interference_range must be >= tx_range");
  if (!(bitrate > 0)) throw ValidationError("bitrate must be > 0");
  if (per_hop_overhead < 0 || control_size <= 0) throw ValidationError("frame sizes must be positive");
  if (!(slot > 0) || max_backoff_slots < 0) throw ValidationError("bad MAC slot parameters");
  if (retry_limit < 0) throw ValidationError("retry_limit must be >= 0");
  if (queue_capacity == 0) throw ValidationError("queue_capacity must be > 0");
  if (carrier_sense_range < 0) throw ValidationError("carrier_sense_range must be >= 0");
}

void CbrFlowConfig::validate() const {
  if (src == dst) throw ValidationError("flow source and destination must differ");
  if (packet_size <= 0) throw ValidationError("packet_size must be > 0");
  if (!(interval > 0)) throw ValidationError("interval must be > 0");
  if (!(start < stop)) throw ValidationError("flow start must precede stop");
}

std::vector<double> cbr_generate(const CbrFlowConfig& flow) {
  flow.validate();
  const auto n = static_cast<std::size_t>(std::ceil((flow.stop - flow.start) / flow.interval - 1e-9));
  std::vector<double> times;
  times.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = flow.start + static_cast<double>(k) * flow.interval;
    if (t < flow.stop) times.push_back(t);
  }
  return times;
}

std::vector<Vec2> positions_at(const mobility::MobilityTrace& trace, double t) {
  constexpr double eps = 1e-9;
  if (trace.step_count == 0 || t < trace.start_time - eps || t > trace.end_time() + eps)
    throw UnknownTime("time " + std::to_string(t) + " outside the trace span");
  const auto n = trace.vehicle_count;
  std::vector<Vec2> out(n);
  const double u = (t - trace.start_time) / trace.dt;
  auto k = static_cast<std::size_t>(std::max(0.0, std::floor(u + eps)));
  if (k >= trace.step_count - 1) {
    k = trace.step_count - 1;
    for (std::size_t i = 0; i < n; ++i) out[i] = {trace.at(k, i).x, trace.at(k, i).y};
    return out;
  }
  const double frac = std::clamp(u - static_cast<double>(k), 0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = trace.at(k, i);
    if (frac < eps) {
      out[i] = {a.x, a.y};
      continue;
    }
    const auto& b = trace.at(k + 1, i);
    out[i] = {a.x + (b.x - a.x) * frac, a.y + (b.y - a.y) * frac};
  }
  return out;
}

std::vector<Reception> channel_deliver(const Transmission& tx, std::span<const Listener> listeners,
                                       std::span<const Transmission> concurrent, const RadioParams& radio) {
  std::vector<Reception> out;
  out.reserve(listeners.size());
  auto overlaps = [&](const Transmission& o) {
    const bool same = o.sender == tx.sender && o.start == tx.start && o.end == tx.end;
    return !same && o.start < tx.end && tx.start < o.end;
  };
  for (const auto& l : listeners) {
    if (l.node == tx.sender || !in_range(tx.sender_pos, l.pos, radio.tx_range)) {
      out.push_back(Reception::OutOfRange);
      continue;
    }
    const bool lost = std::any_of(concurrent.begin(), concurrent.end(), [&](const Transmission& o) {
      if (!overlaps(o)) return false;
      return o.sender == l.node || in_range(o.sender_pos, l.pos, radio.interference_range);
    });
    out.push_back(lost ? Reception::CollisionLoss : Reception::Received);
  }
  return out;
}

}  // namespace hybrist::net
