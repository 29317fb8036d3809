#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hybrist/aodv.hpp"
#include "hybrist/common.hpp"
#include "hybrist/mobility.hpp"

namespace hybrist::net {

/// Disk radio with an interference disk and a slotted CSMA MAC.
struct RadioParams {
  double tx_range = 250.0;
  double interference_range = 450.0;
  /// Senders within this distance defer; 0 means tx_range.
  double carrier_sense_range = 0.0;
  double bitrate = 10e6;
  int per_hop_overhead = 64;  // MAC, IP and UDP headers, bytes
  int control_size = 48;      // RREQ/RREP/RERR payload, bytes
  double slot = 13e-6;
  int max_backoff_slots = 15;
  int retry_limit = 2;
  std::size_t queue_capacity = 64;

  /// Defaults with `tx_range` and interference at `factor` times it.
  static RadioParams for_range(double tx_range, double factor = 1.8);

  double sense_range() const { return carrier_sense_range > 0 ? carrier_sense_range : tx_range; }
  double airtime(int payload_bytes) const { return (payload_bytes + per_hop_overhead) * 8.0 / bitrate; }
  void validate() const;
};

struct CbrFlowConfig {
  VehicleId src{};
  VehicleId dst{};
  int packet_size = 512;
  double interval = 0.05;
  double start = 0.0;
  double stop = 0.0;

  void validate() const;
};

struct PacketRecord {
  std::uint64_t packet_id = 0;
  std::size_t flow = 0;
  double created = 0.0;
  std::optional<double> delivered_at;
  int hops = 0;
  Disposition disposition = Disposition::InFlightAtEnd;
  std::vector<NodeIndex> path;  // nodes the packet was received at, source first
};

struct FlowMetrics {
  std::size_t sent = 0;
  std::size_t delivered = 0;
  std::size_t dropped = 0;
  double pdf = 0.0;
  double mean_e2e_delay = 0.0;
};

struct SweepKey {
  ModelKind model = ModelKind::HMM;
  int vehicles = 0;
  int cbr_sources = 0;
  double tx_range = 0.0;
  std::uint64_t seed = 0;
};

struct MetricsReport {
  std::size_t sent = 0;
  std::size_t delivered = 0;
  std::size_t dropped = 0;
  std::size_t in_flight = 0;
  double pdf = 0.0;
  double mean_e2e_delay = 0.0;
  std::size_t dropped_no_route = 0;
  std::size_t dropped_collision = 0;
  std::size_t dropped_ttl = 0;
  std::size_t dropped_queue = 0;
  std::vector<FlowMetrics> per_flow;
  SweepKey key;
};

struct Metrics {
  double pdf = 0.0;
  double mean_e2e_delay = 0.0;
  std::size_t loss = 0;
};

/// pdf, mean delay over delivered packets and the drop count. Throws
/// EmptyInput on an empty list.
Metrics compute_metrics(std::span<const PacketRecord> records);

/// Aggregate report, including the per-flow breakdown for `flow_count` flows.
MetricsReport summarize(std::span<const PacketRecord> records, std::size_t flow_count);

/// Per-vehicle position at `t`, interpolated linearly between samples.
/// Throws UnknownTime outside the trace span.
std::vector<Vec2> positions_at(const mobility::MobilityTrace& trace, double t);

/// Inclusive disk test.
inline bool in_range(Vec2 a, Vec2 b, double range) { return distance(a, b) <= range; }

enum class Reception : std::uint8_t { Received, CollisionLoss, OutOfRange };

struct Transmission {
  NodeIndex sender = 0;
  Vec2 sender_pos;
  double start = 0.0;
  double end = 0.0;
};

struct Listener {
  NodeIndex node = 0;
  Vec2 pos;
};

/// Outcome of `tx` at each listener. `concurrent` may include `tx` itself and
/// transmissions that do not overlap it; both are ignored. A listener that
/// is itself transmitting during `tx` cannot receive it.
std::vector<Reception> channel_deliver(const Transmission& tx, std::span<const Listener> listeners,
                                       std::span<const Transmission> concurrent, const RadioParams& radio);

/// Send times start, start + interval, ... strictly below stop.
std::vector<double> cbr_generate(const CbrFlowConfig& flow);

struct SimResult {
  MetricsReport report;
  std::vector<PacketRecord> packets;
  std::vector<AodvNodeState> nodes;  // final routing state per vehicle
};

/// Replays `trace` with `flows` over the channel. Deterministic in all inputs.
SimResult run_network_sim(const mobility::MobilityTrace& trace, std::span<const CbrFlowConfig> flows,
                          const RadioParams& radio, std::uint64_t seed, const AodvParams& aodv = {});

/// `model,vehicles,cbr_sources,tx_range,seed,sent,delivered,dropped,pdf,mean_delay_s`
std::string csv_header();
std::string csv_row(const MetricsReport& report);

}  // namespace hybrist::net
