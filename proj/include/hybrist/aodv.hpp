#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

// Reactive on-demand distance-vector routing without HELLO messages.
// Handlers are pure state transitions returning actions; the simulator
// owns time, the channel and the MAC.
namespace hybrist::net {

using NodeIndex = std::uint32_t;

enum class Disposition : std::uint8_t {
  Delivered,
  DroppedNoRoute,
  DroppedCollision,
  DroppedTtl,
  DroppedQueueOverflow,
  InFlightAtEnd,
};

std::string_view to_string(Disposition d) noexcept;

struct AodvParams {
  double active_route_timeout = 3.0;
  int ttl = 16;
  int rreq_retries = 3;
  double first_rreq_timeout = 0.5;  // doubles on each retry
  double seen_rreq_lifetime = 3.0;

  void validate() const;
};

struct RouteEntry {
  NodeIndex next_hop = 0;
  int hop_count = 0;
  std::uint32_t dest_seq = 0;
  double expiry = 0.0;
  bool valid = false;
  std::set<NodeIndex> precursors;
};

struct Rreq {
  NodeIndex origin = 0;
  std::uint32_t origin_seq = 0;
  std::uint32_t rreq_id = 0;
  NodeIndex dest = 0;
  std::uint32_t dest_seq = 0;
  bool unknown_seq = true;
  int hop_count = 0;
  int ttl = 16;
};

struct Rrep {
  NodeIndex origin = 0;  // node that asked for the route
  NodeIndex dest = 0;
  std::uint32_t dest_seq = 0;
  int hop_count = 0;
};

struct Rerr {
  std::vector<std::pair<NodeIndex, std::uint32_t>> unreachable;
};

/// A data packet in transit; `packet` indexes the simulator's records.
struct Data {
  std::uint64_t packet = 0;
  NodeIndex src = 0;
  NodeIndex dst = 0;
  int hops = 0;
};

using Message = std::variant<Rreq, Rrep, Rerr, Data>;

struct Broadcast {
  Message msg;
  bool jitter = false;  // rebroadcasts are desynchronized by the sender
};
struct Unicast {
  NodeIndex next_hop = 0;
  Message msg;
};
struct BufferData {
  Data packet;
};
struct DropData {
  Data packet;
  Disposition reason = Disposition::DroppedNoRoute;
};
struct DeliverData {
  Data packet;
};
struct ScheduleTimeout {
  NodeIndex dest = 0;
  int attempt = 0;
  double delay = 0.0;
};

using Action = std::variant<Broadcast, Unicast, BufferData, DropData, DeliverData, ScheduleTimeout>;

struct SeenRreq {
  double expiry = 0.0;
  int best_hops = 0;
};

struct AodvNodeState {
  explicit AodvNodeState(NodeIndex self_index = 0) : self(self_index) {}

  NodeIndex self;
  std::map<NodeIndex, RouteEntry> routes;
  std::uint32_t own_seq = 0;
  std::uint32_t rreq_id = 0;
  std::map<std::pair<NodeIndex, std::uint32_t>, SeenRreq> seen_rreq;
  double seen_sweep_at = 0.0;
  std::deque<Data> pending;
  std::map<NodeIndex, int> discovery;  // destination -> current attempt

  /// Valid, unexpired route to `dest`, if any.
  const RouteEntry* active_route(NodeIndex dest, double t) const;
};

/// Handles a message received from neighbor `from` at time `t`.
std::vector<Action> aodv_handle(AodvNodeState& state, NodeIndex from, const Message& msg, double t,
                                const AodvParams& params);

/// Originates a data packet: forward on an active route, else buffer it and
/// start a discovery unless one is already running.
std::vector<Action> aodv_send(AodvNodeState& state, const Data& packet, double t, const AodvParams& params);

/// Discovery for `dest` timed out on `attempt`. Retries with a doubled
/// timeout, or drops the buffered packets once the retries are spent.
std::vector<Action> aodv_timeout(AodvNodeState& state, NodeIndex dest, int attempt, double t,
                                 const AodvParams& params);

/// Unicast to `next_hop` went unacknowledged for good. Invalidates every
/// route through it and reports the loss to precursors. A packet originated
/// here is buffered for rediscovery; a forwarded one is dropped as `reason`.
std::vector<Action> aodv_link_failure(AodvNodeState& state, NodeIndex next_hop, const std::optional<Data>& packet,
                                      double t, const AodvParams& params,
                                      Disposition reason = Disposition::DroppedNoRoute);

}  // namespace hybrist::net
