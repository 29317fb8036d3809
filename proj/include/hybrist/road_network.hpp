#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hybrist/common.hpp"

namespace hybrist::road {

/// How the nodes of an urban grid are controlled.
enum class UrbanControl : std::uint8_t { TrafficLight, StopSign, Probabilistic, Mixed };

UrbanControl parse_urban_control(std::string_view text);
std::string_view to_string(UrbanControl c) noexcept;

/// Dimensions and per-road-type attributes of the three topologies.
/// Lane and stop counts are per direction of travel.
struct TopologyParams {
  double corridor_length = 6380.0;
  double corridor_width = 1934.0;

  int metrobus_lanes_per_direction = 1;
  double metrobus_speed = 33.33;
  bool metrobus_bidirectional = true;
  int main_road_lanes_per_direction = 3;
  double main_road_speed = 13.89;
  int hwm_lanes = 4;
  double hwm_speed = 33.3;
  int umm_lanes = 4;
  double umm_speed = 13.89;

  int metrobus_stations = 5;
  int main_road_stops = 13;
  int hwm_stops = 3;
  int umm_stops = 15;

  int umm_grid_rows = 4;
  int umm_grid_cols = 8;
  /// Block edge length of the urban grid; 0 spreads the grid over the
  /// corridor length and `umm_grid_width`.
  double umm_block_length = 250.0;
  /// Width of the band of streets centred on the corridor axis; 0 uses the
  /// full corridor width.
  double umm_grid_width = 0.0;
  UrbanControl umm_control = UrbanControl::Mixed;

  double ptsm_stop_probability = 0.5;
  double ptsm_max_wait = 10.0;
  double tlm_green_time = 30.0;

  double metrobus_dwell_min = 20.0;
  double metrobus_dwell_max = 40.0;
  double stop_dwell_min = 5.0;
  double stop_dwell_max = 15.0;

  /// Throws ValidationError naming the first broken invariant.
  void validate() const;
};

struct Node {
  std::string id;
  Vec2 pos;
};

struct Edge {
  std::string id;
  NodeId from{};
  NodeId to{};
  double length = 0.0;
  int lane_count = 1;
  double speed_limit = 0.0;
  int priority = 0;
  ClassSet allowed = ClassSet::Both;
};

/// One green window of a signal plan. `end` is exclusive.
struct SignalPhase {
  double start = 0.0;
  double end = 0.0;
  std::vector<EdgeId> approaches;
};

struct PhasePlan {
  double cycle = 0.0;
  double offset = 0.0;
  std::vector<SignalPhase> phases;
};

struct StopSignControl {};

struct ProbabilisticSignControl {
  double p = 0.5;
  double w = 10.0;
};

struct TrafficLightControl {
  PhasePlan plan;
};

using ControlKind = std::variant<StopSignControl, ProbabilisticSignControl, TrafficLightControl>;

struct Intersection {
  NodeId node{};
  ControlKind control;
  /// Incoming edges, ordered by edge id.
  std::vector<EdgeId> approaches;
};

struct StopStation {
  EdgeId edge{};
  double offset = 0.0;
  double dwell_min = 0.0;
  double dwell_max = 0.0;
  VehicleClass serves = VehicleClass::Car;
};

/// Directed road graph plus the traffic controls and stations on it.
/// Immutable once built; lookup indices are rebuilt by `finalize()`.
class RoadNetwork {
 public:
  ModelKind kind = ModelKind::HWM;
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<Intersection> intersections;
  std::vector<StopStation> stations;

  /// Recomputes adjacency, id lookups and per-edge station lists.
  void finalize();

  const Node& node(NodeId id) const { return nodes.at(index(id)); }
  const Edge& edge(EdgeId id) const { return edges.at(index(id)); }

  std::optional<NodeId> find_node(std::string_view id) const;
  std::optional<EdgeId> find_edge(std::string_view id) const;

  const std::vector<EdgeId>& out_edges(NodeId n) const { return out_.at(index(n)); }
  const std::vector<EdgeId>& in_edges(NodeId n) const { return in_.at(index(n)); }
  /// Stations on `e`, sorted by offset.
  const std::vector<std::size_t>& stations_on(EdgeId e) const { return stations_by_edge_.at(index(e)); }
  const Intersection* control_at(NodeId n) const;
  /// Rank of each edge in lexicographic order of its id.
  std::uint32_t id_rank(EdgeId e) const { return id_rank_.at(index(e)); }

  /// Unit vector of travel along `e`.
  Vec2 direction(EdgeId e) const;

 private:
  std::vector<std::vector<EdgeId>> out_;
  std::vector<std::vector<EdgeId>> in_;
  std::vector<std::vector<std::size_t>> stations_by_edge_;
  std::vector<int> control_index_;
  std::vector<std::uint32_t> id_rank_;
};

RoadNetwork build_topology(const TopologyParams& params, ModelKind kind);

enum class ViolationKind : std::uint8_t {
  DanglingEndpoint,
  NonPositiveLength,
  BadLaneCount,
  NonPositiveSpeed,
  EmptyClassSet,
  DuplicateId,
  MissingStationEdge,
  OffsetOutOfRange,
  BadDwellRange,
  BadControl,
  Disconnected,
};

std::string_view to_string(ViolationKind kind) noexcept;

struct Violation {
  ViolationKind kind;
  std::string subject;  // edge, node or station identifier
  std::string detail;
};

/// Empty iff every network invariant holds.
std::vector<Violation> validate_network(const RoadNetwork& net);

using Route = std::vector<EdgeId>;

/// Free-flow travel time of an edge, the routing cost.
inline double travel_time(const Edge& e) { return e.length / e.speed_limit; }

/// Minimum travel-time path restricted to edges open to `cls`; equal-cost
/// paths are ordered by their edge-id sequence. Throws NoRoute.
Route shortest_route(const RoadNetwork& net, NodeId origin, NodeId dest, VehicleClass cls);

double route_cost(const RoadNetwork& net, const Route& route);

/// Text form: one `MODEL`, `NODE`, `EDGE`, `STATION` or `CONTROL` record per line.
std::string serialize_network(const RoadNetwork& net);
RoadNetwork parse_network(std::string_view text);

}  // namespace hybrist::road
