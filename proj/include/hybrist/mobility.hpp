#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hybrist/common.hpp"
#include "hybrist/rng.hpp"
#include "hybrist/road_network.hpp"

namespace hybrist::mobility {

enum class TurnModel : std::uint8_t { ShortestPath, Manhattan };

/// Krauss car-following parameters plus run size and seed.
struct MobilityConfig {
  double dt = 1.0;
  double accel = 2.6;
  double decel = 4.5;
  double tau = 1.0;
  double sigma = 0.5;
  double min_gap = 2.5;
  double vehicle_length = 5.0;
  double lane_width = 3.5;

  double rwp_pause = 0.0;
  double rwp_speed_min = 0.0;
  double rwp_speed_max = 20.0;

  double ssm_stop_time = 2.0;
  double duration = 1000.0;
  int vehicle_count = 160;
  std::uint64_t seed = 1;

  /// Share of HMM vehicles injected as metrobuses.
  double metrobus_fraction = 0.1;
  TurnModel turn_model = TurnModel::ShortestPath;

  void validate() const;
};

enum class Mode : std::uint8_t { Driving, QueuedAtControl, DwellingAtStation, Paused };

struct VehicleState {
  VehicleId id{};
  VehicleClass cls = VehicleClass::Car;
  EdgeId edge{};
  int lane = 0;
  double pos = 0.0;    // front bumper, meters from the edge start
  double speed = 0.0;
  road::Route route;   // edges after `edge`
  Mode mode = Mode::Driving;
  double mode_time = 0.0;  // `since` for queued, `until` for dwelling/paused
};

enum class ObstacleKind : std::uint8_t { Vehicle, StopLine };

/// Whatever the vehicle must not run into: a leading vehicle or a stop line.
/// `gap` is measured along the route from the front bumper to the obstacle.
struct Leader {
  double gap = 0.0;
  double speed = 0.0;
  ObstacleKind kind = ObstacleKind::Vehicle;
  /// Number of edges past the current one where the obstacle sits, and its
  /// position on that edge (leader's rear bumper or the stop line).
  std::size_t edges_ahead = 0;
  double anchor = 0.0;
};

/// Krauss safe speed: the fastest speed that still lets the follower stop
/// behind a leader braking at `decel`. Never negative.
double safe_speed(double leader_speed, double gap, double follower_speed, const MobilityConfig& cfg);

/// One car-following update: accelerate, cap by safe speed and limit, dawdle,
/// then advance along the route. A vehicle never advances past `leader`.
/// Throws RouteExhausted when the vehicle would leave its final edge.
VehicleState step_vehicle(const road::RoadNetwork& net, const VehicleState& v, const std::optional<Leader>& leader,
                          const MobilityConfig& cfg, RngStream& rng);

/// Same update against several obstacles: the speed is capped by the most
/// restrictive safe speed and the advance by the nearest obstacle.
VehicleState step_vehicle(const road::RoadNetwork& net, const VehicleState& v, std::span<const Leader> obstacles,
                          const MobilityConfig& cfg, RngStream& rng);

enum class Decision : std::uint8_t { Proceed, Wait };

/// Stop-sign rule: FIFO service, each vehicle stops for `ssm_stop_time`.
Decision ssm_decision(bool arrived_at_stop, double wait_elapsed, int queue_ahead, const MobilityConfig& cfg);

/// Probabilistic traffic sign: wait U(0, w) with probability p, else 0.
double ptsm_decision(double p, double w, RngStream& rng);

/// Index of the phase whose green window contains `t` modulo the cycle.
std::size_t tlm_phase(double t, const road::PhasePlan& plan);

enum class Turn : std::uint8_t { Left, Right, Straight, UTurn };

std::string_view to_string(Turn t) noexcept;

struct TurnOptions {
  bool left = true;
  bool right = true;
  bool straight = true;
};

/// Manhattan grid choice: left 0.25, right 0.25, straight 0.5, renormalized
/// over the available options. Throws Error if none is available.
Turn manhattan_turn(RngStream& rng, TurnOptions options = {});

/// Geometric turn from `in` onto `out` (right-hand traffic).
Turn classify_turn(const road::RoadNetwork& net, EdgeId in, EdgeId out);

struct Area {
  Vec2 min;
  Vec2 max;
};

struct Waypoint {
  Vec2 pos;
  double speed = 0.0;
  double pause = 0.0;
};

/// Random waypoint: next destination uniform over `area`, speed uniform in
/// [rwp_speed_min, rwp_speed_max], pause `rwp_pause`.
Waypoint rwp_next(Vec2 current, const Area& area, const MobilityConfig& cfg, RngStream& rng);

inline constexpr EdgeId kNoEdge = static_cast<EdgeId>(0xffffffffu);

struct TraceRecord {
  double time = 0.0;
  VehicleId vehicle{};
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;
  // Road placement; `edge == kNoEdge` for free-space or parsed traces.
  EdgeId edge = kNoEdge;
  int lane = 0;
  double pos = 0.0;
};

/// A vehicle crossing the stop line of a controlled node.
struct ControlRelease {
  double time = 0.0;
  NodeId node{};
  EdgeId approach{};
  VehicleId vehicle{};
  Turn turn = Turn::Straight;
  /// Signalized nodes only: phase green at the decision time and the
  /// phase owning the approach.
  std::size_t green_phase = 0;
  std::size_t approach_phase = 0;
  bool signalized = false;
};

/// Positions of every vehicle on a regular time grid, sorted by (time, vehicle).
struct MobilityTrace {
  std::vector<TraceRecord> records;
  MobilityConfig config;
  std::optional<ModelKind> kind;
  std::vector<VehicleClass> classes;  // per vehicle; empty when unknown
  std::vector<ControlRelease> releases;
  std::size_t vehicle_count = 0;
  std::size_t step_count = 0;  // number of sample times
  double start_time = 0.0;
  double dt = 1.0;

  double end_time() const { return start_time + dt * static_cast<double>(step_count == 0 ? 0 : step_count - 1); }
  const TraceRecord& at(std::size_t step, std::size_t vehicle) const {
    return records[step * vehicle_count + vehicle];
  }
};

/// Steps every vehicle through `net` until `cfg.duration`. Pure in (net, cfg).
MobilityTrace run_mobility(const road::RoadNetwork& net, const MobilityConfig& cfg);

/// Free-space random waypoint trace over `area`.
MobilityTrace run_random_waypoint(const Area& area, const MobilityConfig& cfg);

enum class TraceFormat : std::uint8_t { Ns2Movement, NativeCsv };

std::string export_trace(const MobilityTrace& trace, TraceFormat format);

/// Rebuilds a regular trace from either export format. Ns2 movement lines
/// carry no arrival time for their final destination; it is placed one
/// sampling interval (the spacing of the setdest commands) after the last
/// command, or at distance/speed when a vehicle has a single command.
MobilityTrace parse_trace(std::string_view text, TraceFormat format);

}  // namespace hybrist::mobility
