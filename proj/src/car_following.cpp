#include <algorithm>
#include <limits>

#include "hybrist/mobility.hpp"

namespace hybrist::mobility {

void MobilityConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(what);
  };
  require(dt > 0, "dt must be > 0");
  require(accel > 0 && decel > 0, "accel and decel must be > 0");
  require(tau >= dt, "tau must be >= dt");
  require(sigma >= 0 && sigma <= 1, "sigma must lie in [0,1]");
  require(min_gap >= 0, "min_gap must be >= 0");
  require(vehicle_length > 0, "vehicle_length must be > 0");
  require(lane_width > 0, "lane_width must be > 0");
  require(rwp_speed_min >= 0 && rwp_speed_min <= rwp_speed_max, "rwp speed range must satisfy 0 <= min <= max");
  require(rwp_pause >= 0, "rwp_pause must be >= 0");
  require(ssm_stop_time >= 0, "ssm_stop_time must be >= 0");
  require(duration > 0, "duration must be > 0");
  require(vehicle_count > 0, "vehicle_count must be > 0");
  require(metrobus_fraction >= 0 && metrobus_fraction <= 1, "metrobus_fraction must lie in [0,1]");
}

double safe_speed(double leader_speed, double gap, double follower_speed, const MobilityConfig& cfg) {
  const double mean_speed = (follower_speed + leader_speed) / 2.0;
  const double v = leader_speed + (gap - leader_speed * cfg.tau) / (cfg.tau + mean_speed / cfg.decel);
  return std::max(0.0, v);
}

VehicleState step_vehicle(const road::RoadNetwork& net, const VehicleState& v, const std::optional<Leader>& leader,
                          const MobilityConfig& cfg, RngStream& rng) {
  if (leader) return step_vehicle(net, v, std::span<const Leader>(&*leader, 1), cfg, rng);
  return step_vehicle(net, v, std::span<const Leader>{}, cfg, rng);
}

VehicleState step_vehicle(const road::RoadNetwork& net, const VehicleState& v, std::span<const Leader> obstacles,
                          const MobilityConfig& cfg, RngStream& rng) {
  const auto& edge = net.edge(v.edge);
  double desired = std::min(v.speed + cfg.accel * cfg.dt, edge.speed_limit);
  double max_advance = std::numeric_limits<double>::infinity();
  for (const auto& ob : obstacles) {
    const double gap = ob.gap - (ob.kind == ObstacleKind::Vehicle ? cfg.min_gap : 0.0);
    desired = std::min(desired, safe_speed(ob.speed, gap, v.speed, cfg));
    max_advance = std::min(max_advance, std::max(0.0, ob.gap));
  }
  // Entering a slower edge this step: arrive at its limit.
  if (v.pos + desired * cfg.dt > edge.length && !v.route.empty())
    desired = std::min(desired, net.edge(v.route.front()).speed_limit);

  const double dawdle = cfg.sigma * cfg.accel * cfg.dt * rng.uniform();
  double speed = std::max(0.0, desired - dawdle);
  double advance = speed * cfg.dt;
  if (advance > max_advance) {
    advance = max_advance;
    speed = advance / cfg.dt;
  }

  VehicleState next = v;
  next.speed = speed;
  next.pos = v.pos + advance;
  std::size_t edges_moved = 0;
  while (next.pos > net.edge(next.edge).length) {
    if (next.route.empty())
      throw RouteExhausted("vehicle " + std::to_string(index(v.id)) + " ran past the end of its route");
    next.pos -= net.edge(next.edge).length;
    next.edge = next.route.front();
    next.route.erase(next.route.begin());
    next.lane = std::min(next.lane, net.edge(next.edge).lane_count - 1);
    ++edges_moved;
  }
  // Rounding in the edge-change arithmetic must not push past an obstacle.
  for (const auto& ob : obstacles)
    if (edges_moved == ob.edges_ahead) next.pos = std::min(next.pos, ob.anchor);
  return next;
}

}  // namespace hybrist::mobility
