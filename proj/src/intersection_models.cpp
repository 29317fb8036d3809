#include <cmath>

#include "hybrist/mobility.hpp"

namespace hybrist::mobility {

Decision ssm_decision(bool arrived_at_stop, double wait_elapsed, int queue_ahead, const MobilityConfig& cfg) {
  if (!arrived_at_stop || queue_ahead > 0) return Decision::Wait;
  return wait_elapsed >= cfg.ssm_stop_time ? Decision::Proceed : Decision::Wait;
}

double ptsm_decision(double p, double w, RngStream& rng) {
  // Two draws every call keep the stream position independent of the outcome.
  const double stop = rng.uniform();
  const double wait = rng.uniform(0.0, w);
  return stop < p ? wait : 0.0;
}

std::size_t tlm_phase(double t, const road::PhasePlan& plan) {
  if (!(plan.cycle > 0)) throw ValidationError("phase plan cycle must be > 0");
  double local = std::fmod(t - plan.offset, plan.cycle);
  if (local < 0) local += plan.cycle;
  for (std::size_t i = 0; i < plan.phases.size(); ++i)
    if (local >= plan.phases[i].start && local < plan.phases[i].end) return i;
  throw ValidationError("phase plan does not cover t mod cycle");
}

std::string_view to_string(Turn t) noexcept {
  switch (t) {
    case Turn::Left: return "left";
    case Turn::Right: return "right";
    case Turn::Straight: return "straight";
    case Turn::UTurn: return "uturn";
  }
  return "?";
}

Turn manhattan_turn(RngStream& rng, TurnOptions options) {
  const double left = options.left ? 0.25 : 0.0;
  const double right = options.right ? 0.25 : 0.0;
  const double straight = options.straight ? 0.5 : 0.0;
  const double total = left + right + straight;
  if (total == 0.0) throw Error("no turn option available");
  const double u = rng.uniform() * total;
  if (u < left) return Turn::Left;
  if (u < left + right) return Turn::Right;
  return Turn::Straight;
}

Turn classify_turn(const road::RoadNetwork& net, EdgeId in, EdgeId out) {
  const auto a = net.direction(in);
  const auto b = net.direction(out);
  const double cross = a.x * b.y - a.y * b.x;
  const double dot = a.x * b.x + a.y * b.y;
  if (dot < -0.7) return Turn::UTurn;
  if (cross > 0.3) return Turn::Left;
  if (cross < -0.3) return Turn::Right;
  return Turn::Straight;
}

Waypoint rwp_next(Vec2 /*current*/, const Area& area, const MobilityConfig& cfg, RngStream& rng) {
  Waypoint w;
  w.pos.x = rng.uniform(area.min.x, area.max.x);
  w.pos.y = rng.uniform(area.min.y, area.max.y);
  w.speed = rng.uniform(cfg.rwp_speed_min, cfg.rwp_speed_max);
  w.pause = cfg.rwp_pause;
  return w;
}

}  // namespace hybrist::mobility
