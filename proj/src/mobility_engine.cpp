#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <optional>
#include <variant>

#include "hybrist/mobility.hpp"

namespace hybrist::mobility {

namespace {

constexpr double kArrivalTolerance = 1.0;
constexpr int kPlacementAttempts = 200;
constexpr int kDestinationAttempts = 32;

// Per-vehicle bookkeeping the public VehicleState does not carry.
struct Runtime {
  explicit Runtime(RngStream stream) : rng(stream) {}

  RngStream rng;
  bool cleared = false;               // may cross the stop line ending the current edge
  std::optional<double> ptsm_wait;    // drawn once per approach
  double wait_start = -1.0;
  std::size_t next_station = 0;       // index into stations_on(edge)
};

struct QueuedAtNode {
  std::uint32_t vehicle;
  double head_since;
};

bool is_metrobus(std::size_t i, double fraction) {
  const auto a = std::floor(static_cast<double>(i) * fraction);
  const auto b = std::floor(static_cast<double>(i + 1) * fraction);
  return b > a;
}

class Engine {
 public:
  Engine(const road::RoadNetwork& net, const MobilityConfig& cfg) : net_(net), cfg_(cfg) {
    lanes_.resize(net.edges.size());
    for (std::size_t e = 0; e < net.edges.size(); ++e)
      lanes_[e].resize(static_cast<std::size_t>(std::max(1, net.edges[e].lane_count)));
    node_queue_.resize(net.nodes.size());
    for (auto cls : {VehicleClass::Metrobus, VehicleClass::Car}) {
      auto& dests = destinations_[static_cast<std::size_t>(cls)];
      auto& origins = origins_[static_cast<std::size_t>(cls)];
      for (std::size_t i = 0; i < net.edges.size(); ++i) {
        if (!permits(net.edges[i].allowed, cls)) continue;
        origins.push_back(static_cast<EdgeId>(i));
        dests.push_back(net.edges[i].to);
      }
      std::sort(dests.begin(), dests.end());
      dests.erase(std::unique(dests.begin(), dests.end()), dests.end());
    }
    lateral_base_.assign(net.edges.size(), 0.0);
    if (net.kind == ModelKind::HMM) {
      int median_lanes = 0;
      for (const auto& e : net.edges)
        if (!permits(e.allowed, VehicleClass::Car)) median_lanes = std::max(median_lanes, e.lane_count);
      for (std::size_t i = 0; i < net.edges.size(); ++i)
        if (!permits(net.edges[i].allowed, VehicleClass::Metrobus))
          lateral_base_[i] = median_lanes * cfg.lane_width + 1.0;
    }
  }

  MobilityTrace run() {
    inject();
    MobilityTrace trace;
    trace.config = cfg_;
    trace.kind = net_.kind;
    trace.vehicle_count = vehicles_.size();
    trace.dt = cfg_.dt;
    for (const auto& v : vehicles_) trace.classes.push_back(v.cls);

    const auto steps = static_cast<std::size_t>(std::floor(cfg_.duration / cfg_.dt + 1e-9));
    trace.step_count = steps + 1;
    trace.records.reserve(trace.step_count * vehicles_.size());
    record(trace, 0.0);
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = static_cast<double>(k) * cfg_.dt;
      for (std::size_t i = 0; i < vehicles_.size(); ++i) update(i, t, trace.releases);
      record(trace, static_cast<double>(k + 1) * cfg_.dt);
    }
    return trace;
  }

 private:
  std::deque<std::uint32_t>& lane_of(const VehicleState& v) {
    return lanes_[index(v.edge)][static_cast<std::size_t>(v.lane)];
  }

  void inject() {
    const auto n = static_cast<std::size_t>(cfg_.vehicle_count);
    const bool has_metrobus = !origins_[static_cast<std::size_t>(VehicleClass::Metrobus)].empty();
    vehicles_.reserve(n);
    rt_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      VehicleState v;
      v.id = static_cast<VehicleId>(i);
      v.cls = net_.kind == ModelKind::HMM && has_metrobus && is_metrobus(i, cfg_.metrobus_fraction)
                  ? VehicleClass::Metrobus
                  : VehicleClass::Car;
      if (origins_[static_cast<std::size_t>(v.cls)].empty())
        throw NoRoute(std::string("no edge open to class ") + std::string(to_string(v.cls)));
      vehicles_.push_back(std::move(v));
      rt_.emplace_back(RngStream(cfg_.seed, i));
      place(i);
    }
  }

  /// Puts vehicle `i` on a random free spot of a class-permitted edge.
  void place(std::size_t i) {
    auto& v = vehicles_[i];
    auto& r = rt_[i];
    const auto& origins = origins_[static_cast<std::size_t>(v.cls)];
    const double spacing = cfg_.vehicle_length + cfg_.min_gap;
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      const auto e = origins[r.rng.below(origins.size())];
      const auto& edge = net_.edge(e);
      const int lane = static_cast<int>(r.rng.below(static_cast<std::uint64_t>(edge.lane_count)));
      const double pos = r.rng.uniform(cfg_.vehicle_length, std::max(cfg_.vehicle_length, edge.length - spacing));
      auto& dq = lanes_[index(e)][static_cast<std::size_t>(lane)];
      const bool free = std::none_of(dq.begin(), dq.end(), [&](std::uint32_t o) {
        return std::abs(vehicles_[o].pos - pos) < spacing;
      });
      if (!free) continue;

      v.edge = e;
      v.lane = lane;
      v.pos = pos;
      v.speed = 0.0;
      v.mode = Mode::Driving;
      v.mode_time = 0.0;
      v.route.clear();
      reset_edge_state(i);
      const auto at = std::find_if(dq.begin(), dq.end(), [&](std::uint32_t o) { return vehicles_[o].pos < pos; });
      dq.insert(at, static_cast<std::uint32_t>(i));
      extend_route(i);
      return;
    }
    throw Error("no free spot to place vehicle " + std::to_string(i));
  }

  void reset_edge_state(std::size_t i) {
    auto& v = vehicles_[i];
    auto& r = rt_[i];
    r.cleared = false;
    r.ptsm_wait.reset();
    r.wait_start = -1.0;
    const auto& list = net_.stations_on(v.edge);
    r.next_station = 0;
    while (r.next_station < list.size() &&
           net_.stations[list[r.next_station]].offset < v.pos - kArrivalTolerance)
      ++r.next_station;
  }

  /// Gives a vehicle with an empty route its next edges. Leaves the route
  /// empty at dead ends.
  void extend_route(std::size_t i) {
    auto& v = vehicles_[i];
    auto& r = rt_[i];
    const auto here = net_.edge(v.edge).to;
    if (cfg_.turn_model == TurnModel::Manhattan) {
      std::vector<std::pair<Turn, EdgeId>> options;
      std::optional<EdgeId> uturn;
      for (auto e : net_.out_edges(here)) {
        if (!permits(net_.edge(e).allowed, v.cls)) continue;
        const auto turn = classify_turn(net_, v.edge, e);
        if (turn == Turn::UTurn)
          uturn = e;
        else
          options.emplace_back(turn, e);
      }
      if (options.empty()) {
        if (uturn) v.route = {*uturn};
        return;
      }
      TurnOptions avail{false, false, false};
      for (auto [t, e] : options) {
        avail.left |= t == Turn::Left;
        avail.right |= t == Turn::Right;
        avail.straight |= t == Turn::Straight;
      }
      const auto chosen = manhattan_turn(r.rng, avail);
      for (auto [t, e] : options) {
        if (t == chosen) {
          v.route = {e};
          return;
        }
      }
      return;
    }

    const auto& dests = destinations_[static_cast<std::size_t>(v.cls)];
    for (int attempt = 0; attempt < kDestinationAttempts; ++attempt) {
      const auto dest = dests[r.rng.below(dests.size())];
      if (dest == here) continue;
      try {
        v.route = road::shortest_route(net_, here, dest, v.cls);
        return;
      } catch (const NoRoute&) {
      }
    }
  }

  /// Rear bumper of the last vehicle in the lane `v` enters next, if any.
  std::optional<Leader> leader_of(std::size_t i) {
    const auto& v = vehicles_[i];
    auto& dq = lane_of(v);
    const auto it = std::find(dq.begin(), dq.end(), static_cast<std::uint32_t>(i));
    if (it != dq.begin()) {
      const auto& l = vehicles_[*std::prev(it)];
      const double anchor = l.pos - cfg_.vehicle_length;
      return Leader{anchor - v.pos, l.speed, ObstacleKind::Vehicle, 0, anchor};
    }
    if (v.route.empty()) return std::nullopt;
    const auto next = v.route.front();
    const auto lane = static_cast<std::size_t>(std::min(v.lane, net_.edge(next).lane_count - 1));
    const auto& ndq = lanes_[index(next)][lane];
    if (ndq.empty()) return std::nullopt;
    const auto& l = vehicles_[ndq.back()];
    const double anchor = l.pos - cfg_.vehicle_length;
    return Leader{net_.edge(v.edge).length - v.pos + anchor, l.speed, ObstacleKind::Vehicle, 1, anchor};
  }

  bool is_lane_head(std::size_t i) {
    const auto& dq = lane_of(vehicles_[i]);
    return !dq.empty() && dq.front() == i;
  }

  static std::optional<std::size_t> phase_of(const road::PhasePlan& plan, EdgeId approach) {
    for (std::size_t p = 0; p < plan.phases.size(); ++p) {
      const auto& a = plan.phases[p].approaches;
      if (std::find(a.begin(), a.end(), approach) != a.end()) return p;
    }
    return std::nullopt;
  }

  /// No vehicle on a green approach is within 2·min_gap of the node.
  bool conflict_area_clear(const road::PhasePlan& plan, std::size_t green) {
    for (auto e : plan.phases[green].approaches) {
      const double len = net_.edge(e).length;
      for (const auto& dq : lanes_[index(e)])
        if (!dq.empty() && len - vehicles_[dq.front()].pos <= 2 * cfg_.min_gap) return false;
    }
    return true;
  }

  /// Whether vehicle `i` may cross the stop line at time `t`.
  bool control_permits(std::size_t i, const road::Intersection& ix, double t) {
    auto& v = vehicles_[i];
    auto& r = rt_[i];
    const double dist = net_.edge(v.edge).length - v.pos;
    const bool arrived = dist <= kArrivalTolerance;
    const bool head = is_lane_head(i);
    const double zone = v.speed * v.speed / (2 * cfg_.decel) + v.speed * cfg_.dt + cfg_.min_gap + kArrivalTolerance;

    if (const auto* tl = std::get_if<road::TrafficLightControl>(&ix.control)) {
      const auto green = tlm_phase(t, tl->plan);
      const auto own = phase_of(tl->plan, v.edge);
      if (!own || *own == green) return true;
      if (!head || !arrived || v.route.empty()) return false;
      return classify_turn(net_, v.edge, v.route.front()) == Turn::Right && conflict_area_clear(tl->plan, green);
    }
    if (r.cleared) return true;
    if (!head) return false;

    if (const auto* ps = std::get_if<road::ProbabilisticSignControl>(&ix.control)) {
      if (dist > zone) return false;
      if (!r.ptsm_wait) r.ptsm_wait = ptsm_decision(ps->p, ps->w, r.rng);
      if (*r.ptsm_wait == 0.0) return r.cleared = true;
      if (!arrived) return false;
      if (r.wait_start < 0) r.wait_start = t;
      return r.cleared = t - r.wait_start >= *r.ptsm_wait;
    }

    // Stop sign: one FIFO across all approaches of the node.
    if (!arrived) return false;
    auto& q = node_queue_[index(ix.node)];
    auto it = std::find_if(q.begin(), q.end(), [&](const QueuedAtNode& e) { return e.vehicle == i; });
    if (it == q.end()) {
      q.push_back({static_cast<std::uint32_t>(i), t});
      it = std::prev(q.end());
    }
    const auto ahead = static_cast<int>(it - q.begin());
    if (ssm_decision(true, t - it->head_since, ahead, cfg_) == Decision::Wait) return false;
    q.pop_front();
    if (!q.empty()) q.front().head_since = std::max(q.front().head_since, t);
    return r.cleared = true;
  }

  void update(std::size_t i, double t, std::vector<ControlRelease>& releases) {
    auto& v = vehicles_[i];
    auto& r = rt_[i];

    if (v.mode == Mode::DwellingAtStation) {
      if (t < v.mode_time) return;
      v.mode = Mode::Driving;
      ++r.next_station;
    }
    if (v.route.empty()) extend_route(i);

    const auto& edge = net_.edge(v.edge);
    const auto& stations = net_.stations_on(v.edge);
    while (r.next_station < stations.size() &&
           net_.stations[stations[r.next_station]].serves != v.cls)
      ++r.next_station;
    if (r.next_station < stations.size()) {
      const auto& st = net_.stations[stations[r.next_station]];
      if (st.offset - v.pos <= kArrivalTolerance) {
        v.mode = Mode::DwellingAtStation;
        v.mode_time = t + r.rng.uniform(st.dwell_min, st.dwell_max);
        v.speed = 0.0;
        return;
      }
    }

    std::vector<Leader> obstacles;
    if (auto l = leader_of(i)) obstacles.push_back(*l);
    if (r.next_station < stations.size()) {
      const double at = net_.stations[stations[r.next_station]].offset;
      obstacles.push_back({at - v.pos, 0.0, ObstacleKind::StopLine, 0, at});
    }

    const auto* ix = net_.control_at(edge.to);
    bool may_cross = !v.route.empty();
    if (may_cross && ix) may_cross = control_permits(i, *ix, t);
    if (!may_cross) obstacles.push_back({edge.length - v.pos, 0.0, ObstacleKind::StopLine, 0, edge.length});

    const bool waiting = ix && !may_cross && edge.length - v.pos <= kArrivalTolerance;
    if (waiting && v.mode != Mode::QueuedAtControl) {
      v.mode = Mode::QueuedAtControl;
      v.mode_time = t;
    } else if (!waiting) {
      v.mode = Mode::Driving;
    }

    const auto old_edge = v.edge;
    const auto old_lane = v.lane;
    auto next = step_vehicle(net_, v, obstacles, cfg_, r.rng);
    if (next.edge == old_edge) {
      v.pos = next.pos;
      v.speed = next.speed;
    } else {
      auto& from = lanes_[index(old_edge)][static_cast<std::size_t>(old_lane)];
      from.erase(std::find(from.begin(), from.end(), static_cast<std::uint32_t>(i)));
      if (ix) {
        ControlRelease rel{t, ix->node, old_edge, v.id, classify_turn(net_, old_edge, next.edge), 0, 0, false};
        if (const auto* tl = std::get_if<road::TrafficLightControl>(&ix->control)) {
          rel.signalized = true;
          rel.green_phase = tlm_phase(t, tl->plan);
          rel.approach_phase = phase_of(tl->plan, old_edge).value_or(rel.green_phase);
        }
        releases.push_back(rel);
      }
      v = std::move(next);
      v.mode = Mode::Driving;
      lane_of(v).push_back(static_cast<std::uint32_t>(i));
      reset_edge_state(i);
    }

    // Dead end: respawn once the end of the edge is reached.
    if (v.route.empty() && net_.edge(v.edge).length - v.pos <= kArrivalTolerance) {
      extend_route(i);
      if (v.route.empty()) {
        auto& dq = lane_of(v);
        dq.erase(std::find(dq.begin(), dq.end(), static_cast<std::uint32_t>(i)));
        place(i);
      }
    }
  }

  void record(MobilityTrace& trace, double t) const {
    for (const auto& v : vehicles_) {
      const auto& e = net_.edge(v.edge);
      const auto from = net_.node(e.from).pos;
      const auto dir = net_.direction(v.edge);
      const Vec2 right{dir.y, -dir.x};
      const double lateral = lateral_base_[index(v.edge)] + (v.lane + 0.5) * cfg_.lane_width;
      const auto p = from + dir * v.pos + right * lateral;
      trace.records.push_back({t, v.id, p.x, p.y, v.speed, v.edge, v.lane, v.pos});
    }
  }

  const road::RoadNetwork& net_;
  MobilityConfig cfg_;
  std::vector<VehicleState> vehicles_;
  std::vector<Runtime> rt_;
  // Vehicle indices per (edge, lane), front of the lane first.
  std::vector<std::vector<std::deque<std::uint32_t>>> lanes_;
  std::vector<std::deque<QueuedAtNode>> node_queue_;
  std::array<std::vector<EdgeId>, 2> origins_;
  std::array<std::vector<NodeId>, 2> destinations_;
  std::vector<double> lateral_base_;
};

}  // namespace

MobilityTrace run_mobility(const road::RoadNetwork& net, const MobilityConfig& cfg) {
  cfg.validate();
  return Engine(net, cfg).run();
}

MobilityTrace run_random_waypoint(const Area& area, const MobilityConfig& cfg) {
  cfg.validate();
  struct Walker {
    Vec2 pos;
    Waypoint target;
    double paused_until = 0.0;
  };
  const auto n = static_cast<std::size_t>(cfg.vehicle_count);
  std::vector<RngStream> rngs;
  std::vector<Walker> walkers;
  for (std::size_t i = 0; i < n; ++i) {
    rngs.emplace_back(cfg.seed, i);
    Walker w;
    w.pos = {rngs[i].uniform(area.min.x, area.max.x), rngs[i].uniform(area.min.y, area.max.y)};
    w.target = rwp_next(w.pos, area, cfg, rngs[i]);
    walkers.push_back(w);
  }

  MobilityTrace trace;
  trace.config = cfg;
  trace.vehicle_count = n;
  trace.dt = cfg.dt;
  trace.classes.assign(n, VehicleClass::Car);
  const auto steps = static_cast<std::size_t>(std::floor(cfg.duration / cfg.dt + 1e-9));
  trace.step_count = steps + 1;

  auto record = [&](double t) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& w = walkers[i];
      const double speed = t < w.paused_until ? 0.0 : w.target.speed;
      trace.records.push_back({t, static_cast<VehicleId>(i), w.pos.x, w.pos.y, speed});
    }
  };
  record(0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t0 = static_cast<double>(k) * cfg.dt;
    const double t1 = t0 + cfg.dt;
    for (std::size_t i = 0; i < n; ++i) {
      auto& w = walkers[i];
      double t = std::max(t0, w.paused_until);
      // A collapsed area yields zero-length legs; cap the legs per step.
      for (int legs = 0; t < t1 && legs < 64; ++legs) {
        if (w.target.speed <= 0.0) break;  // a zero-speed leg never finishes
        const double dist = distance(w.pos, w.target.pos);
        const double reach = t + dist / w.target.speed;
        if (reach > t1) {
          w.pos = w.pos + (w.target.pos - w.pos) * ((t1 - t) * w.target.speed / dist);
          break;
        }
        w.pos = w.target.pos;
        w.paused_until = reach + w.target.pause;
        t = w.paused_until;
        w.target = rwp_next(w.pos, area, cfg, rngs[i]);
      }
    }
    record(t1);
  }
  return trace;
}

}  // namespace hybrist::mobility
