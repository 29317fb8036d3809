#pragma once

// Independent reference implementations used to check the library. None of
// these call into the code under test except for data types.

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "hybrist/mobility.hpp"
#include "hybrist/network_sim.hpp"
#include "hybrist/rng.hpp"
#include "hybrist/road_network.hpp"

namespace oracle {

using namespace hybrist;

struct PathChoice {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<std::uint32_t> ranks;
  road::Route route;
};

/// Best simple path by exhaustive DFS: minimum summed travel time, ties
/// broken by the lexicographically smallest id-rank sequence.
inline std::optional<PathChoice> brute_force_route(const road::RoadNetwork& net, NodeId origin, NodeId dest,
                                                   VehicleClass cls) {
  std::optional<PathChoice> best;
  std::vector<bool> on_path(net.nodes.size(), false);
  PathChoice cur{0.0, {}, {}};
  std::function<void(NodeId)> dfs = [&](NodeId u) {
    if (u == dest) {
      const bool wins = !best || cur.cost < best->cost ||
                        (cur.cost == best->cost && std::lexicographical_compare(cur.ranks.begin(), cur.ranks.end(),
                                                                                best->ranks.begin(), best->ranks.end()));
      if (wins) best = cur;
      return;
    }
    on_path[index(u)] = true;
    for (std::size_t i = 0; i < net.edges.size(); ++i) {
      const auto& e = net.edges[i];
      if (e.from != u || on_path[index(e.to)] || !permits(e.allowed, cls)) continue;
      const auto id = static_cast<EdgeId>(i);
      const double saved = cur.cost;
      cur.cost += e.length / e.speed_limit;
      cur.ranks.push_back(net.id_rank(id));
      cur.route.push_back(id);
      dfs(e.to);
      cur.cost = saved;
      cur.ranks.pop_back();
      cur.route.pop_back();
    }
    on_path[index(u)] = false;
  };
  if (origin == dest) return PathChoice{0.0, {}, {}};
  dfs(origin);
  return best;
}

/// Random directed graph on `n` nodes with random lengths, speeds and class
/// sets. Edge ids are shuffled so id order differs from insertion order.
inline road::RoadNetwork random_graph(RngStream& rng, int n, double density) {
  road::RoadNetwork net;
  for (int i = 0; i < n; ++i) net.nodes.push_back({"n" + std::to_string(i), {rng.uniform(0, 100), rng.uniform(0, 100)}});
  int k = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (a == b || !rng.bernoulli(density)) continue;
      road::Edge e;
      e.id = "e" + std::to_string(rng.below(1000)) + "_" + std::to_string(k++);
      e.from = static_cast<NodeId>(a);
      e.to = static_cast<NodeId>(b);
      // Integer lengths and a few speeds make exact cost ties common.
      e.length = static_cast<double>(1 + rng.below(4)) * 10.0;
      e.speed_limit = rng.bernoulli(0.5) ? 10.0 : 5.0;
      const auto c = rng.below(4);
      e.allowed = c == 0 ? ClassSet::Metrobus : c == 1 ? ClassSet::Car : ClassSet::Both;
      net.edges.push_back(e);
    }
  net.finalize();
  return net;
}

/// Hop distance on the disk graph of `pos`, or -1 when unreachable.
inline int bfs_hops(const std::vector<Vec2>& pos, double range, std::size_t src, std::size_t dst) {
  std::vector<int> dist(pos.size(), -1);
  std::deque<std::size_t> q{src};
  dist[src] = 0;
  while (!q.empty()) {
    const auto u = q.front();
    q.pop_front();
    for (std::size_t v = 0; v < pos.size(); ++v) {
      if (dist[v] >= 0) continue;
      const double dx = pos[u].x - pos[v].x, dy = pos[u].y - pos[v].y;
      if (dx * dx + dy * dy <= range * range) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
    }
  }
  return dist[dst];
}

/// Trace with every vehicle parked at `pos` for `duration` seconds.
inline mobility::MobilityTrace static_trace(const std::vector<Vec2>& pos, double duration) {
  mobility::MobilityTrace t;
  t.vehicle_count = pos.size();
  t.dt = 1.0;
  t.step_count = static_cast<std::size_t>(duration) + 1;
  for (std::size_t k = 0; k < t.step_count; ++k)
    for (std::size_t i = 0; i < pos.size(); ++i) {
      mobility::TraceRecord r;
      r.time = static_cast<double>(k);
      r.vehicle = static_cast<VehicleId>(i);
      r.x = pos[i].x;
      r.y = pos[i].y;
      t.records.push_back(r);
    }
  return t;
}

/// Trace from a per-step position function.
template <typename F>
mobility::MobilityTrace moving_trace(std::size_t vehicles, std::size_t steps, F&& at) {
  mobility::MobilityTrace t;
  t.vehicle_count = vehicles;
  t.dt = 1.0;
  t.step_count = steps;
  for (std::size_t k = 0; k < steps; ++k)
    for (std::size_t i = 0; i < vehicles; ++i) {
      const Vec2 p = at(k, i);
      mobility::TraceRecord r;
      r.time = static_cast<double>(k);
      r.vehicle = static_cast<VehicleId>(i);
      r.x = p.x;
      r.y = p.y;
      t.records.push_back(r);
    }
  return t;
}

struct SafetyScan {
  std::size_t gap_violations = 0;
  std::size_t speed_violations = 0;
  std::size_t records = 0;
  double min_gap = std::numeric_limits<double>::infinity();
};

/// Brute-force pairwise scan of every sample: same edge and lane vehicles
/// must keep a non-negative bumper gap, and no speed may exceed its edge.
inline SafetyScan scan_safety(const road::RoadNetwork& net, const mobility::MobilityTrace& trace) {
  SafetyScan s;
  const double len = trace.config.vehicle_length;
  for (std::size_t k = 0; k < trace.step_count; ++k) {
    for (std::size_t i = 0; i < trace.vehicle_count; ++i) {
      const auto& a = trace.at(k, i);
      ++s.records;
      if (a.edge == mobility::kNoEdge) continue;
      if (a.speed > net.edge(a.edge).speed_limit) ++s.speed_violations;
      for (std::size_t j = 0; j < trace.vehicle_count; ++j) {
        const auto& b = trace.at(k, j);
        if (i == j || b.edge != a.edge || b.lane != a.lane || b.pos < a.pos) continue;
        if (b.pos == a.pos && j < i) continue;
        const double gap = b.pos - len - a.pos;
        s.min_gap = std::min(s.min_gap, gap);
        if (gap < 0) ++s.gap_violations;
      }
    }
  }
  return s;
}

}  // namespace oracle
