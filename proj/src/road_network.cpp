#include "hybrist/road_network.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <fmt/format.h>

namespace hybrist::road {

UrbanControl parse_urban_control(std::string_view text) {
  if (text == "light") return UrbanControl::TrafficLight;
  if (text == "stop") return UrbanControl::StopSign;
  if (text == "ptsm") return UrbanControl::Probabilistic;
  if (text == "mixed") return UrbanControl::Mixed;
  throw ParseError(0, "unknown urban control '" + std::string(text) + "'");
}

std::string_view to_string(UrbanControl c) noexcept {
  switch (c) {
    case UrbanControl::TrafficLight: return "light";
    case UrbanControl::StopSign: return "stop";
    case UrbanControl::Probabilistic: return "ptsm";
    case UrbanControl::Mixed: return "mixed";
  }
  return "?";
}

void TopologyParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(what);
  };
  require(corridor_length > 0 && corridor_width > 0, "corridor dimensions must be positive");
  require(metrobus_lanes_per_direction >= 1 && main_road_lanes_per_direction >= 1 && hwm_lanes >= 1 &&
              umm_lanes >= 1,
          "all lane counts must be >= 1");
  require(metrobus_speed > 0 && main_road_speed > 0 && hwm_speed > 0 && umm_speed > 0,
          "all speeds must be > 0");
  require(metrobus_stations >= 0 && main_road_stops >= 0 && hwm_stops >= 0 && umm_stops >= 0,
          "station counts must be >= 0");
  require(umm_grid_rows >= 1 && umm_grid_cols >= 1, "grid dimensions must be >= 1");
  require(umm_block_length >= 0, "umm_block_length must be >= 0");
  require(umm_grid_width >= 0 && umm_grid_width <= corridor_width, "umm_grid_width must lie in [0, corridor_width]");
  require(ptsm_stop_probability >= 0 && ptsm_stop_probability <= 1, "ptsm probability must lie in [0,1]");
  require(ptsm_max_wait > 0, "ptsm max wait must be > 0");
  require(tlm_green_time > 0, "traffic light green time must be > 0");
  require(metrobus_dwell_min >= 0 && metrobus_dwell_min <= metrobus_dwell_max, "bad metrobus dwell range");
  require(stop_dwell_min >= 0 && stop_dwell_min <= stop_dwell_max, "bad stop dwell range");
}

void RoadNetwork::finalize() {
  const auto n = nodes.size();
  out_.assign(n, {});
  in_.assign(n, {});
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    const auto id = static_cast<EdgeId>(i);
    if (index(e.from) < n) out_[index(e.from)].push_back(id);
    if (index(e.to) < n) in_[index(e.to)].push_back(id);
  }

  std::vector<std::uint32_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return edges[a].id < edges[b].id; });
  id_rank_.assign(edges.size(), 0);
  for (std::uint32_t r = 0; r < order.size(); ++r) id_rank_[order[r]] = r;

  auto by_rank = [&](EdgeId a, EdgeId b) { return id_rank_[index(a)] < id_rank_[index(b)]; };
  for (auto& v : out_) std::sort(v.begin(), v.end(), by_rank);
  for (auto& v : in_) std::sort(v.begin(), v.end(), by_rank);

  stations_by_edge_.assign(edges.size(), {});
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const auto e = index(stations[i].edge);
    if (e < edges.size()) stations_by_edge_[e].push_back(i);
  }
  for (auto& v : stations_by_edge_) {
    std::stable_sort(v.begin(), v.end(), [&](auto a, auto b) { return stations[a].offset < stations[b].offset; });
  }

  control_index_.assign(n, -1);
  for (std::size_t i = 0; i < intersections.size(); ++i) {
    const auto node_ix = index(intersections[i].node);
    if (node_ix < n) control_index_[node_ix] = static_cast<int>(i);
  }
}

std::optional<NodeId> RoadNetwork::find_node(std::string_view id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return static_cast<NodeId>(i);
  return std::nullopt;
}

std::optional<EdgeId> RoadNetwork::find_edge(std::string_view id) const {
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (edges[i].id == id) return static_cast<EdgeId>(i);
  return std::nullopt;
}

const Intersection* RoadNetwork::control_at(NodeId n) const {
  const auto i = index(n);
  if (i >= control_index_.size() || control_index_[i] < 0) return nullptr;
  return &intersections[static_cast<std::size_t>(control_index_[i])];
}

Vec2 RoadNetwork::direction(EdgeId e) const {
  const auto& ed = edge(e);
  const auto d = node(ed.to).pos - node(ed.from).pos;
  const double len = std::hypot(d.x, d.y);
  return len > 0 ? d * (1.0 / len) : Vec2{1.0, 0.0};
}

namespace {

struct Builder {
  RoadNetwork net;

  NodeId add_node(std::string id, Vec2 pos) {
    net.nodes.push_back({std::move(id), pos});
    return static_cast<NodeId>(net.nodes.size() - 1);
  }

  EdgeId add_edge(std::string id, NodeId from, NodeId to, int lanes, double speed, int priority, ClassSet cls) {
    const double len = distance(net.nodes[index(from)].pos, net.nodes[index(to)].pos);
    net.edges.push_back({std::move(id), from, to, len, lanes, speed, priority, cls});
    return static_cast<EdgeId>(net.edges.size() - 1);
  }

  /// `count` stations spread evenly along `e`, each at the middle of its share.
  void spread_stations(EdgeId e, int count, double dwell_min, double dwell_max, VehicleClass serves) {
    const double len = net.edges[index(e)].length;
    for (int i = 0; i < count; ++i) {
      const double offset = (i + 0.5) * len / count;
      net.stations.push_back({e, offset, dwell_min, dwell_max, serves});
    }
  }
};

std::string padded(int v) { return fmt::format("{:02d}", v); }

RoadNetwork build_hybrid(const TopologyParams& p) {
  Builder b;
  b.net.kind = ModelKind::HMM;
  const double mid = p.corridor_width / 2.0;
  const double len = p.corridor_length;

  // Restricted metrobus lane in the median.
  const auto mb_w = b.add_node("mb_w", {0.0, mid});
  const auto mb_e = b.add_node("mb_e", {len, mid});
  const auto mb_eb =
      b.add_edge("mb_eb", mb_w, mb_e, p.metrobus_lanes_per_direction, p.metrobus_speed, 3, ClassSet::Metrobus);
  b.spread_stations(mb_eb, p.metrobus_stations, p.metrobus_dwell_min, p.metrobus_dwell_max, VehicleClass::Metrobus);
  if (p.metrobus_bidirectional) {
    const auto mb_wb =
        b.add_edge("mb_wb", mb_e, mb_w, p.metrobus_lanes_per_direction, p.metrobus_speed, 3, ClassSet::Metrobus);
    b.spread_stations(mb_wb, p.metrobus_stations, p.metrobus_dwell_min, p.metrobus_dwell_max,
                      VehicleClass::Metrobus);
  }

  // Main roads: one block per stop, each stop in the middle of its block.
  const int blocks = std::max(1, p.main_road_stops);
  std::vector<NodeId> mr;
  for (int k = 0; k <= blocks; ++k) mr.push_back(b.add_node("mr_" + padded(k), {k * len / blocks, mid}));
  for (int k = 0; k < blocks; ++k) {
    const auto eb = b.add_edge("mr_eb_" + padded(k), mr[k], mr[k + 1], p.main_road_lanes_per_direction,
                               p.main_road_speed, 2, ClassSet::Car);
    if (p.main_road_stops > 0) b.spread_stations(eb, 1, p.stop_dwell_min, p.stop_dwell_max, VehicleClass::Car);
  }
  for (int k = blocks - 1; k >= 0; --k) {
    const auto wb = b.add_edge("mr_wb_" + padded(k), mr[k + 1], mr[k], p.main_road_lanes_per_direction,
                               p.main_road_speed, 2, ClassSet::Car);
    if (p.main_road_stops > 0) b.spread_stations(wb, 1, p.stop_dwell_min, p.stop_dwell_max, VehicleClass::Car);
  }
  return std::move(b.net);
}

RoadNetwork build_highway(const TopologyParams& p) {
  Builder b;
  b.net.kind = ModelKind::HWM;
  const double mid = p.corridor_width / 2.0;
  const auto w = b.add_node("hw_w", {0.0, mid});
  const auto e = b.add_node("hw_e", {p.corridor_length, mid});
  const auto eb = b.add_edge("hw_eb", w, e, p.hwm_lanes, p.hwm_speed, 3, ClassSet::Car);
  const auto wb = b.add_edge("hw_wb", e, w, p.hwm_lanes, p.hwm_speed, 3, ClassSet::Car);
  b.spread_stations(eb, p.hwm_stops, p.stop_dwell_min, p.stop_dwell_max, VehicleClass::Car);
  b.spread_stations(wb, p.hwm_stops, p.stop_dwell_min, p.stop_dwell_max, VehicleClass::Car);
  return std::move(b.net);
}

RoadNetwork build_urban(const TopologyParams& p) {
  if (p.umm_grid_rows < 2 || p.umm_grid_cols < 2)
    throw ValidationError("urban grid needs at least 2x2 nodes");
  Builder b;
  b.net.kind = ModelKind::UMM;
  const int rows = p.umm_grid_rows;
  const int cols = p.umm_grid_cols;
  const double bx = p.umm_block_length > 0 ? p.umm_block_length : p.corridor_length / (cols - 1);
  const double band = p.umm_grid_width > 0 ? p.umm_grid_width : p.corridor_width;
  const double by = p.umm_block_length > 0 ? p.umm_block_length : band / (rows - 1);
  const double y0 = (p.corridor_width - by * (rows - 1)) / 2.0;

  auto node_name = [](int r, int c) { return "g_" + padded(r) + "_" + padded(c); };
  auto at = [cols](int r, int c) { return static_cast<NodeId>(r * cols + c); };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) b.add_node(node_name(r, c), {c * bx, y0 + r * by});

  auto street = [&](int r1, int c1, int r2, int c2) {
    for (auto [fr, fc, tr, tc] : {std::array{r1, c1, r2, c2}, std::array{r2, c2, r1, c1}}) {
      const auto id = "u_" + padded(fr) + padded(fc) + "_" + padded(tr) + padded(tc);
      b.add_edge(id, at(fr, fc), at(tr, tc), p.umm_lanes, p.umm_speed, 1, ClassSet::Car);
    }
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c) street(r, c, r, c + 1);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r + 1 < rows; ++r) street(r, c, r + 1, c);

  b.net.finalize();

  // Every junction with three or more approaches is controlled.
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const auto n = at(r, c);
      const auto& approaches = b.net.in_edges(n);
      if (approaches.size() < 3) continue;
      UrbanControl kind = p.umm_control;
      if (kind == UrbanControl::Mixed) kind = (r + c) % 2 == 0 ? UrbanControl::TrafficLight : UrbanControl::StopSign;

      Intersection ix{n, StopSignControl{}, approaches};
      if (kind == UrbanControl::Probabilistic) {
        ix.control = ProbabilisticSignControl{p.ptsm_stop_probability, p.ptsm_max_wait};
      } else if (kind == UrbanControl::TrafficLight) {
        PhasePlan plan;
        plan.cycle = 2 * p.tlm_green_time;
        SignalPhase ns{0.0, p.tlm_green_time, {}};
        SignalPhase ew{p.tlm_green_time, plan.cycle, {}};
        for (auto e : approaches) {
          const auto d = b.net.direction(e);
          (std::abs(d.y) > std::abs(d.x) ? ns : ew).approaches.push_back(e);
        }
        plan.phases = {ns, ew};
        ix.control = TrafficLightControl{plan};
      }
      b.net.intersections.push_back(std::move(ix));
    }
  }

  // Stops go to the middle of edges picked evenly from the id-ordered edge list.
  std::vector<EdgeId> ordered(b.net.edges.size());
  for (std::size_t i = 0; i < ordered.size(); ++i) ordered[i] = static_cast<EdgeId>(i);
  std::sort(ordered.begin(), ordered.end(),
            [&](EdgeId a, EdgeId c) { return b.net.id_rank(a) < b.net.id_rank(c); });
  const int stops = std::min<int>(p.umm_stops, static_cast<int>(ordered.size()));
  for (int i = 0; i < stops; ++i) {
    const auto e = ordered[static_cast<std::size_t>(i) * ordered.size() / stops];
    b.net.stations.push_back({e, b.net.edges[index(e)].length / 2, p.stop_dwell_min, p.stop_dwell_max,
                              VehicleClass::Car});
  }
  return std::move(b.net);
}

}  // namespace

RoadNetwork build_topology(const TopologyParams& params, ModelKind kind) {
  params.validate();
  RoadNetwork net;
  switch (kind) {
    case ModelKind::HMM: net = build_hybrid(params); break;
    case ModelKind::UMM: net = build_urban(params); break;
    case ModelKind::HWM: net = build_highway(params); break;
  }
  net.finalize();
  return net;
}

std::string_view to_string(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::DanglingEndpoint: return "DanglingEndpoint";
    case ViolationKind::NonPositiveLength: return "NonPositiveLength";
    case ViolationKind::BadLaneCount: return "BadLaneCount";
    case ViolationKind::NonPositiveSpeed: return "NonPositiveSpeed";
    case ViolationKind::EmptyClassSet: return "EmptyClassSet";
    case ViolationKind::DuplicateId: return "DuplicateId";
    case ViolationKind::MissingStationEdge: return "MissingStationEdge";
    case ViolationKind::OffsetOutOfRange: return "OffsetOutOfRange";
    case ViolationKind::BadDwellRange: return "BadDwellRange";
    case ViolationKind::BadControl: return "BadControl";
    case ViolationKind::Disconnected: return "Disconnected";
  }
  return "?";
}

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) x = parent[x] = parent[parent[x]];
  return x;
}

void check_connectivity(const RoadNetwork& net, VehicleClass cls, std::vector<Violation>& out) {
  const auto n = net.nodes.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < net.edges.size(); ++i) {
    const auto& e = net.edges[i];
    if (!permits(e.allowed, cls) || index(e.from) >= n || index(e.to) >= n) continue;
    usable.push_back(i);
    parent[find_root(parent, index(e.from))] = find_root(parent, index(e.to));
  }
  if (usable.empty()) return;
  const auto root = find_root(parent, index(net.edges[usable.front()].from));
  for (auto i : usable) {
    if (find_root(parent, index(net.edges[i].from)) != root) {
      out.push_back({ViolationKind::Disconnected, net.edges[i].id,
                     fmt::format("not reachable by class {} from edge {}", to_string(cls),
                                 net.edges[usable.front()].id)});
    }
  }
}

}  // namespace

std::vector<Violation> validate_network(const RoadNetwork& net) {
  std::vector<Violation> out;
  const auto n = net.nodes.size();

  std::set<std::string_view> seen;
  for (const auto& node : net.nodes)
    if (!seen.insert(node.id).second) out.push_back({ViolationKind::DuplicateId, node.id, "duplicate node id"});
  seen.clear();
  for (const auto& e : net.edges)
    if (!seen.insert(e.id).second) out.push_back({ViolationKind::DuplicateId, e.id, "duplicate edge id"});

  for (const auto& e : net.edges) {
    if (index(e.from) >= n || index(e.to) >= n)
      out.push_back({ViolationKind::DanglingEndpoint, e.id, "edge endpoint is not a defined node"});
    if (!(e.length > 0)) out.push_back({ViolationKind::NonPositiveLength, e.id, fmt::format("length {}", e.length)});
    if (e.lane_count < 1)
      out.push_back({ViolationKind::BadLaneCount, e.id, fmt::format("lane_count {}", e.lane_count)});
    if (!(e.speed_limit > 0))
      out.push_back({ViolationKind::NonPositiveSpeed, e.id, fmt::format("speed_limit {}", e.speed_limit)});
    if ((static_cast<unsigned>(e.allowed) & 3u) == 0)
      out.push_back({ViolationKind::EmptyClassSet, e.id, "no vehicle class allowed"});
  }

  for (std::size_t i = 0; i < net.stations.size(); ++i) {
    const auto& s = net.stations[i];
    const auto name = fmt::format("station#{}", i);
    if (index(s.edge) >= net.edges.size()) {
      out.push_back({ViolationKind::MissingStationEdge, name, "station references a missing edge"});
      continue;
    }
    const auto& e = net.edges[index(s.edge)];
    if (!(s.offset >= 0 && s.offset < e.length))
      out.push_back({ViolationKind::OffsetOutOfRange, name,
                     fmt::format("offset {} outside [0, {}) of edge {}", s.offset, e.length, e.id)});
    if (!(s.dwell_min >= 0 && s.dwell_min <= s.dwell_max))
      out.push_back({ViolationKind::BadDwellRange, name, fmt::format("dwell [{}, {}]", s.dwell_min, s.dwell_max)});
  }

  for (const auto& ix : net.intersections) {
    if (index(ix.node) >= n) {
      out.push_back({ViolationKind::DanglingEndpoint, fmt::format("node#{}", index(ix.node)),
                     "control on an undefined node"});
      continue;
    }
    const auto& name = net.nodes[index(ix.node)].id;
    if (const auto* ptsm = std::get_if<ProbabilisticSignControl>(&ix.control)) {
      if (!(ptsm->p >= 0 && ptsm->p <= 1) || !(ptsm->w > 0))
        out.push_back({ViolationKind::BadControl, name, fmt::format("ptsm p={} w={}", ptsm->p, ptsm->w)});
    } else if (const auto* tl = std::get_if<TrafficLightControl>(&ix.control)) {
      const auto& plan = tl->plan;
      if (!(plan.cycle > 0)) {
        out.push_back({ViolationKind::BadControl, name, "phase plan cycle must be > 0"});
        continue;
      }
      // Windows must tile [0, cycle) so exactly one phase is green at a time.
      std::vector<std::pair<double, double>> windows;
      for (const auto& ph : plan.phases) windows.emplace_back(ph.start, ph.end);
      std::sort(windows.begin(), windows.end());
      double cursor = 0.0;
      bool tiles = !windows.empty();
      for (auto [start, end] : windows) {
        tiles = tiles && start == cursor && end > start;
        cursor = end;
      }
      if (!tiles || cursor != plan.cycle)
        out.push_back({ViolationKind::BadControl, name, "phase windows do not tile the cycle"});
      for (auto e : ix.approaches) {
        const bool covered = std::any_of(plan.phases.begin(), plan.phases.end(), [&](const SignalPhase& ph) {
          return std::find(ph.approaches.begin(), ph.approaches.end(), e) != ph.approaches.end();
        });
        if (!covered)
          out.push_back({ViolationKind::BadControl, name,
                         fmt::format("approach {} has no green phase",
                                     index(e) < net.edges.size() ? net.edges[index(e)].id : "?")});
      }
    }
  }

  check_connectivity(net, VehicleClass::Metrobus, out);
  check_connectivity(net, VehicleClass::Car, out);
  return out;
}

}  // namespace hybrist::road
