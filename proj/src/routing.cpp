#include <algorithm>
#include <limits>
#include <queue>

#include "hybrist/road_network.hpp"

namespace hybrist::road {

namespace {

struct Label {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<std::uint32_t> ranks;  // id ranks of the path's edges
  Route path;
  NodeId node{};
};

// Strict weak order: cheaper first, then lexicographically smaller id sequence.
bool better(const Label& a, const Label& b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  return std::lexicographical_compare(a.ranks.begin(), a.ranks.end(), b.ranks.begin(), b.ranks.end());
}

}  // namespace

Route shortest_route(const RoadNetwork& net, NodeId origin, NodeId dest, VehicleClass cls) {
  const auto n = net.nodes.size();
  if (index(origin) >= n || index(dest) >= n) throw NoRoute("route endpoint is not a node of the network");
  if (origin == dest) return {};

  // Positive edge costs make label-setting valid for the (cost, id sequence)
  // order: a path's best prefix is never a proper prefix of a rival.
  std::vector<Label> best(n);
  std::vector<bool> settled(n, false);
  auto worse = [](const Label& a, const Label& b) { return better(b, a); };
  std::priority_queue<Label, std::vector<Label>, decltype(worse)> open(worse);

  best[index(origin)] = Label{0.0, {}, {}, origin};
  open.push(best[index(origin)]);
  while (!open.empty()) {
    Label cur = open.top();
    open.pop();
    const auto u = index(cur.node);
    if (settled[u]) continue;
    settled[u] = true;
    if (cur.node == dest) return cur.path;

    for (auto e : net.out_edges(cur.node)) {
      const auto& ed = net.edge(e);
      if (!permits(ed.allowed, cls)) continue;
      const auto v = index(ed.to);
      if (settled[v]) continue;
      Label next{cur.cost + travel_time(ed), cur.ranks, cur.path, ed.to};
      next.ranks.push_back(net.id_rank(e));
      next.path.push_back(e);
      if (better(next, best[v])) {
        best[v] = next;
        open.push(std::move(next));
      }
    }
  }
  throw NoRoute("no " + std::string(to_string(cls)) + " route from " + net.node(origin).id + " to " +
                net.node(dest).id);
}

double route_cost(const RoadNetwork& net, const Route& route) {
  double cost = 0.0;
  for (auto e : route) cost += travel_time(net.edge(e));
  return cost;
}

}  // namespace hybrist::road
