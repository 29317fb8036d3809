#include <charconv>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "hybrist/road_network.hpp"
#include "hybrist/text.hpp"

namespace hybrist::road {

std::string serialize_network(const RoadNetwork& net) {
  std::string out = fmt::format("MODEL {}\n", to_string(net.kind));
  for (const auto& n : net.nodes) out += fmt::format("NODE {} {:.6f} {:.6f}\n", n.id, n.pos.x, n.pos.y);
  for (const auto& e : net.edges) {
    out += fmt::format("EDGE {} {} {} {:.6f} {} {:.6f} {} {}\n", e.id, net.node(e.from).id, net.node(e.to).id,
                       e.length, e.lane_count, e.speed_limit, e.priority, to_string(e.allowed));
  }
  for (const auto& s : net.stations) {
    out += fmt::format("STATION {} {:.6f} {:.6f} {:.6f} {}\n", net.edge(s.edge).id, s.offset, s.dwell_min,
                       s.dwell_max, to_string(s.serves));
  }
  for (const auto& ix : net.intersections) {
    const auto& node = net.node(ix.node).id;
    if (std::holds_alternative<StopSignControl>(ix.control)) {
      out += fmt::format("CONTROL {} stop\n", node);
    } else if (const auto* p = std::get_if<ProbabilisticSignControl>(&ix.control)) {
      out += fmt::format("CONTROL {} ptsm {:.6f} {:.6f}\n", node, p->p, p->w);
    } else {
      const auto& plan = std::get<TrafficLightControl>(ix.control).plan;
      out += fmt::format("CONTROL {} light {:.6f} {:.6f} {}", node, plan.cycle, plan.offset, plan.phases.size());
      for (const auto& ph : plan.phases) {
        out += fmt::format(" {:.6f} {:.6f} {}", ph.start, ph.end, ph.approaches.size());
        for (auto e : ph.approaches) out += " " + net.edge(e).id;
      }
      out += '\n';
    }
  }
  return out;
}

namespace {

class Fields {
 public:
  Fields(std::vector<std::string_view> tokens, std::size_t line) : tokens_(std::move(tokens)), line_(line) {}

  std::string_view next() {
    if (pos_ >= tokens_.size()) throw ParseError(line_, "missing field");
    return tokens_[pos_++];
  }
  double number() { return text::parse_double(next(), line_); }
  int integer() { return static_cast<int>(text::parse_int(next(), line_)); }
  void done() const {
    if (pos_ != tokens_.size()) throw ParseError(line_, "trailing fields");
  }

 private:
  std::vector<std::string_view> tokens_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

}  // namespace

RoadNetwork parse_network(std::string_view text_in) {
  RoadNetwork net;
  std::map<std::string, NodeId, std::less<>> node_ids;
  std::map<std::string, EdgeId, std::less<>> edge_ids;
  struct PendingControl {
    std::size_t line;
    std::vector<std::string_view> tokens;
  };
  struct PendingEdge {
    std::size_t line;
    std::string from, to;
  };
  std::vector<PendingEdge> edge_ends;
  std::vector<PendingControl> controls;
  std::vector<std::pair<std::size_t, std::vector<std::string_view>>> stations;
  bool have_model = false;

  std::size_t line_no = 0;
  for (auto line : text::split_lines(text_in)) {
    ++line_no;
    auto tokens = text::split_ws(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    const auto tag = tokens.front();
    Fields f({tokens.begin() + 1, tokens.end()}, line_no);
    if (tag == "MODEL") {
      net.kind = parse_model_kind(f.next());
      f.done();
      have_model = true;
    } else if (tag == "NODE") {
      Node n{std::string(f.next()), {}};
      n.pos.x = f.number();
      n.pos.y = f.number();
      f.done();
      if (!node_ids.emplace(n.id, static_cast<NodeId>(net.nodes.size())).second)
        throw ParseError(line_no, "duplicate node " + n.id);
      net.nodes.push_back(std::move(n));
    } else if (tag == "EDGE") {
      Edge e;
      e.id = std::string(f.next());
      PendingEdge ends{line_no, std::string(f.next()), std::string(f.next())};
      e.length = f.number();
      e.lane_count = f.integer();
      e.speed_limit = f.number();
      e.priority = f.integer();
      try {
        e.allowed = parse_class_set(f.next());
      } catch (const ParseError& err) {
        throw ParseError(line_no, err.what());
      }
      f.done();
      if (!edge_ids.emplace(e.id, static_cast<EdgeId>(net.edges.size())).second)
        throw ParseError(line_no, "duplicate edge " + e.id);
      net.edges.push_back(std::move(e));
      edge_ends.push_back(std::move(ends));
    } else if (tag == "STATION") {
      stations.emplace_back(line_no, std::vector<std::string_view>(tokens.begin() + 1, tokens.end()));
    } else if (tag == "CONTROL") {
      controls.push_back({line_no, {tokens.begin() + 1, tokens.end()}});
    } else {
      throw ParseError(line_no, "unknown record '" + std::string(tag) + "'");
    }
  }
  if (!have_model) throw ParseError(0, "missing MODEL record");

  auto resolve_node = [&](std::string_view id, std::size_t line) {
    const auto it = node_ids.find(id);
    if (it == node_ids.end()) throw ParseError(line, "unknown node " + std::string(id));
    return it->second;
  };
  auto resolve_edge = [&](std::string_view id, std::size_t line) {
    const auto it = edge_ids.find(id);
    if (it == edge_ids.end()) throw ParseError(line, "unknown edge " + std::string(id));
    return it->second;
  };

  for (std::size_t i = 0; i < net.edges.size(); ++i) {
    net.edges[i].from = resolve_node(edge_ends[i].from, edge_ends[i].line);
    net.edges[i].to = resolve_node(edge_ends[i].to, edge_ends[i].line);
  }
  for (const auto& [line, tokens] : stations) {
    Fields f(tokens, line);
    StopStation s;
    s.edge = resolve_edge(f.next(), line);
    s.offset = f.number();
    s.dwell_min = f.number();
    s.dwell_max = f.number();
    const auto cls = f.next();
    if (cls == "Metrobus") s.serves = VehicleClass::Metrobus;
    else if (cls == "Car") s.serves = VehicleClass::Car;
    else throw ParseError(line, "station class must be Metrobus or Car");
    f.done();
    net.stations.push_back(s);
  }

  net.finalize();
  for (const auto& pc : controls) {
    Fields f(pc.tokens, pc.line);
    Intersection ix;
    ix.node = resolve_node(f.next(), pc.line);
    ix.approaches = net.in_edges(ix.node);
    const auto kind = f.next();
    if (kind == "stop") {
      ix.control = StopSignControl{};
    } else if (kind == "ptsm") {
      ProbabilisticSignControl p;
      p.p = f.number();
      p.w = f.number();
      ix.control = p;
    } else if (kind == "light") {
      PhasePlan plan;
      plan.cycle = f.number();
      plan.offset = f.number();
      const int phases = f.integer();
      for (int k = 0; k < phases; ++k) {
        SignalPhase ph;
        ph.start = f.number();
        ph.end = f.number();
        const int count = f.integer();
        for (int j = 0; j < count; ++j) ph.approaches.push_back(resolve_edge(f.next(), pc.line));
        plan.phases.push_back(std::move(ph));
      }
      ix.control = TrafficLightControl{std::move(plan)};
    } else {
      throw ParseError(pc.line, "unknown control kind '" + std::string(kind) + "'");
    }
    f.done();
    net.intersections.push_back(std::move(ix));
  }
  net.finalize();
  return net;
}

}  // namespace hybrist::road
