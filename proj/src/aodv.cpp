#include "hybrist/aodv.hpp"

#include <algorithm>
#include <string_view>

#include "hybrist/common.hpp"

namespace hybrist::net {

std::string_view to_string(Disposition d) noexcept {
  switch (d) {
    case Disposition::Delivered: return "Delivered";
    case Disposition::DroppedNoRoute: return "DroppedNoRoute";
    case Disposition::DroppedCollision: return "DroppedCollision";
    case Disposition::DroppedTtl: return "DroppedTtl";
    case Disposition::DroppedQueueOverflow: return "DroppedQueueOverflow";
    case Disposition::InFlightAtEnd: return "InFlightAtEnd";
  }
  return "?";
}

void AodvParams::validate() const {
  if (!(active_route_timeout > 0)) throw ValidationError("active_route_timeout must be > 0");
  if (ttl < 1) throw ValidationError("ttl must be >= 1");
  if (rreq_retries < 0) throw ValidationError("rreq_retries must be >= 0");
  if (!(first_rreq_timeout > 0)) throw ValidationError("rreq timeout must be > 0");
  if (!(seen_rreq_lifetime > 0)) throw ValidationError("seen_rreq_lifetime must be > 0");
}

const RouteEntry* AodvNodeState::active_route(NodeIndex dest, double t) const {
  const auto it = routes.find(dest);
  if (it == routes.end() || !it->second.valid || it->second.expiry < t) return nullptr;
  return &it->second;
}

namespace {

// Sequence numbers compare with wrap-around.
bool seq_newer(std::uint32_t a, std::uint32_t b) { return static_cast<std::int32_t>(a - b) > 0; }

/// Installs or improves a route; returns whether the entry changed.
bool offer_route(AodvNodeState& s, NodeIndex dest, NodeIndex next_hop, int hops, std::uint32_t seq, double t,
                 const AodvParams& p) {
  auto& r = s.routes[dest];
  const bool fresh = !r.valid || r.expiry < t;
  const bool better = fresh || seq_newer(seq, r.dest_seq) || (seq == r.dest_seq && hops < r.hop_count);
  if (!better) {
    if (r.next_hop == next_hop && r.hop_count == hops) r.expiry = std::max(r.expiry, t + p.active_route_timeout);
    return false;
  }
  r.next_hop = next_hop;
  r.hop_count = hops;
  r.dest_seq = seq;
  r.valid = true;
  r.expiry = std::max(fresh ? 0.0 : r.expiry, t + p.active_route_timeout);
  return true;
}

void touch_neighbor(AodvNodeState& s, NodeIndex from, double t, const AodvParams& p) {
  if (from == s.self) return;
  auto& r = s.routes[from];
  if (r.valid && r.expiry >= t && r.hop_count == 1 && r.next_hop == from) {
    r.expiry = std::max(r.expiry, t + p.active_route_timeout);
    return;
  }
  if (!r.valid || r.expiry < t || r.hop_count > 1) {
    r.next_hop = from;
    r.hop_count = 1;
    r.valid = true;
    r.expiry = t + p.active_route_timeout;
  }
}

Rreq new_rreq(AodvNodeState& s, NodeIndex dest, const AodvParams& p) {
  Rreq q;
  q.origin = s.self;
  q.origin_seq = ++s.own_seq;
  q.rreq_id = ++s.rreq_id;
  q.dest = dest;
  const auto it = s.routes.find(dest);
  if (it != s.routes.end()) {
    q.dest_seq = it->second.dest_seq;
    q.unknown_seq = false;
  }
  q.ttl = p.ttl;
  return q;
}

// Expired entries are ignored on lookup; the sweep only bounds memory.
void expire_seen(AodvNodeState& s, double t, const AodvParams& p) {
  if (t < s.seen_sweep_at) return;
  std::erase_if(s.seen_rreq, [t](const auto& kv) { return kv.second.expiry < t; });
  s.seen_sweep_at = t + p.seen_rreq_lifetime;
}

void handle_rreq(AodvNodeState& s, NodeIndex from, const Rreq& q, double t, const AodvParams& p,
                 std::vector<Action>& out) {
  if (q.origin == s.self) return;
  expire_seen(s, t, p);
  const int hops = q.hop_count + 1;
  const auto key = std::make_pair(q.origin, q.rreq_id);
  if (const auto it = s.seen_rreq.find(key); it != s.seen_rreq.end() && it->second.expiry >= t) {
    // Only a copy that travelled strictly fewer hops is worth another pass.
    if (hops >= it->second.best_hops) return;
  }
  s.seen_rreq[key] = {t + p.seen_rreq_lifetime, hops};

  offer_route(s, q.origin, from, hops, q.origin_seq, t, p);

  if (q.dest == s.self) {
    if (!q.unknown_seq && seq_newer(q.dest_seq, s.own_seq)) s.own_seq = q.dest_seq;
    out.push_back(Unicast{from, Rrep{q.origin, s.self, s.own_seq, 0}});
    return;
  }
  if (const auto* r = s.active_route(q.dest, t); r && (q.unknown_seq || !seq_newer(q.dest_seq, r->dest_seq))) {
    auto& fwd = s.routes[q.dest];
    fwd.precursors.insert(from);
    s.routes[q.origin].precursors.insert(fwd.next_hop);
    out.push_back(Unicast{from, Rrep{q.origin, q.dest, r->dest_seq, r->hop_count}});
    return;
  }
  if (q.ttl <= 1) return;
  Rreq fwd = q;
  fwd.hop_count = hops;
  fwd.ttl = q.ttl - 1;
  out.push_back(Broadcast{fwd, true});
}

/// Sends packets buffered for `dest` over its active route.
void flush_pending(AodvNodeState& s, NodeIndex dest, double t, std::vector<Action>& out) {
  const auto* route = s.active_route(dest, t);
  if (!route) return;
  s.discovery.erase(dest);
  std::deque<Data> keep;
  for (auto& d : s.pending) {
    if (d.dst == dest)
      out.push_back(Unicast{route->next_hop, d});
    else
      keep.push_back(d);
  }
  s.pending = std::move(keep);
}

void handle_rrep(AodvNodeState& s, NodeIndex from, const Rrep& r, double t, const AodvParams& p,
                 std::vector<Action>& out) {
  const int hops = r.hop_count + 1;
  // A one-hop destination is already known from the neighbor touch, so the
  // reply may not change the entry; the originator still flushes.
  const bool changed = offer_route(s, r.dest, from, hops, r.dest_seq, t, p);
  if (r.origin == s.self) {
    flush_pending(s, r.dest, t, out);
    return;
  }
  if (!changed) return;
  const auto* back = s.active_route(r.origin, t);
  if (!back) return;
  s.routes[r.dest].precursors.insert(back->next_hop);
  s.routes[r.origin].precursors.insert(from);
  Rrep fwd = r;
  fwd.hop_count = hops;
  out.push_back(Unicast{back->next_hop, fwd});
}

/// Invalidates routes matching `pred` and returns the RERR list for those
/// that had precursors.
template <typename Pred>
std::vector<std::pair<NodeIndex, std::uint32_t>> invalidate(AodvNodeState& s, Pred pred) {
  std::vector<std::pair<NodeIndex, std::uint32_t>> lost;
  for (auto& [dest, r] : s.routes) {
    if (!r.valid || !pred(dest, r)) continue;
    r.valid = false;
    ++r.dest_seq;
    if (!r.precursors.empty()) lost.emplace_back(dest, r.dest_seq);
    r.precursors.clear();
  }
  return lost;
}

void handle_rerr(AodvNodeState& s, NodeIndex from, const Rerr& e, std::vector<Action>& out) {
  auto lost = invalidate(s, [&](NodeIndex dest, const RouteEntry& r) {
    if (r.next_hop != from) return false;
    return std::any_of(e.unreachable.begin(), e.unreachable.end(), [&](const auto& u) { return u.first == dest; });
  });
  if (!lost.empty()) out.push_back(Broadcast{Rerr{std::move(lost)}, false});
}

void handle_data(AodvNodeState& s, const Data& d, double t, const AodvParams& p, std::vector<Action>& out) {
  if (d.dst == s.self) {
    out.push_back(DeliverData{d});
    return;
  }
  if (d.hops >= p.ttl) {
    out.push_back(DropData{d, Disposition::DroppedTtl});
    return;
  }
  auto it = s.routes.find(d.dst);
  if (it == s.routes.end() || !it->second.valid || it->second.expiry < t) {
    out.push_back(DropData{d, Disposition::DroppedNoRoute});
    const std::uint32_t seq = it == s.routes.end() ? 0 : it->second.dest_seq;
    out.push_back(Broadcast{Rerr{{{d.dst, seq}}}, false});
    return;
  }
  it->second.expiry = std::max(it->second.expiry, t + p.active_route_timeout);
  out.push_back(Unicast{it->second.next_hop, d});
}

}  // namespace

std::vector<Action> aodv_handle(AodvNodeState& state, NodeIndex from, const Message& msg, double t,
                                const AodvParams& params) {
  std::vector<Action> out;
  touch_neighbor(state, from, t, params);
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Rreq>) handle_rreq(state, from, m, t, params, out);
        else if constexpr (std::is_same_v<M, Rrep>) handle_rrep(state, from, m, t, params, out);
        else if constexpr (std::is_same_v<M, Rerr>) handle_rerr(state, from, m, out);
        else handle_data(state, m, t, params, out);
      },
      msg);
  return out;
}

std::vector<Action> aodv_send(AodvNodeState& state, const Data& packet, double t, const AodvParams& params) {
  std::vector<Action> out;
  if (packet.dst == state.self) {
    out.push_back(DeliverData{packet});
    return out;
  }
  if (auto it = state.routes.find(packet.dst);
      it != state.routes.end() && it->second.valid && it->second.expiry >= t) {
    it->second.expiry = std::max(it->second.expiry, t + params.active_route_timeout);
    out.push_back(Unicast{it->second.next_hop, packet});
    return out;
  }
  state.pending.push_back(packet);
  out.push_back(BufferData{packet});
  if (!state.discovery.contains(packet.dst)) {
    state.discovery[packet.dst] = 0;
    out.push_back(Broadcast{new_rreq(state, packet.dst, params), false});
    out.push_back(ScheduleTimeout{packet.dst, 0, params.first_rreq_timeout});
  }
  return out;
}

std::vector<Action> aodv_timeout(AodvNodeState& state, NodeIndex dest, int attempt, double t,
                                 const AodvParams& params) {
  std::vector<Action> out;
  const auto it = state.discovery.find(dest);
  if (it == state.discovery.end() || it->second != attempt) return out;
  if (state.active_route(dest, t)) {
    flush_pending(state, dest, t, out);
    return out;
  }
  if (attempt < params.rreq_retries) {
    it->second = attempt + 1;
    out.push_back(Broadcast{new_rreq(state, dest, params), false});
    out.push_back(ScheduleTimeout{dest, attempt + 1, params.first_rreq_timeout * double(2 << attempt)});
    return out;
  }
  state.discovery.erase(it);
  std::deque<Data> keep;
  for (auto& d : state.pending) {
    if (d.dst == dest)
      out.push_back(DropData{d, Disposition::DroppedNoRoute});
    else
      keep.push_back(d);
  }
  state.pending = std::move(keep);
  return out;
}

std::vector<Action> aodv_link_failure(AodvNodeState& state, NodeIndex next_hop, const std::optional<Data>& packet,
                                      double t, const AodvParams& params, Disposition reason) {
  std::vector<Action> out;
  auto lost = invalidate(state, [&](NodeIndex, const RouteEntry& r) { return r.next_hop == next_hop; });
  if (!lost.empty()) out.push_back(Broadcast{Rerr{std::move(lost)}, false});
  if (!packet) return out;
  if (packet->src == state.self) {
    auto more = aodv_send(state, *packet, t, params);
    out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  } else {
    out.push_back(DropData{*packet, reason});
  }
  return out;
}

}  // namespace hybrist::net
