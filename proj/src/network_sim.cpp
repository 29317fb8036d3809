#include <algorithm>
#include <cassert>
#include <deque>
#include <map>
#include <queue>

#include "hybrist/network_sim.hpp"
#include "hybrist/rng.hpp"

namespace hybrist::net {

namespace {

constexpr double kRebroadcastJitter = 0.01;
constexpr double kTimeEps = 1e-12;

struct Frame {
  Message msg;
  std::optional<NodeIndex> to;  // empty for broadcast
  int retries = 0;
  bool control = true;
  int size = 0;
};

struct Mac {
  explicit Mac(RngStream stream) : rng(stream) {}

  RngStream rng;
  std::deque<Frame> control;
  std::deque<Frame> data;
  bool busy = false;  // an attempt is scheduled or a frame is on the air
};

struct OnAir {
  Transmission tx;
  Frame frame;
};

struct CbrTick {
  std::size_t flow;
  std::size_t k;
};
struct MacAttempt {
  NodeIndex node;
};
struct TxEnd {
  std::size_t tx;
};
struct RreqTimeout {
  NodeIndex node;
  NodeIndex dest;
  int attempt;
};
struct DelayedFrame {
  NodeIndex node;
  std::uint64_t frame;  // key into the parked frames
};

struct Event {
  double time;
  std::uint64_t seq;
  std::variant<CbrTick, MacAttempt, TxEnd, RreqTimeout, DelayedFrame> what;

  bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

class Simulator {
 public:
  Simulator(const mobility::MobilityTrace& trace, std::span<const CbrFlowConfig> flows, const RadioParams& radio,
            std::uint64_t seed, const AodvParams& aodv)
      : trace_(trace), flows_(flows), radio_(radio), aodv_(aodv), end_(trace.end_time()) {
    radio.validate();
    aodv.validate();
    const auto n = trace.vehicle_count;
    for (const auto& f : flows) {
      f.validate();
      if (index(f.src) >= n || index(f.dst) >= n) throw ValidationError("flow endpoint not in trace");
    }
    for (std::size_t i = 0; i < n; ++i) {
      nodes_.emplace_back(static_cast<NodeIndex>(i));
      macs_.emplace_back(RngStream(seed, i));
    }
    for (std::size_t f = 0; f < flows.size(); ++f) {
      send_times_.push_back(cbr_generate(flows[f]));
      if (!send_times_.back().empty()) push(send_times_.back().front(), CbrTick{f, 0});
    }
  }

  SimResult run() {
    while (!events_.empty()) {
      const auto ev = events_.top();
      if (ev.time > end_ + kTimeEps) break;
      events_.pop();
      now_ = ev.time;
      std::visit([this](const auto& e) { handle(e); }, ev.what);
    }
    SimResult out;
    out.report = summarize(packets_, flows_.size());
    out.packets = std::move(packets_);
    out.nodes = std::move(nodes_);
    return out;
  }

 private:
  template <typename E>
  void push(double t, E e) {
    events_.push(Event{t, seq_++, e});
  }

  const std::vector<Vec2>& positions(double t) {
    if (t != cached_time_ || cached_.empty()) {
      cached_ = positions_at(trace_, std::min(t, end_));
      cached_time_ = t;
    }
    return cached_;
  }

  double backoff(NodeIndex n) {
    const auto slots = macs_[n].rng.below(static_cast<std::uint64_t>(radio_.max_backoff_slots) + 1);
    return static_cast<double>(slots) * radio_.slot;
  }

  void finalize(std::uint64_t packet, Disposition d) {
    auto& rec = packets_[packet];
    assert(rec.disposition == Disposition::InFlightAtEnd);
    rec.disposition = d;
    if (d == Disposition::Delivered) rec.delivered_at = now_;
  }

  void handle(const CbrTick& e) {
    const auto& flow = flows_[e.flow];
    const auto id = static_cast<std::uint64_t>(packets_.size());
    PacketRecord rec;
    rec.packet_id = id;
    rec.flow = e.flow;
    rec.created = now_;
    rec.path.push_back(index(flow.src));
    packets_.push_back(std::move(rec));
    const Data d{id, index(flow.src), index(flow.dst), 0};
    apply(index(flow.src), aodv_send(nodes_[index(flow.src)], d, now_, aodv_));

    const auto& times = send_times_[e.flow];
    if (e.k + 1 < times.size()) push(times[e.k + 1], CbrTick{e.flow, e.k + 1});
  }

  void handle(const RreqTimeout& e) { apply(e.node, aodv_timeout(nodes_[e.node], e.dest, e.attempt, now_, aodv_)); }

  void handle(const DelayedFrame& e) {
    auto it = parked_.find(e.frame);
    auto f = std::move(it->second);
    parked_.erase(it);
    enqueue(e.node, std::move(f));
  }

  void handle(const MacAttempt& e) {
    auto& mac = macs_[e.node];
    if (mac.control.empty() && mac.data.empty()) {
      mac.busy = false;
      return;
    }
    // Carrier sense: frames started in an earlier slot are audible.
    const auto self = positions(now_)[e.node];
    double busy_until = -1.0;
    prune();
    for (const auto& a : air_) {
      const auto& tx = a.tx;
      if (tx.end <= now_ || tx.start >= now_ - kTimeEps) continue;
      if (tx.sender == e.node || in_range(tx.sender_pos, self, radio_.sense_range()))
        busy_until = std::max(busy_until, tx.end);
    }
    if (busy_until > 0) {
      push(busy_until + backoff(e.node), MacAttempt{e.node});
      return;
    }
    auto& q = mac.control.empty() ? mac.data : mac.control;
    Frame f = std::move(q.front());
    q.pop_front();
    const double airtime = radio_.airtime(f.size);
    longest_airtime_ = std::max(longest_airtime_, airtime);
    air_.push_back(OnAir{Transmission{e.node, self, now_, now_ + airtime}, std::move(f)});
    push(now_ + airtime, TxEnd{air_base_ + air_.size() - 1});
  }

  /// Forgets transmissions that ended before anything still on the air
  /// could have started.
  void prune() {
    while (!air_.empty() && air_.front().tx.end < now_ - longest_airtime_ - kTimeEps) {
      air_.pop_front();
      ++air_base_;
    }
  }

  void handle(const TxEnd& e) {
    prune();
    auto& entry = air_[e.tx - air_base_];
    const auto tx = entry.tx;
    Frame frame = std::move(entry.frame);
    concurrent_.clear();
    for (std::size_t i = 0; i < air_.size(); ++i) {
      const auto& o = air_[i].tx;
      if (air_base_ + i != e.tx && o.start < tx.end && tx.start < o.end) concurrent_.push_back(o);
    }

    const auto& pos = positions(tx.start);
    std::vector<Listener> listeners;
    if (frame.to) {
      listeners.push_back({*frame.to, pos[*frame.to]});
    } else {
      for (NodeIndex n = 0; n < pos.size(); ++n)
        if (n != tx.sender && in_range(tx.sender_pos, pos[n], radio_.tx_range)) listeners.push_back({n, pos[n]});
    }
    const auto outcome = channel_deliver(tx, listeners, concurrent_, radio_);

    const auto sender = tx.sender;
    macs_[sender].busy = false;
    if (frame.to) {
      if (outcome.front() == Reception::Received) {
        receive(*frame.to, sender, frame.msg);
      } else if (frame.retries < radio_.retry_limit) {
        ++frame.retries;
        (frame.control ? macs_[sender].control : macs_[sender].data).push_front(std::move(frame));
      } else {
        fail_unicast(sender, frame, outcome.front());
      }
    } else {
      for (std::size_t i = 0; i < listeners.size(); ++i)
        if (outcome[i] == Reception::Received) receive(listeners[i].node, sender, frame.msg);
    }
    kick(sender);
  }

  /// The sender only sees missing acknowledgements, so every exhausted
  /// unicast counts as a broken link; the cause survives in the disposition.
  void fail_unicast(NodeIndex sender, const Frame& frame, Reception last) {
    std::optional<Data> pkt;
    if (const auto* data = std::get_if<Data>(&frame.msg)) pkt = *data;
    const auto reason = last == Reception::OutOfRange ? Disposition::DroppedNoRoute : Disposition::DroppedCollision;
    apply(sender, aodv_link_failure(nodes_[sender], *frame.to, pkt, now_, aodv_, reason));
  }

  void receive(NodeIndex node, NodeIndex from, const Message& msg) {
    if (const auto* d = std::get_if<Data>(&msg)) {
      Data next = *d;
      ++next.hops;
      auto& rec = packets_[d->packet];
      rec.path.push_back(node);
      rec.hops = next.hops;
      apply(node, aodv_handle(nodes_[node], from, next, now_, aodv_));
      return;
    }
    apply(node, aodv_handle(nodes_[node], from, msg, now_, aodv_));
  }

  Frame make_frame(Message msg, std::optional<NodeIndex> to) {
    Frame f;
    f.to = to;
    if (const auto* d = std::get_if<Data>(&msg)) {
      f.control = false;
      f.size = flows_[packets_[d->packet].flow].packet_size;
    } else {
      f.size = radio_.control_size;
    }
    f.msg = std::move(msg);
    return f;
  }

  void apply(NodeIndex node, std::vector<Action> actions) {
    for (auto& a : actions) {
      std::visit(
          [&](auto& act) {
            using A = std::decay_t<decltype(act)>;
            if constexpr (std::is_same_v<A, Broadcast>) {
              auto f = make_frame(std::move(act.msg), std::nullopt);
              if (act.jitter) {
                const auto key = next_parked_++;
                parked_.emplace(key, std::move(f));
                push(now_ + macs_[node].rng.uniform(0.0, kRebroadcastJitter), DelayedFrame{node, key});
              } else {
                enqueue(node, std::move(f));
              }
            } else if constexpr (std::is_same_v<A, Unicast>) {
              enqueue(node, make_frame(std::move(act.msg), act.next_hop));
            } else if constexpr (std::is_same_v<A, DropData>) {
              finalize(act.packet.packet, act.reason);
            } else if constexpr (std::is_same_v<A, DeliverData>) {
              finalize(act.packet.packet, Disposition::Delivered);
            } else if constexpr (std::is_same_v<A, ScheduleTimeout>) {
              push(now_ + act.delay, RreqTimeout{node, act.dest, act.attempt});
            }
          },
          a);
    }
  }

  void enqueue(NodeIndex node, Frame f) {
    auto& mac = macs_[node];
    if (!f.control && mac.data.size() >= radio_.queue_capacity) {
      finalize(std::get<Data>(f.msg).packet, Disposition::DroppedQueueOverflow);
      return;
    }
    (f.control ? mac.control : mac.data).push_back(std::move(f));
    kick(node);
  }

  void kick(NodeIndex node) {
    auto& mac = macs_[node];
    if (mac.busy || (mac.control.empty() && mac.data.empty())) return;
    mac.busy = true;
    push(now_ + backoff(node), MacAttempt{node});
  }

  const mobility::MobilityTrace& trace_;
  std::span<const CbrFlowConfig> flows_;
  RadioParams radio_;
  AodvParams aodv_;
  double end_;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;

  std::vector<AodvNodeState> nodes_;
  std::vector<Mac> macs_;
  std::vector<std::vector<double>> send_times_;
  std::vector<PacketRecord> packets_;
  std::deque<OnAir> air_;  // recent transmissions in start order
  std::size_t air_base_ = 0;
  double longest_airtime_ = 0.0;
  std::vector<Transmission> concurrent_;  // scratch
  std::map<std::uint64_t, Frame> parked_;
  std::uint64_t next_parked_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;

  std::vector<Vec2> cached_;
  double cached_time_ = -1.0;
};

}  // namespace

SimResult run_network_sim(const mobility::MobilityTrace& trace, std::span<const CbrFlowConfig> flows,
                          const RadioParams& radio, std::uint64_t seed, const AodvParams& aodv) {
  return Simulator(trace, flows, radio, seed, aodv).run();
}

}  // namespace hybrist::net
