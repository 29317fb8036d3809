#include <fmt/format.h>

#include "hybrist/network_sim.hpp"

namespace hybrist::net {

namespace {

bool is_drop(Disposition d) { return d != Disposition::Delivered && d != Disposition::InFlightAtEnd; }

}  // namespace

Metrics compute_metrics(std::span<const PacketRecord> records) {
  if (records.empty()) throw EmptyInput("no packet records");
  Metrics m;
  std::size_t delivered = 0;
  double delay = 0.0;
  for (const auto& r : records) {
    if (r.disposition == Disposition::Delivered) {
      ++delivered;
      delay += *r.delivered_at - r.created;
    } else if (is_drop(r.disposition)) {
      ++m.loss;
    }
  }
  m.pdf = static_cast<double>(delivered) / static_cast<double>(records.size());
  m.mean_e2e_delay = delivered > 0 ? delay / static_cast<double>(delivered) : 0.0;
  return m;
}

MetricsReport summarize(std::span<const PacketRecord> records, std::size_t flow_count) {
  MetricsReport r;
  r.per_flow.resize(flow_count);
  std::vector<double> flow_delay(flow_count, 0.0);
  double delay = 0.0;
  for (const auto& p : records) {
    ++r.sent;
    auto* f = p.flow < flow_count ? &r.per_flow[p.flow] : nullptr;
    if (f) ++f->sent;
    switch (p.disposition) {
      case Disposition::Delivered:
        ++r.delivered;
        delay += *p.delivered_at - p.created;
        if (f) {
          ++f->delivered;
          flow_delay[p.flow] += *p.delivered_at - p.created;
        }
        break;
      case Disposition::InFlightAtEnd: ++r.in_flight; break;
      case Disposition::DroppedNoRoute: ++r.dropped_no_route; break;
      case Disposition::DroppedCollision: ++r.dropped_collision; break;
      case Disposition::DroppedTtl: ++r.dropped_ttl; break;
      case Disposition::DroppedQueueOverflow: ++r.dropped_queue; break;
    }
    if (is_drop(p.disposition)) {
      ++r.dropped;
      if (f) ++f->dropped;
    }
  }
  r.pdf = r.sent > 0 ? static_cast<double>(r.delivered) / static_cast<double>(r.sent) : 0.0;
  r.mean_e2e_delay = r.delivered > 0 ? delay / static_cast<double>(r.delivered) : 0.0;
  for (std::size_t i = 0; i < flow_count; ++i) {
    auto& f = r.per_flow[i];
    f.pdf = f.sent > 0 ? static_cast<double>(f.delivered) / static_cast<double>(f.sent) : 0.0;
    f.mean_e2e_delay = f.delivered > 0 ? flow_delay[i] / static_cast<double>(f.delivered) : 0.0;
  }
  return r;
}

std::string csv_header() { return "model,vehicles,cbr_sources,tx_range,seed,sent,delivered,dropped,pdf,mean_delay_s"; }

std::string csv_row(const MetricsReport& r) {
  return fmt::format("{},{},{},{:.6f},{},{},{},{},{:.6f},{:.6f}", to_string(r.key.model), r.key.vehicles,
                     r.key.cbr_sources, r.key.tx_range, r.key.seed, r.sent, r.delivered, r.dropped, r.pdf,
                     r.mean_e2e_delay);
}

}  // namespace hybrist::net
