#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssbump/traffic.hpp"

namespace ssbump::sim {

enum class ReportFormat { Structured, Tabular };

struct TransitionLogEntry {
  double at_s = 0.0;
  std::uint32_t bump_id = 0;
  std::string from;
  std::string to;
};

struct EvDelayEntry {
  std::uint32_t vehicle_id = 0;
  std::uint32_t bump_id = 0;
  double delay_s = 0.0;
};

struct PacketStats {
  std::uint64_t beacon_sent = 0;
  std::uint64_t beacon_delivered = 0;
  std::uint64_t beacon_lost = 0;
  std::uint64_t spoof_rejected = 0;
  std::uint64_t uplink_sent = 0;
  std::uint64_t uplink_delivered = 0;
  std::uint64_t uplink_lost = 0;
};

struct TypeSummary {
  std::uint64_t count = 0;
  double mean_transit_s = 0.0;
  double mean_net_delay_s = 0.0;
};

struct Report {
  std::uint64_t seed = 0;
  double duration_s = 0.0;
  std::vector<traffic::DelayRecord> records;
  std::map<std::uint32_t, std::vector<double>> beacon_tx;  // EV id -> tx times
  std::vector<TransitionLogEntry> transitions;
  std::vector<EvDelayEntry> ev_delays;  // one per EV x bump crossed
  double ev_total_delay_s = 0.0;
  PacketStats packets;
  std::optional<TypeSummary> conventional;
  std::optional<TypeSummary> ssbump;
  std::optional<double> reduction_percent;

  // Fills the aggregates from `records` and `ev_delays`; called once at the
  // end of a run.
  void finalize() {
    TypeSummary conv, ss;
    for (const auto& r : records) {
      TypeSummary& t =
          r.bump_type == traffic::BumpKind::Conventional ? conv : ss;
      t.count += 1;
      t.mean_transit_s += r.transit_time_s;
      t.mean_net_delay_s += r.net_delay_s;
    }
    auto close = [](TypeSummary& t) {
      if (t.count > 0) {
        t.mean_transit_s /= static_cast<double>(t.count);
        t.mean_net_delay_s /= static_cast<double>(t.count);
      }
    };
    close(conv);
    close(ss);
    conventional = conv.count > 0 ? std::optional(conv) : std::nullopt;
    ssbump = ss.count > 0 ? std::optional(ss) : std::nullopt;
    if (conventional && ssbump && conventional->mean_transit_s > 0) {
      reduction_percent =
          (1.0 - ssbump->mean_transit_s / conventional->mean_transit_s) * 100.0;
    } else {
      reduction_percent.reset();
    }
    ev_total_delay_s = 0.0;
    for (const auto& e : ev_delays) ev_total_delay_s += e.delay_s;
  }
};

// Zone delay an emergency vehicle incurred at one bump during the run.
inline double ev_response_delay(const Report& report, std::uint32_t ev_id,
                                std::uint32_t bump_id) {
  for (const auto& e : report.ev_delays) {
    if (e.vehicle_id == ev_id && e.bump_id == bump_id) return e.delay_s;
  }
  throw std::out_of_range("no crossing recorded for ev " + std::to_string(ev_id) +
                          " at bump " + std::to_string(bump_id));
}

namespace detail {

inline std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline nlohmann::json to_json(const traffic::DelayRecord& r) {
  return nlohmann::json{
      {"bump_id", r.bump_id},
      {"bump_type", traffic::bump_kind_name(r.bump_type)},
      {"crossed_at_s", r.crossed_at_s},
      {"free_flow_time_s", r.free_flow_time_s},
      {"net_delay_s", r.net_delay_s},
      {"transit_time_s", r.transit_time_s},
      {"vehicle_id", r.vehicle_id},
      {"vehicle_kind", traffic::vehicle_kind_name(r.vehicle_kind)},
  };
}

inline nlohmann::json to_json(const Report& rep) {
  nlohmann::json j;
  j["duration_s"] = rep.duration_s;
  j["seed"] = rep.seed;

  nlohmann::json tx = nlohmann::json::object();
  for (const auto& [id, times] : rep.beacon_tx) tx[std::to_string(id)] = times;
  j["beacon_tx"] = tx;

  nlohmann::json trans = nlohmann::json::array();
  for (const auto& t : rep.transitions) {
    trans.push_back({{"at_s", t.at_s},
                     {"bump_id", t.bump_id},
                     {"from", t.from},
                     {"to", t.to}});
  }
  j["transitions"] = trans;

  nlohmann::json evd = nlohmann::json::array();
  for (const auto& e : rep.ev_delays) {
    evd.push_back({{"bump_id", e.bump_id},
                   {"delay_s", e.delay_s},
                   {"vehicle_id", e.vehicle_id}});
  }
  j["ev_delays"] = evd;
  j["ev_total_delay_s"] = rep.ev_total_delay_s;

  j["packets"] = {{"beacon_delivered", rep.packets.beacon_delivered},
                  {"beacon_lost", rep.packets.beacon_lost},
                  {"beacon_sent", rep.packets.beacon_sent},
                  {"spoof_rejected", rep.packets.spoof_rejected},
                  {"uplink_delivered", rep.packets.uplink_delivered},
                  {"uplink_lost", rep.packets.uplink_lost},
                  {"uplink_sent", rep.packets.uplink_sent}};

  nlohmann::json means = nlohmann::json::object();
  auto summary = [](const TypeSummary& t) {
    return nlohmann::json{{"count", t.count},
                          {"mean_net_delay_s", t.mean_net_delay_s},
                          {"mean_transit_s", t.mean_transit_s}};
  };
  if (rep.conventional) means["conventional"] = summary(*rep.conventional);
  if (rep.ssbump) means["ssbump"] = summary(*rep.ssbump);
  if (rep.reduction_percent) means["reduction_percent"] = *rep.reduction_percent;
  j["means"] = means;

  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : rep.records) recs.push_back(to_json(r));
  j["records"] = recs;
  return j;
}

}  // namespace detail

// Structured: canonical key-sorted document, stable for byte-diffing.
// Tabular: per-vehicle record table plus the per-bump-type summary rows.
inline std::string emit_report(const Report& rep, ReportFormat format) {
  if (format == ReportFormat::Structured) {
    return detail::to_json(rep).dump(2) + "\n";
  }
  std::string out =
      "vehicle_id,vehicle_kind,bump_id,bump_type,crossed_at_s,"
      "transit_time_s,free_flow_time_s,net_delay_s\n";
  for (const auto& r : rep.records) {
    out += std::to_string(r.vehicle_id);
    out += ',';
    out += traffic::vehicle_kind_name(r.vehicle_kind);
    out += ',';
    out += std::to_string(r.bump_id);
    out += ',';
    out += traffic::bump_kind_name(r.bump_type);
    out += ',';
    out += detail::fmt6(r.crossed_at_s);
    out += ',';
    out += detail::fmt6(r.transit_time_s);
    out += ',';
    out += detail::fmt6(r.free_flow_time_s);
    out += ',';
    out += detail::fmt6(r.net_delay_s);
    out += '\n';
  }
  out += "\nbump_type,count,mean_transit_s,mean_net_delay_s\n";
  auto row = [&](const char* name, const TypeSummary& t) {
    out += name;
    out += ',';
    out += std::to_string(t.count);
    out += ',';
    out += detail::fmt6(t.mean_transit_s);
    out += ',';
    out += detail::fmt6(t.mean_net_delay_s);
    out += '\n';
  };
  if (rep.conventional) row("conventional", *rep.conventional);
  if (rep.ssbump) row("ssbump", *rep.ssbump);
  if (rep.reduction_percent) {
    out += "reduction_percent," + detail::fmt6(*rep.reduction_percent) + "\n";
  }
  return out;
}

}  // namespace ssbump::sim
