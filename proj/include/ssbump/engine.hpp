#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "ssbump/bump.hpp"
#include "ssbump/geo.hpp"
#include "ssbump/protocol.hpp"
#include "ssbump/radio.hpp"
#include "ssbump/report.hpp"
#include "ssbump/rng.hpp"
#include "ssbump/scenario.hpp"
#include "ssbump/traffic.hpp"

namespace ssbump::sim {

enum class EventKind : std::uint8_t {
  BeaconTx,
  BeaconRx,
  SpeedReading,
  VehicleEntersZone,
  VehicleCrossesBump,
  VehicleExitsZone,
  ActuationTick,
  TelemetryUplink,
  EvDispatch,
  SimEnd,
};

struct Event {
  double time_s = 0.0;
  std::uint64_t seq = 0;  // insertion order; breaks simultaneity ties
  EventKind kind = EventKind::SimEnd;
  std::uint32_t vehicle_id = 0;      // vehicle-scoped events
  int bump_index = -1;               // bump-scoped events
  std::vector<std::uint8_t> frame;   // BeaconRx / TelemetryUplink payload
  double reading_mps = 0.0;          // SpeedReading
  bool synthetic = false;            // injected by the RFID reader line
};

// One deterministic run of one scenario. Construct, optionally inject debug
// frames, then call run() exactly once.
class Engine {
 public:
  Engine(Scenario scenario, std::uint64_t seed)
      : sc_(std::move(scenario)),
        seed_(seed),
        arrivals_(seed, "arrivals"),
        speeds_(seed, "speeds"),
        compliance_(seed, "compliance"),
        link_(seed, "link"),
        uplink_(seed, "uplink") {
    report_.seed = seed_;
    report_.duration_s = sc_.duration_s;
    for (auto& b : sc_.bumps) {
      // Anchor the controller's coordinates onto the road; scenarios only
      // give a chainage.
      b.cfg.position = sc_.road.point_at(b.chainage_m);
      bumps_.push_back(BumpRt{b, bump::BumpState{}, b.cfg.position, 0});
      prev_beacon_.emplace_back();
    }
    for (const auto& ev : sc_.evs) ev_ids_.insert(ev.id);
    beacon_airtime_s_ =
        radio::airtime_ms(sc_.lora, static_cast<int>(proto::kBeaconFrameSize)) /
        1000.0;
  }

  // Queue a raw frame for a bump's radio at an absolute time (test hook for
  // spoofed/corrupted traffic).
  void inject_frame(double time_s, int bump_index, std::vector<std::uint8_t> frame) {
    Event e;
    e.time_s = time_s;
    e.kind = EventKind::BeaconRx;
    e.bump_index = bump_index;
    e.frame = std::move(frame);
    push(std::move(e));
  }

  Report run() {
    spawn_civilians();
    for (const auto& ev : sc_.evs) {
      Event e;
      e.time_s = ev.dispatch_time_s;
      e.kind = EventKind::EvDispatch;
      e.vehicle_id = ev.id;
      push(std::move(e));
    }
    {
      Event end;
      end.time_s = sc_.duration_s;
      end.kind = EventKind::SimEnd;
      push(std::move(end));
    }

    while (!queue_.empty()) {
      Event e = queue_.top();
      queue_.pop();
      now_ = e.time_s;
      if (e.kind == EventKind::SimEnd) break;
      dispatch(e);
    }
    report_.finalize();
    return std::move(report_);
  }

  const Scenario& scenario() const { return sc_; }

 private:
  struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time_s != b.time_s) return a.time_s > b.time_s;
      return a.seq > b.seq;
    }
  };

  struct Vehicle {
    std::uint32_t id = 0;
    traffic::VehicleKind kind = traffic::VehicleKind::Civilian;
    double cruise_mps = 0.0;
    double spawn_s = 0.0;          // dispatch time for EVs
    double start_chainage_m = 0.0;
    double beacon_interval_s = 0.0;  // EVs only
    bool compliant = true;
  };

  struct BumpRt {
    BumpSpec spec;
    bump::BumpState state;
    geo::GeoPoint pos;
    int tracked_civilians = 0;  // between speed sensor and zone exit
  };

  void push(Event e) {
    if (e.time_s < now_) {
      throw std::logic_error("internal invariant: event scheduled in the past");
    }
    e.seq = next_seq_++;
    queue_.push(std::move(e));
  }

  // Time at which a vehicle reaches the given chainage, travelling at cruise
  // speed from its start. Event timing uses the cruise trajectory; zone
  // slowdowns are applied analytically to the transit metric.
  double time_at(const Vehicle& v, double chainage_m) const {
    return v.spawn_s + (chainage_m - v.start_chainage_m) / v.cruise_mps;
  }

  double approach_speed(const Vehicle& v, const bump::BumpConfig& cfg) const {
    if (v.kind == traffic::VehicleKind::Emergency) return v.cruise_mps;
    return v.compliant ? std::min(v.cruise_mps, cfg.speed_limit_mps)
                       : v.cruise_mps;
  }

  void spawn_civilians() {
    const auto& civ = sc_.civilians;
    if (!civ.any()) return;
    const double window = civ.window_s.value_or(sc_.duration_s);
    std::vector<double> times;
    if (civ.count) {
      times = traffic::spread_arrivals(*civ.count, window, arrivals_);
    } else {
      times = traffic::generate_arrivals(*civ.rate_per_s, window, arrivals_);
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
      Vehicle v;
      v.id = kCivilianIdBase + static_cast<std::uint32_t>(i);
      v.kind = traffic::VehicleKind::Civilian;
      v.cruise_mps = speeds_.uniform(civ.speed_min_mps, civ.speed_max_mps);
      v.spawn_s = times[i];
      v.compliant = compliance_.bernoulli(civ.compliance);
      vehicles_[v.id] = v;
      schedule_vehicle_events(vehicles_[v.id]);
    }
  }

  void schedule_vehicle_events(const Vehicle& v) {
    for (std::size_t i = 0; i < bumps_.size(); ++i) {
      const auto& b = bumps_[i].spec;
      const bool smart = b.kind == traffic::BumpKind::SSBump;
      auto at = [&](EventKind kind, double chainage) {
        if (chainage < v.start_chainage_m) return;  // started past this point
        Event e;
        e.time_s = time_at(v, chainage);
        e.kind = kind;
        e.vehicle_id = v.id;
        e.bump_index = static_cast<int>(i);
        if (kind == EventKind::SpeedReading) {
          e.reading_mps = approach_speed(v, b.cfg);
        }
        push(std::move(e));
      };
      if (smart && v.kind == traffic::VehicleKind::Civilian) {
        at(EventKind::SpeedReading, b.chainage_m - b.cfg.sensor_offset_m);
      }
      at(EventKind::VehicleEntersZone, b.chainage_m - sc_.zone.upstream_m);
      at(EventKind::VehicleCrossesBump, b.chainage_m);
      at(EventKind::VehicleExitsZone, b.chainage_m + sc_.zone.downstream_m);
    }
  }

  void dispatch(const Event& e) {
    switch (e.kind) {
      case EventKind::EvDispatch: on_ev_dispatch(e); break;
      case EventKind::BeaconTx: on_beacon_tx(e); break;
      case EventKind::BeaconRx: on_beacon_rx(e); break;
      case EventKind::SpeedReading: on_speed_reading(e); break;
      case EventKind::VehicleEntersZone: break;  // bookkeeping only
      case EventKind::VehicleCrossesBump: on_cross(e); break;
      case EventKind::VehicleExitsZone: on_exit(e); break;
      case EventKind::ActuationTick: on_tick(e); break;
      case EventKind::TelemetryUplink: on_telemetry(e); break;
      case EventKind::SimEnd: break;
    }
  }

  void on_ev_dispatch(const Event& e) {
    const EvSpec* spec = nullptr;
    for (const auto& s : sc_.evs) {
      if (s.id == e.vehicle_id) spec = &s;
    }
    Vehicle v;
    v.id = spec->id;
    v.kind = traffic::VehicleKind::Emergency;
    v.cruise_mps = spec->cruise_speed_mps;
    v.spawn_s = spec->dispatch_time_s;
    v.start_chainage_m = spec->start_chainage_m;
    v.beacon_interval_s = spec->beacon_interval_s;
    v.compliant = false;
    vehicles_[v.id] = v;
    schedule_vehicle_events(vehicles_[v.id]);

    Event tx;
    tx.time_s = e.time_s;
    tx.kind = EventKind::BeaconTx;
    tx.vehicle_id = v.id;
    push(std::move(tx));

    if (sc_.rfid_fallback) {
      for (std::size_t i = 0; i < bumps_.size(); ++i) {
        const auto& b = bumps_[i].spec;
        if (b.kind != traffic::BumpKind::SSBump) continue;
        const double reader_chainage = b.chainage_m - sc_.rfid_offset_m;
        if (reader_chainage < v.start_chainage_m) continue;
        const double t = time_at(vehicles_[v.id], reader_chainage);
        proto::EvBeacon synth;
        synth.vehicle_id = v.id;
        synth.position = sc_.road.point_at(reader_chainage);
        synth.heading = geo::make_heading(sc_.road.bearing_deg);
        synth.timestamp_s = clamp_ts(t);
        const auto frame = proto::encode_beacon(synth);
        Event rx;
        rx.time_s = t;
        rx.kind = EventKind::BeaconRx;
        rx.vehicle_id = v.id;
        rx.bump_index = static_cast<int>(i);
        rx.frame.assign(frame.begin(), frame.end());
        rx.synthetic = true;
        push(std::move(rx));
      }
    }
  }

  void on_beacon_tx(const Event& e) {
    const Vehicle& v = vehicles_.at(e.vehicle_id);
    const double chainage =
        v.start_chainage_m + (e.time_s - v.spawn_s) * v.cruise_mps;
    if (chainage > sc_.road.length_m + 1e-9) return;  // vehicle left the road

    proto::EvBeacon b;
    b.vehicle_id = v.id;
    b.position = sc_.road.point_at(chainage);
    b.heading = geo::make_heading(sc_.road.bearing_deg);
    b.timestamp_s = clamp_ts(e.time_s);
    const auto frame = proto::encode_beacon(b);
    report_.beacon_tx[v.id].push_back(e.time_s);

    for (std::size_t i = 0; i < bumps_.size(); ++i) {
      if (bumps_[i].spec.kind != traffic::BumpKind::SSBump) continue;
      const double dist = geo::haversine_distance_m(b.position, bumps_[i].pos);
      report_.packets.beacon_sent++;
      if (radio::deliver(sc_.lora, dist, link_)) {
        report_.packets.beacon_delivered++;
        Event rx;
        rx.time_s = e.time_s + beacon_airtime_s_;
        rx.kind = EventKind::BeaconRx;
        rx.vehicle_id = v.id;
        rx.bump_index = static_cast<int>(i);
        rx.frame.assign(frame.begin(), frame.end());
        push(std::move(rx));
      } else {
        report_.packets.beacon_lost++;
      }
    }

    Event next;
    next.time_s = e.time_s + v.beacon_interval_s;
    const double next_chainage =
        v.start_chainage_m + (next.time_s - v.spawn_s) * v.cruise_mps;
    if (next_chainage <= sc_.road.length_m + 1e-9) {
      next.kind = EventKind::BeaconTx;
      next.vehicle_id = v.id;
      push(std::move(next));
    }
  }

  void on_beacon_rx(const Event& e) {
    BumpRt& rt = bumps_[static_cast<std::size_t>(e.bump_index)];
    proto::EvBeacon b;
    try {
      auto decoded = proto::decode_frame(e.frame);
      if (!std::holds_alternative<proto::EvBeacon>(decoded)) {
        report_.packets.spoof_rejected++;
        return;
      }
      b = std::get<proto::EvBeacon>(decoded);
    } catch (const proto::DecodeError&) {
      report_.packets.spoof_rejected++;
      return;
    }
    if (!ev_ids_.count(b.vehicle_id)) {
      report_.packets.spoof_rejected++;
      return;
    }

    const proto::EvBeacon* prev = nullptr;
    auto& mem = prev_beacon_[static_cast<std::size_t>(e.bump_index)];
    if (!e.synthetic) {
      if (auto it = mem.find(b.vehicle_id); it != mem.end()) prev = &it->second;
    }
    apply(e.bump_index, [&](bump::BumpState s) {
      return bump::on_beacon(std::move(s), rt.spec.cfg, b, prev, now_);
    });
    if (!e.synthetic) mem[b.vehicle_id] = b;
    schedule_deadlines(e.bump_index);
  }

  void on_speed_reading(const Event& e) {
    BumpRt& rt = bumps_[static_cast<std::size_t>(e.bump_index)];
    rt.tracked_civilians++;
    bump::SpeedReading r{e.vehicle_id, e.reading_mps, e.time_s};
    apply(e.bump_index, [&](bump::BumpState s) {
      return bump::on_speed_reading(std::move(s), rt.spec.cfg, r);
    });
  }

  void on_cross(const Event& e) {
    const Vehicle& v = vehicles_.at(e.vehicle_id);
    BumpRt& rt = bumps_[static_cast<std::size_t>(e.bump_index)];
    const auto& cfg = rt.spec.cfg;
    const double approach = approach_speed(v, cfg);

    double crossing = 0.0;
    bool penalty = false;
    if (rt.spec.kind == traffic::BumpKind::SSBump) {
      crossing = bump::crossing_speed(approach, rt.state, cfg, now_);
      penalty = rt.state.mode == bump::Mode::PenaltyRaised;
    } else {
      crossing = std::min(approach, cfg.oobleck.solid_crossing_speed_mps);
    }
    const bool hardened = crossing < approach;
    const auto regime = traffic::classify_regime(v.cruise_mps, crossing,
                                                 penalty && hardened, hardened);
    auto rec = traffic::make_delay_record(
        v.id, cfg.bump_id, v.kind, rt.spec.kind, v.cruise_mps, crossing, regime,
        sc_.traffic_model, sc_.zone, now_);
    report_.records.push_back(rec);
    if (v.kind == traffic::VehicleKind::Emergency) {
      report_.ev_delays.push_back(EvDelayEntry{v.id, cfg.bump_id, rec.net_delay_s});
    }

    // Paired control record: the same crossing under conventional-bump
    // semantics (stateless: everyone is forced down to the solid speed).
    if (rt.spec.kind == traffic::BumpKind::SSBump && sc_.conventional_control) {
      const double ccross =
          std::min(approach, cfg.oobleck.solid_crossing_speed_mps);
      const auto cregime = traffic::classify_regime(v.cruise_mps, ccross, false,
                                                    ccross < approach);
      report_.records.push_back(traffic::make_delay_record(
          v.id, cfg.bump_id, v.kind, traffic::BumpKind::Conventional,
          v.cruise_mps, ccross, cregime, sc_.traffic_model, sc_.zone, now_));
    }
  }

  void on_exit(const Event& e) {
    BumpRt& rt = bumps_[static_cast<std::size_t>(e.bump_index)];
    if (rt.spec.kind != traffic::BumpKind::SSBump) return;
    const Vehicle& v = vehicles_.at(e.vehicle_id);
    if (v.kind != traffic::VehicleKind::Civilian) return;
    if (rt.tracked_civilians > 0 && --rt.tracked_civilians == 0) {
      apply(e.bump_index, [&](bump::BumpState s) {
        return bump::vehicle_crossed(std::move(s), rt.spec.cfg);
      });
    }
  }

  void on_tick(const Event& e) {
    // Run the controller to a fixpoint: a completed transition may expose an
    // already-expired beacon timeout, and vice versa.
    for (;;) {
      const bool changed = apply(e.bump_index, [&](bump::BumpState s) {
        return bump::tick(std::move(s),
                          bumps_[static_cast<std::size_t>(e.bump_index)].spec.cfg,
                          now_);
      });
      if (!changed) break;
    }
    schedule_deadlines(e.bump_index);
  }

  void on_telemetry(const Event& e) {
    // Server-side sink; the frame must decode to what the bump sent.
    auto decoded = proto::decode_frame(e.frame);
    if (!std::holds_alternative<proto::BumpTelemetry>(decoded)) {
      throw std::logic_error("internal invariant: uplink carried a non-telemetry frame");
    }
  }

  // Runs a state-transition function; on a mode change, logs the transition
  // and emits one telemetry uplink. Returns whether the mode changed.
  template <typename Fn>
  bool apply(int bump_index, Fn&& fn) {
    BumpRt& rt = bumps_[static_cast<std::size_t>(bump_index)];
    const bump::Mode before = rt.state.mode;
    rt.state = fn(std::move(rt.state));
    if (rt.state.mode == before) return false;

    report_.transitions.push_back(TransitionLogEntry{
        now_, rt.spec.cfg.bump_id, bump::mode_name(before),
        bump::mode_name(rt.state.mode)});

    report_.packets.uplink_sent++;
    if (auto latency_ms = radio::uplink_deliver(sc_.uplink, uplink_)) {
      report_.packets.uplink_delivered++;
      proto::BumpTelemetry t;
      t.bump_id = rt.spec.cfg.bump_id;
      t.state_code = static_cast<std::uint8_t>(rt.state.mode);
      t.last_speed_reading_cmps = static_cast<std::uint16_t>(std::min<long long>(
          std::llround(rt.state.pending_fastest_mps * 100.0), 65535));
      t.timestamp_s = clamp_ts(now_);
      const auto frame = proto::encode_telemetry(t);
      Event up;
      up.time_s = now_ + *latency_ms / 1000.0;
      up.kind = EventKind::TelemetryUplink;
      up.bump_index = bump_index;
      up.frame.assign(frame.begin(), frame.end());
      push(std::move(up));
    } else {
      report_.packets.uplink_lost++;
    }
    return true;
  }

  // Schedules actuation ticks at the exact deadlines implied by the current
  // state: transition completion and beacon-timeout expiry.
  void schedule_deadlines(int bump_index) {
    const BumpRt& rt = bumps_[static_cast<std::size_t>(bump_index)];
    const auto& st = rt.state;
    const auto& cfg = rt.spec.cfg;
    auto tick_at = [&](double t) {
      Event e;
      e.time_s = std::max(t, now_);
      e.kind = EventKind::ActuationTick;
      e.bump_index = bump_index;
      push(std::move(e));
    };
    if (st.mode == bump::Mode::Lowering) {
      tick_at(*st.transition_started_at + cfg.lower_duration_s);
    } else if (st.mode == bump::Mode::Raising) {
      tick_at(*st.transition_started_at + cfg.raise_duration_s);
    }
    if ((st.mode == bump::Mode::Lowering || st.mode == bump::Mode::Lowered) &&
        st.last_beacon_at) {
      tick_at(*st.last_beacon_at + cfg.beacon_timeout_s);
    }
  }

  static std::uint32_t clamp_ts(double t) {
    if (t <= 0) return 0;
    const double r = std::floor(t + 0.5);
    return r >= 4294967295.0 ? 4294967295u
                             : static_cast<std::uint32_t>(r);
  }

  Scenario sc_;
  std::uint64_t seed_;
  RandomStream arrivals_, speeds_, compliance_, link_, uplink_;
  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::uint64_t next_seq_ = 0;
  double now_ = 0.0;
  std::vector<BumpRt> bumps_;
  std::vector<std::map<std::uint32_t, proto::EvBeacon>> prev_beacon_;
  std::map<std::uint32_t, Vehicle> vehicles_;
  std::set<std::uint32_t> ev_ids_;
  double beacon_airtime_s_ = 0.0;
  Report report_;
};

inline Report run(const Scenario& scenario, std::uint64_t seed) {
  return Engine(scenario, seed).run();
}

}  // namespace ssbump::sim
