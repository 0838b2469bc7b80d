#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "ssbump/geo.hpp"
#include "ssbump/protocol.hpp"

namespace ssbump::bump {

// Dilatant-fluid layer parameters. The mixture behaves as a liquid below the
// critical shear rate and effectively as a solid above it; shear rate is
// proxied by vehicle speed over layer thickness.
struct OobleckParams {
  double layer_thickness_m = 0.05;
  double critical_speed_mps = 8.33;  // defaults to the bump's speed limit
  double consistency_K = 1.0;        // viscosity scale, model units
  double flow_index_n = 2.0;         // > 1: shear-thickening
  double solid_crossing_speed_mps = 3.33;    // ~12 km/h over the hardened layer
  double penalty_crossing_speed_mps = 2.22;  // ~8 km/h over the penalty height

  void validate() const {
    if (!(layer_thickness_m > 0)) {
      throw std::invalid_argument("layer_thickness_m must be > 0");
    }
    if (!(flow_index_n > 1.0)) {
      throw std::invalid_argument("flow_index_n must be > 1 (dilatant)");
    }
    if (!(penalty_crossing_speed_mps > 0 &&
          penalty_crossing_speed_mps < solid_crossing_speed_mps &&
          solid_crossing_speed_mps < critical_speed_mps)) {
      throw std::invalid_argument(
          "require 0 < penalty_crossing < solid_crossing < critical_speed");
    }
  }
};

struct BumpConfig {
  std::uint32_t bump_id = 0;
  geo::GeoPoint position;
  double deflate_eta_threshold_s = 30.0;
  double lower_duration_s = 3.0;
  double raise_duration_s = 3.0;
  double nominal_height_m = 0.08;
  double penalty_height_m = 0.12;
  double speed_limit_mps = 8.33;  // 30 km/h
  OobleckParams oobleck;
  double approach_cone_deg = geo::kDefaultConeHalfAngleDeg;
  double pass_radius_m = 20.0;
  double beacon_timeout_s = 15.0;  // 3x the default beacon interval
  double sensor_offset_m = 30.0;   // speed sensor this far upstream
  double fallback_speed_mps = 15.0;  // assumed EV speed until two beacons arrive

  void validate() const {
    if (bump_id == 0) throw std::invalid_argument("bump_id must be > 0");
    if (!(penalty_height_m > nominal_height_m && nominal_height_m > 0)) {
      throw std::invalid_argument("require penalty_height > nominal_height > 0");
    }
    if (deflate_eta_threshold_s < lower_duration_s) {
      throw std::invalid_argument(
          "deflate_eta_threshold_s must be >= lower_duration_s");
    }
    if (!(lower_duration_s > 0 && raise_duration_s > 0)) {
      throw std::invalid_argument("transition durations must be > 0");
    }
    if (!(beacon_timeout_s > 0)) {
      throw std::invalid_argument("beacon_timeout_s must be > 0");
    }
    if (!(pass_radius_m > 0)) {
      throw std::invalid_argument("pass_radius_m must be > 0");
    }
    if (!(sensor_offset_m > 0)) {
      throw std::invalid_argument("sensor_offset_m must be > 0");
    }
    if (!(speed_limit_mps > 0)) {
      throw std::invalid_argument("speed_limit_mps must be > 0");
    }
    if (!(fallback_speed_mps >= geo::kStationarySpeedMps)) {
      throw std::invalid_argument("fallback_speed_mps below stationary threshold");
    }
    oobleck.validate();
  }
};

enum class Mode : std::uint8_t {
  Raised = 0,
  Lowering = 1,
  Lowered = 2,
  Raising = 3,
  PenaltyRaised = 4,
};

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Raised: return "Raised";
    case Mode::Lowering: return "Lowering";
    case Mode::Lowered: return "Lowered";
    case Mode::Raising: return "Raising";
    case Mode::PenaltyRaised: return "PenaltyRaised";
  }
  return "?";
}

struct BumpState {
  Mode mode = Mode::Raised;
  std::optional<double> transition_started_at;  // set iff Lowering/Raising
  std::optional<std::uint32_t> active_ev;       // set => Lowering or Lowered
  std::optional<double> last_beacon_at;
  std::optional<double> prev_ev_distance_m;
  double pending_fastest_mps = 0.0;  // fastest vehicle between sensor and bump

  bool is_consistent() const {
    const bool transitioning = mode == Mode::Lowering || mode == Mode::Raising;
    if (transition_started_at.has_value() != transitioning) return false;
    if (active_ev && mode != Mode::Lowering && mode != Mode::Lowered) return false;
    return true;
  }
};

// LiDAR speed sample taken sensor_offset_m upstream of the bump.
struct SpeedReading {
  std::uint32_t vehicle_ref = 0;
  double speed_mps = 0.0;
  double at_time_s = 0.0;
};

namespace detail {

inline BumpState start_lowering(BumpState s, std::uint32_t ev_id, double now) {
  s.mode = Mode::Lowering;
  s.transition_started_at = now;
  s.active_ev = ev_id;
  return s;
}

inline BumpState start_raising(BumpState s, double now) {
  s.mode = Mode::Raising;
  s.transition_started_at = now;
  s.active_ev.reset();
  s.prev_ev_distance_m.reset();
  return s;
}

}  // namespace detail

// Beacon handler. prev_beacon is the previous delivered beacon of the same
// vehicle (nullptr until two have arrived); speed falls back to
// cfg.fallback_speed_mps while only one fix exists.
inline BumpState on_beacon(BumpState state, const BumpConfig& cfg,
                           const proto::EvBeacon& beacon,
                           const proto::EvBeacon* prev_beacon, double now) {
  const double distance_m =
      geo::haversine_distance_m(beacon.position, cfg.position);

  // Pass detection: was within pass_radius_m at the previous beacon and is now
  // receding -- the vehicle has crossed, so start returning to nominal.
  if (state.active_ev && *state.active_ev == beacon.vehicle_id &&
      state.prev_ev_distance_m && *state.prev_ev_distance_m <= cfg.pass_radius_m &&
      distance_m > *state.prev_ev_distance_m) {
    state = detail::start_raising(std::move(state), now);
    state.last_beacon_at = now;
    state.prev_ev_distance_m = distance_m;
    return state;
  }

  // Deflation trigger. Raising is included so a fresh approach (or a second
  // vehicle right behind the first) can reverse an in-flight raise; an active
  // lowering/lowered session is left alone.
  if (state.mode == Mode::Raised || state.mode == Mode::PenaltyRaised ||
      state.mode == Mode::Raising) {
    double speed_mps = cfg.fallback_speed_mps;
    if (prev_beacon != nullptr) {
      speed_mps = proto::estimate_speed(*prev_beacon, beacon);
    }
    const double eta = geo::eta_seconds(beacon.position, speed_mps, cfg.position);
    if (proto::is_approaching(beacon, cfg.position, cfg.approach_cone_deg) &&
        eta <= cfg.deflate_eta_threshold_s) {
      state = detail::start_lowering(std::move(state), beacon.vehicle_id, now);
    }
  }

  state.last_beacon_at = now;
  state.prev_ev_distance_m = distance_m;
  return state;
}

// Fastest-vehicle rule: track the max speed seen since the platoon last
// cleared; a speeder hardens a Raised bump to the penalty height. An EV
// session (Lowering/Lowered) is never disturbed by speed readings.
inline BumpState on_speed_reading(BumpState state, const BumpConfig& cfg,
                                  const SpeedReading& reading) {
  if (reading.speed_mps < 0) {
    throw std::invalid_argument("speed reading must be >= 0");
  }
  state.pending_fastest_mps = std::max(state.pending_fastest_mps, reading.speed_mps);
  if (state.pending_fastest_mps > cfg.speed_limit_mps &&
      state.mode == Mode::Raised) {
    state.mode = Mode::PenaltyRaised;
  }
  return state;
}

// The last tracked vehicle between sensor and bump has cleared: reset the
// fastest-vehicle window and drop any penalty height.
inline BumpState vehicle_crossed(BumpState state, const BumpConfig&) {
  state.pending_fastest_mps = 0.0;
  if (state.mode == Mode::PenaltyRaised) state.mode = Mode::Raised;
  return state;
}

// Slack for deadline comparisons: (t0 + d) - t0 can undershoot d by one ulp
// of the absolute time, which tops out near 5e-7 s at the 32-bit-timestamp
// horizon. Without the slack a transition could miss its own completion
// deadline.
inline constexpr double kTickSlackS = 1e-6;

// Advance time-driven behavior: transition completion, then the
// beacon-timeout failsafe. At most one step per call; callers loop to a
// fixpoint if they need cascaded transitions.
inline BumpState tick(BumpState state, const BumpConfig& cfg, double now) {
  if (state.transition_started_at) {
    const double elapsed = now - *state.transition_started_at;
    if (state.mode == Mode::Lowering &&
        elapsed >= cfg.lower_duration_s - kTickSlackS) {
      state.mode = Mode::Lowered;
      state.transition_started_at.reset();
      return state;
    }
    if (state.mode == Mode::Raising &&
        elapsed >= cfg.raise_duration_s - kTickSlackS) {
      state.mode = Mode::Raised;
      state.transition_started_at.reset();
      return state;
    }
  }
  // Failsafe: a silent EV must not leave the bump down.
  if ((state.mode == Mode::Lowering || state.mode == Mode::Lowered) &&
      state.last_beacon_at &&
      now - *state.last_beacon_at >= cfg.beacon_timeout_s - kTickSlackS) {
    state = detail::start_raising(std::move(state), now);
  }
  return state;
}

// Surface height above road level at time `now`. Transitions interpolate
// linearly between 0 and the nominal height.
inline double height_m(const BumpState& state, const BumpConfig& cfg, double now) {
  switch (state.mode) {
    case Mode::Raised: return cfg.nominal_height_m;
    case Mode::PenaltyRaised: return cfg.penalty_height_m;
    case Mode::Lowered: return 0.0;
    case Mode::Lowering: {
      const double f =
          std::clamp((now - *state.transition_started_at) / cfg.lower_duration_s,
                     0.0, 1.0);
      return cfg.nominal_height_m * (1.0 - f);
    }
    case Mode::Raising: {
      const double f =
          std::clamp((now - *state.transition_started_at) / cfg.raise_duration_s,
                     0.0, 1.0);
      return cfg.nominal_height_m * f;
    }
  }
  return cfg.nominal_height_m;
}

// Power-law effective viscosity mu = K * shear_rate^(n-1). With n = 2 the
// viscosity is exactly proportional to the shear rate.
inline double viscosity(double shear_rate, const OobleckParams& p) {
  if (shear_rate < 0) {
    throw std::invalid_argument("shear_rate must be >= 0");
  }
  return p.consistency_K * std::pow(shear_rate, p.flow_index_n - 1.0);
}

// Speed at which a vehicle actually crosses the bump. A fully lowered bump
// has no effect. Over a raised layer the fluid stays liquid up to the
// critical speed (smooth ride at lawful speed); above it the layer hardens
// and the vehicle is forced down to the solid-layer speed, or the penalty
// speed if the bump is at penalty height.
inline double crossing_speed(double approach_speed_mps, const BumpState& state,
                             const BumpConfig& cfg, double now) {
  if (approach_speed_mps < 0) {
    throw std::invalid_argument("approach speed must be >= 0");
  }
  if (height_m(state, cfg, now) == 0.0) return approach_speed_mps;
  if (approach_speed_mps <= cfg.oobleck.critical_speed_mps) {
    return approach_speed_mps;
  }
  return state.mode == Mode::PenaltyRaised
             ? cfg.oobleck.penalty_crossing_speed_mps
             : cfg.oobleck.solid_crossing_speed_mps;
}

}  // namespace ssbump::bump
