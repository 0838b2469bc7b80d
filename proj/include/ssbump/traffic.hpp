#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ssbump/rng.hpp"

namespace ssbump::traffic {

enum class VehicleKind : std::uint8_t { Civilian = 0, Emergency = 1 };

enum class BumpKind : std::uint8_t { Conventional = 0, SSBump = 1 };

inline const char* vehicle_kind_name(VehicleKind k) {
  return k == VehicleKind::Emergency ? "emergency" : "civilian";
}

inline const char* bump_kind_name(BumpKind k) {
  return k == BumpKind::SSBump ? "ssbump" : "conventional";
}

struct VehicleSpec {
  std::uint32_t id = 0;
  VehicleKind kind = VehicleKind::Civilian;
  double cruise_speed_mps = 11.1111;  // 40 km/h, low end of the 40-60 band
  double spawn_time_s = 0.0;
  bool compliant = true;  // drives <= the posted limit at the bump

  void validate() const {
    if (id == 0) throw std::invalid_argument("vehicle id must be > 0");
    if (!(cruise_speed_mps > 0)) {
      throw std::invalid_argument("cruise_speed_mps must be > 0");
    }
    if (spawn_time_s < 0) {
      throw std::invalid_argument("spawn_time_s must be >= 0");
    }
  }
};

// Influence zone around a bump: deceleration starts upstream_m before it and
// normal speed resumes downstream_m after it.
struct ZoneGeometry {
  double upstream_m = 15.0;
  double downstream_m = 15.0;

  double total_m() const { return upstream_m + downstream_m; }

  void validate() const {
    if (!(upstream_m > 0 && downstream_m > 0)) {
      throw std::invalid_argument("zone half-lengths must be > 0");
    }
  }
};

// How the vehicle negotiated the bump; selects the calibrated zone-average
// speed in calibrated mode.
enum class CrossingRegime : std::uint8_t {
  Unimpeded = 0,  // crossing at (or above) cruise: no slowdown at all
  Liquid = 1,     // slowed to a lawful speed, fluid stayed liquid
  Solid = 2,      // hardened layer (or a conventional bump) forced a crawl
  Penalty = 3,    // hardened layer at penalty height
};

enum class AggregationMode : std::uint8_t { Calibrated = 0, Kinematic = 1 };

// Measured 30 m zone-average speeds by regime. The solid and liquid entries
// come from field averages for a forced ~12 km/h crawl and a lawful ~30 km/h
// pass; the penalty entry scales the solid one by the penalty/solid crossing
// ratio (2.22/3.33).
struct CalibrationTable {
  double solid_mps = 3.2;
  double liquid_mps = 8.3;
  double penalty_mps = 2.1333;

  void validate() const {
    if (!(penalty_mps > 0 && solid_mps > penalty_mps && liquid_mps > solid_mps)) {
      throw std::invalid_argument(
          "require liquid_mps > solid_mps > penalty_mps > 0");
    }
  }
};

struct TrafficModel {
  AggregationMode mode = AggregationMode::Calibrated;
  CalibrationTable calibration;
};

struct DelayRecord {
  std::uint32_t vehicle_id = 0;
  std::uint32_t bump_id = 0;
  VehicleKind vehicle_kind = VehicleKind::Civilian;
  BumpKind bump_type = BumpKind::SSBump;
  double transit_time_s = 0.0;
  double free_flow_time_s = 0.0;
  double net_delay_s = 0.0;  // transit - free flow, >= 0
  double crossed_at_s = 0.0;
};

inline double zone_transit_time(double avg_zone_speed_mps,
                                const ZoneGeometry& zone) {
  if (!(avg_zone_speed_mps > 0)) {
    throw std::invalid_argument("stalled vehicle: zone-average speed must be > 0");
  }
  return zone.total_m() / avg_zone_speed_mps;
}

inline double free_flow_time(double cruise_speed_mps, const ZoneGeometry& zone) {
  if (!(cruise_speed_mps > 0)) {
    throw std::invalid_argument("cruise speed must be > 0");
  }
  return zone.total_m() / cruise_speed_mps;
}

// Zone-average speed for one crossing. Kinematic mode is the arithmetic mean
// of entry and bump speeds; calibrated mode returns the measured table entry
// for the regime. Both are capped at the cruise speed so a slow vehicle is
// never credited with a faster-than-cruise zone average (and net delay stays
// non-negative). An unimpeded vehicle averages exactly its cruise speed.
inline double avg_zone_speed(double cruise_speed_mps, double crossing_speed_mps,
              CrossingRegime regime, const TrafficModel& model) {
  if (!(cruise_speed_mps > 0) || crossing_speed_mps < 0) {
    throw std::invalid_argument("speeds must be positive");
  }
  if (regime == CrossingRegime::Unimpeded) return cruise_speed_mps;
  double avg = 0.0;
  if (model.mode == AggregationMode::Kinematic) {
    avg = (cruise_speed_mps + crossing_speed_mps) / 2.0;
  } else {
    switch (regime) {
      case CrossingRegime::Liquid: avg = model.calibration.liquid_mps; break;
      case CrossingRegime::Solid: avg = model.calibration.solid_mps; break;
      case CrossingRegime::Penalty: avg = model.calibration.penalty_mps; break;
      case CrossingRegime::Unimpeded: avg = cruise_speed_mps; break;
    }
  }
  return std::min(avg, cruise_speed_mps);
}

// Classify a crossing. `layer_hardened` is true when the bump forced the
// vehicle below its approach speed (dilatant layer gone solid, or any
// conventional bump); `penalty_active` further selects the penalty row.
inline CrossingRegime classify_regime(double cruise_speed_mps,
                                      double crossing_speed_mps,
                                      bool penalty_active,
                                      bool layer_hardened) {
  if (crossing_speed_mps >= cruise_speed_mps) return CrossingRegime::Unimpeded;
  if (layer_hardened) {
    return penalty_active ? CrossingRegime::Penalty : CrossingRegime::Solid;
  }
  return CrossingRegime::Liquid;
}

inline DelayRecord make_delay_record(std::uint32_t vehicle_id,
                                     std::uint32_t bump_id, VehicleKind vkind,
                                     BumpKind btype, double cruise_speed_mps,
                                     double crossing_speed_mps,
                                     CrossingRegime regime,
                                     const TrafficModel& model,
                                     const ZoneGeometry& zone,
                                     double crossed_at_s) {
  const double avg =
      avg_zone_speed(cruise_speed_mps, crossing_speed_mps, regime, model);
  DelayRecord rec;
  rec.vehicle_id = vehicle_id;
  rec.bump_id = bump_id;
  rec.vehicle_kind = vkind;
  rec.bump_type = btype;
  rec.transit_time_s = zone_transit_time(avg, zone);
  rec.free_flow_time_s = free_flow_time(cruise_speed_mps, zone);
  rec.net_delay_s = std::max(0.0, rec.transit_time_s - rec.free_flow_time_s);
  rec.crossed_at_s = crossed_at_s;
  return rec;
}

// Poisson arrival process: exponential inter-arrival gaps via inverse CDF on
// the seeded stream. Sorted, all in [0, duration).
inline std::vector<double> generate_arrivals(double rate_per_s,
                                             double duration_s,
                                             RandomStream& rng) {
  if (rate_per_s < 0) throw std::invalid_argument("arrival rate must be >= 0");
  if (duration_s < 0) throw std::invalid_argument("duration must be >= 0");
  std::vector<double> times;
  if (rate_per_s == 0.0) return times;
  double t = rng.exponential(rate_per_s);
  while (t < duration_s) {
    times.push_back(t);
    t += rng.exponential(rate_per_s);
  }
  return times;
}

// Exactly `count` arrivals spread uniformly at random over [0, duration):
// order statistics of i.i.d. uniforms. Used when a scenario pins the fleet
// size instead of a rate.
inline std::vector<double> spread_arrivals(std::size_t count, double duration_s,
                                           RandomStream& rng) {
  if (!(duration_s > 0) && count > 0) {
    throw std::invalid_argument("duration must be > 0 for a nonempty fleet");
  }
  std::vector<double> times;
  times.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    times.push_back(rng.uniform(0.0, duration_s));
  }
  std::sort(times.begin(), times.end());
  return times;
}

}  // namespace ssbump::traffic
