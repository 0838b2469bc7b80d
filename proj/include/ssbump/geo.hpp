#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace ssbump::geo {

// Mean Earth radius (IUGG R1). City-scale spherical error is < 0.5%, which is
// irrelevant at bump-trigger precision; no ellipsoid.
inline constexpr double kEarthRadiusM = 6'371'008.8;

// Below this ground speed a vehicle is treated as stationary and its ETA is
// the +infinity sentinel, avoiding a division blow-up.
inline constexpr double kStationarySpeedMps = 0.5;

// GPS-glitch guard: estimated speeds are clamped to this cap (~200 km/h).
inline constexpr double kSpeedCapMps = 55.0;

inline constexpr double kDefaultConeHalfAngleDeg = 45.0;

inline constexpr double deg_to_rad(double deg) {
  return deg * std::numbers::pi / 180.0;
}

inline constexpr double rad_to_deg(double rad) {
  return rad * 180.0 / std::numbers::pi;
}

struct GeoPoint {
  double lat_deg = 0.0;  // [-90, +90]
  double lon_deg = 0.0;  // [-180, +180)

  bool is_valid() const {
    return lat_deg >= -90.0 && lat_deg <= 90.0 && lon_deg >= -180.0 &&
           lon_deg < 180.0;
  }

  bool operator==(const GeoPoint&) const = default;
};

// Degrees clockwise from true north, normalized to [0, 360).
struct Heading {
  double deg = 0.0;

  bool operator==(const Heading&) const = default;
};

inline double normalize_heading_deg(double deg) {
  double d = std::fmod(deg, 360.0);
  if (d < 0.0) d += 360.0;
  if (d >= 360.0) d = 0.0;  // fmod can land exactly on 360 after the add
  return d;
}

inline Heading make_heading(double deg) {
  return Heading{normalize_heading_deg(deg)};
}

// Absolute angular separation between two headings, in [0, 180].
inline double angular_separation_deg(double a_deg, double b_deg) {
  double d = std::fabs(normalize_heading_deg(a_deg) - normalize_heading_deg(b_deg));
  return d > 180.0 ? 360.0 - d : d;
}

// Great-circle distance via the haversine formula. Symmetric, >= 0, <= pi*R.
inline double haversine_distance_m(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = deg_to_rad(a.lat_deg);
  const double phi2 = deg_to_rad(b.lat_deg);
  const double dphi = deg_to_rad(b.lat_deg - a.lat_deg);
  const double dlam = deg_to_rad(b.lon_deg - a.lon_deg);

  const double s_lat = std::sin(dphi / 2.0);
  const double s_lon = std::sin(dlam / 2.0);
  double h = s_lat * s_lat + std::cos(phi1) * std::cos(phi2) * s_lon * s_lon;
  h = std::clamp(h, 0.0, 1.0);  // guard rounding at the antipodal limit
  return 2.0 * kEarthRadiusM * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
}

// Forward azimuth of the great circle from a toward b, in [0, 360).
// Coincident endpoints leave the bearing undefined.
inline Heading initial_bearing(const GeoPoint& a, const GeoPoint& b) {
  if (a.lat_deg == b.lat_deg && a.lon_deg == b.lon_deg) {
    throw std::invalid_argument("undefined bearing: coincident points");
  }
  const double phi1 = deg_to_rad(a.lat_deg);
  const double phi2 = deg_to_rad(b.lat_deg);
  const double dlam = deg_to_rad(b.lon_deg - a.lon_deg);
  const double y = std::sin(dlam) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) -
                   std::sin(phi1) * std::cos(phi2) * std::cos(dlam);
  return make_heading(rad_to_deg(std::atan2(y, x)));
}

// Destination point after travelling distance_m along bearing_deg on the
// great circle. Used to anchor 1-D road chainage onto real coordinates.
inline GeoPoint destination_point(const GeoPoint& origin, double bearing_deg,
                                  double distance_m) {
  const double delta = distance_m / kEarthRadiusM;
  const double theta = deg_to_rad(bearing_deg);
  const double phi1 = deg_to_rad(origin.lat_deg);
  const double lam1 = deg_to_rad(origin.lon_deg);

  const double phi2 = std::asin(std::sin(phi1) * std::cos(delta) +
                                std::cos(phi1) * std::sin(delta) * std::cos(theta));
  const double lam2 =
      lam1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(phi1),
                        std::cos(delta) - std::sin(phi1) * std::sin(phi2));

  double lon = rad_to_deg(lam2);
  lon = std::fmod(lon + 540.0, 360.0) - 180.0;  // wrap into [-180, 180)
  return GeoPoint{rad_to_deg(phi2), lon};
}

// Speed over ground from two position fixes. Clamped to [0, cap_mps].
inline double ground_speed_mps(const GeoPoint& prev_pos, double prev_t_s,
                               const GeoPoint& curr_pos, double curr_t_s,
                               double cap_mps = kSpeedCapMps) {
  if (curr_t_s <= prev_t_s) {
    throw std::invalid_argument("non-monotonic beacon: timestamps must increase");
  }
  const double v = haversine_distance_m(prev_pos, curr_pos) / (curr_t_s - prev_t_s);
  return std::clamp(v, 0.0, cap_mps);
}

// Time to reach target at the given speed; +infinity when effectively
// stationary (never arrives).
inline double eta_seconds(const GeoPoint& pos, double speed_mps,
                          const GeoPoint& target) {
  if (speed_mps < 0.0) {
    throw std::invalid_argument("eta_seconds: negative speed");
  }
  if (speed_mps < kStationarySpeedMps) {
    return std::numeric_limits<double>::infinity();
  }
  return haversine_distance_m(pos, target) / speed_mps;
}

// True iff the heading points at the target within the cone. A position
// exactly on the target has no defined bearing and counts as approaching.
inline bool is_approaching(const GeoPoint& pos, const Heading& heading,
                           const GeoPoint& target,
                           double cone_half_angle_deg = kDefaultConeHalfAngleDeg) {
  if (pos.lat_deg == target.lat_deg && pos.lon_deg == target.lon_deg) {
    return true;
  }
  const Heading to_target = initial_bearing(pos, target);
  return angular_separation_deg(heading.deg, to_target.deg) <= cone_half_angle_deg;
}

}  // namespace ssbump::geo
