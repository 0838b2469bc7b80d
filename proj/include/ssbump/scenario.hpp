#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ssbump/bump.hpp"
#include "ssbump/geo.hpp"
#include "ssbump/radio.hpp"
#include "ssbump/traffic.hpp"

namespace ssbump::sim {

// Civilian vehicles get ids from this base upward, in spawn order; emergency
// vehicle ids must stay below it.
inline constexpr std::uint32_t kCivilianIdBase = 1'000'000;

struct Diagnostic {
  int line = 0;  // 0 when the problem is not tied to a source line
  std::string path;  // "section.key" or a symbolic location
  std::string message;

  std::string to_string() const {
    std::ostringstream os;
    if (line > 0) os << "line " << line << ": ";
    if (!path.empty()) os << path << ": ";
    os << message;
    return os.str();
  }
};

// Carries every problem found in one pass, not just the first.
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<Diagnostic> diags)
      : std::runtime_error(join(diags)), diagnostics_(std::move(diags)) {}

  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  static std::string join(const std::vector<Diagnostic>& diags) {
    std::ostringstream os;
    os << "scenario has " << diags.size()
       << (diags.size() == 1 ? " problem:" : " problems:");
    for (const auto& d : diags) os << "\n  " << d.to_string();
    return os.str();
  }
  std::vector<Diagnostic> diagnostics_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 1-D road anchored onto the sphere: chainage 0 at `origin`, increasing along
// `bearing_deg`.
struct RoadSpec {
  double length_m = 0.0;
  geo::GeoPoint origin{35.7000, 51.4000};
  double bearing_deg = 90.0;

  geo::GeoPoint point_at(double chainage_m) const {
    return geo::destination_point(origin, bearing_deg, chainage_m);
  }
};

struct EvSpec {
  std::uint32_t id = 0;
  double dispatch_time_s = 0.0;    // integral seconds
  double start_chainage_m = 0.0;
  double cruise_speed_mps = 11.1111;
  double beacon_interval_s = 5.0;  // integral seconds, >= 1
};

struct CivilianPopulation {
  std::optional<std::uint64_t> count;   // exact fleet size over the window
  std::optional<double> rate_per_s;     // or a Poisson arrival rate
  std::optional<double> window_s;       // arrival window; defaults to duration
  double speed_min_mps = 11.1111;
  double speed_max_mps = 11.1111;
  double compliance = 1.0;  // probability a vehicle obeys the limit at bumps

  bool any() const { return count.has_value() || rate_per_s.has_value(); }
};

struct BumpSpec {
  bump::BumpConfig cfg;
  traffic::BumpKind kind = traffic::BumpKind::SSBump;
  double chainage_m = 0.0;
};

struct Scenario {
  RoadSpec road;
  double duration_s = 0.0;
  std::optional<std::uint64_t> seed;  // command line may override
  traffic::TrafficModel traffic_model;
  traffic::ZoneGeometry zone;
  radio::LoraLinkParams lora;
  radio::UplinkParams uplink;
  bool conventional_control = false;  // pair each ssbump record with a
                                      // conventional-semantics control record
  bool rfid_fallback = false;
  double rfid_offset_m = 60.0;  // reader line this far upstream of each bump
  std::vector<BumpSpec> bumps;
  std::vector<EvSpec> evs;
  CivilianPopulation civilians;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

struct ParseCtx {
  std::vector<Diagnostic>* diags;
  int line = 0;
  std::string section;

  void error(std::string_view key, std::string message) const {
    std::string path = section.empty() ? std::string(key)
                                       : section + "." + std::string(key);
    diags->push_back(Diagnostic{line, std::move(path), std::move(message)});
  }
};

inline std::optional<double> parse_double(const ParseCtx& ctx,
                                          std::string_view key,
                                          std::string_view value) {
  double out = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    ctx.error(key, "expected a number, got '" + std::string(value) + "'");
    return std::nullopt;
  }
  return out;
}

inline std::optional<std::uint64_t> parse_u64(const ParseCtx& ctx,
                                              std::string_view key,
                                              std::string_view value) {
  std::uint64_t out = 0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  int base = 10;
  if (value.size() > 2 && value[0] == '0' && (value[1] == 'x' || value[1] == 'X')) {
    first += 2;
    base = 16;
  }
  auto [ptr, ec] = std::from_chars(first, last, out, base);
  if (ec != std::errc() || ptr != last) {
    ctx.error(key, "expected an unsigned integer, got '" + std::string(value) + "'");
    return std::nullopt;
  }
  return out;
}

inline std::optional<bool> parse_bool(const ParseCtx& ctx, std::string_view key,
                                      std::string_view value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  ctx.error(key, "expected on/off, got '" + std::string(value) + "'");
  return std::nullopt;
}

// Per-bump staging: critical_speed defaults to the bump's own speed limit, so
// it can only be resolved after the whole section is read.
struct BumpStage {
  BumpSpec spec;
  std::optional<double> critical_speed;
  int line = 0;
};

}  // namespace detail

inline Scenario load_scenario(std::string_view text) {
  std::vector<Diagnostic> diags;
  detail::ParseCtx ctx{&diags, 0, std::string{}};

  Scenario sc;
  bool duration_set = false;
  std::vector<detail::BumpStage> bump_stages;
  std::vector<int> ev_lines;

  auto handle_kv = [&](std::string_view key, std::string_view value) {
    const std::string& s = ctx.section;
    auto num = [&](double& field) {
      if (auto v = detail::parse_double(ctx, key, value)) field = *v;
    };
    auto boolean = [&](bool& field) {
      if (auto v = detail::parse_bool(ctx, key, value)) field = *v;
    };
    auto unknown = [&] { ctx.error(key, "unrecognized field"); };

    if (s.empty()) {
      ctx.error(key, "key appears before any [section]");
      return;
    }
    if (s == "road") {
      if (key == "length_m") num(sc.road.length_m);
      else if (key == "origin_lat") num(sc.road.origin.lat_deg);
      else if (key == "origin_lon") num(sc.road.origin.lon_deg);
      else if (key == "bearing_deg") num(sc.road.bearing_deg);
      else unknown();
    } else if (s == "sim") {
      if (key == "duration_s") { num(sc.duration_s); duration_set = true; }
      else if (key == "seed") {
        if (auto v = detail::parse_u64(ctx, key, value)) sc.seed = *v;
      } else if (key == "speed_model") {
        if (value == "calibrated") {
          sc.traffic_model.mode = traffic::AggregationMode::Calibrated;
        } else if (value == "kinematic") {
          sc.traffic_model.mode = traffic::AggregationMode::Kinematic;
        } else {
          ctx.error(key, "expected calibrated or kinematic");
        }
      } else if (key == "conventional_control") boolean(sc.conventional_control);
      else if (key == "rfid_fallback") boolean(sc.rfid_fallback);
      else if (key == "rfid_offset_m") num(sc.rfid_offset_m);
      else unknown();
    } else if (s == "lora") {
      if (key == "max_range_m") num(sc.lora.max_range_m);
      else if (key == "loss_prob") num(sc.lora.loss_prob);
      else if (key == "spreading_factor") {
        if (auto v = detail::parse_u64(ctx, key, value)) {
          sc.lora.spreading_factor = static_cast<int>(*v);
        }
      } else if (key == "bandwidth_hz") {
        if (auto v = detail::parse_u64(ctx, key, value)) {
          sc.lora.bandwidth_hz = static_cast<long>(*v);
        }
      } else if (key == "coding_rate_denom") {
        if (auto v = detail::parse_u64(ctx, key, value)) {
          sc.lora.coding_rate_denom = static_cast<int>(*v);
        }
      } else if (key == "preamble_symbols") {
        if (auto v = detail::parse_u64(ctx, key, value)) {
          sc.lora.preamble_symbols = static_cast<int>(*v);
        }
      } else if (key == "explicit_header") boolean(sc.lora.explicit_header);
      else if (key == "crc_on") boolean(sc.lora.crc_on);
      else if (key == "low_data_rate_optimize") {
        boolean(sc.lora.low_data_rate_optimize);
      } else if (key == "carrier_hz") num(sc.lora.carrier_hz);
      else unknown();
    } else if (s == "uplink") {
      if (key == "latency_ms_mean") num(sc.uplink.latency_ms_mean);
      else if (key == "latency_ms_jitter") num(sc.uplink.latency_ms_jitter);
      else if (key == "loss_prob") num(sc.uplink.loss_prob);
      else unknown();
    } else if (s == "calibration") {
      if (key == "solid_mps") num(sc.traffic_model.calibration.solid_mps);
      else if (key == "liquid_mps") num(sc.traffic_model.calibration.liquid_mps);
      else if (key == "penalty_mps") num(sc.traffic_model.calibration.penalty_mps);
      else unknown();
    } else if (s == "zone") {
      if (key == "upstream_m") num(sc.zone.upstream_m);
      else if (key == "downstream_m") num(sc.zone.downstream_m);
      else unknown();
    } else if (s == "bump") {
      auto& st = bump_stages.back();
      auto& cfg = st.spec.cfg;
      if (key == "id") {
        if (auto v = detail::parse_u64(ctx, key, value)) {
          cfg.bump_id = static_cast<std::uint32_t>(*v);
        }
      } else if (key == "kind") {
        if (value == "ssbump") st.spec.kind = traffic::BumpKind::SSBump;
        else if (value == "conventional") {
          st.spec.kind = traffic::BumpKind::Conventional;
        } else ctx.error(key, "expected ssbump or conventional");
      } else if (key == "chainage_m") num(st.spec.chainage_m);
      else if (key == "deflate_eta_threshold_s") num(cfg.deflate_eta_threshold_s);
      else if (key == "lower_duration_s") num(cfg.lower_duration_s);
      else if (key == "raise_duration_s") num(cfg.raise_duration_s);
      else if (key == "nominal_height_m") num(cfg.nominal_height_m);
      else if (key == "penalty_height_m") num(cfg.penalty_height_m);
      else if (key == "speed_limit_mps") num(cfg.speed_limit_mps);
      else if (key == "approach_cone_deg") num(cfg.approach_cone_deg);
      else if (key == "pass_radius_m") num(cfg.pass_radius_m);
      else if (key == "beacon_timeout_s") num(cfg.beacon_timeout_s);
      else if (key == "sensor_offset_m") num(cfg.sensor_offset_m);
      else if (key == "fallback_speed_mps") num(cfg.fallback_speed_mps);
      else if (key == "layer_thickness_m") num(cfg.oobleck.layer_thickness_m);
      else if (key == "critical_speed_mps") {
        if (auto v = detail::parse_double(ctx, key, value)) st.critical_speed = *v;
      } else if (key == "consistency_K") num(cfg.oobleck.consistency_K);
      else if (key == "flow_index_n") num(cfg.oobleck.flow_index_n);
      else if (key == "solid_crossing_mps") {
        num(cfg.oobleck.solid_crossing_speed_mps);
      } else if (key == "penalty_crossing_mps") {
        num(cfg.oobleck.penalty_crossing_speed_mps);
      } else unknown();
    } else if (s == "ev") {
      auto& ev = sc.evs.back();
      if (key == "id") {
        if (auto v = detail::parse_u64(ctx, key, value)) {
          ev.id = static_cast<std::uint32_t>(*v);
        }
      } else if (key == "dispatch_time_s") num(ev.dispatch_time_s);
      else if (key == "start_chainage_m") num(ev.start_chainage_m);
      else if (key == "cruise_speed_mps") num(ev.cruise_speed_mps);
      else if (key == "beacon_interval_s") num(ev.beacon_interval_s);
      else unknown();
    } else if (s == "civilians") {
      if (key == "count") {
        if (auto v = detail::parse_u64(ctx, key, value)) sc.civilians.count = *v;
      } else if (key == "rate_per_s") {
        if (auto v = detail::parse_double(ctx, key, value)) {
          sc.civilians.rate_per_s = *v;
        }
      } else if (key == "window_s") {
        if (auto v = detail::parse_double(ctx, key, value)) {
          sc.civilians.window_s = *v;
        }
      } else if (key == "speed_min_mps") num(sc.civilians.speed_min_mps);
      else if (key == "speed_max_mps") num(sc.civilians.speed_max_mps);
      else if (key == "compliance") num(sc.civilians.compliance);
      else unknown();
    } else {
      // Section itself was already reported; swallow its keys.
    }
  };

  std::string line;
  std::istringstream in{std::string(text)};
  std::vector<std::string> known_sections = {"road", "sim", "lora", "uplink",
                                             "calibration", "zone", "bump",
                                             "ev", "civilians"};
  while (std::getline(in, line)) {
    ++ctx.line;
    std::string_view sv = detail::trim(line);
    if (auto hash = sv.find('#'); hash != std::string_view::npos) {
      sv = detail::trim(sv.substr(0, hash));
    }
    if (sv.empty()) continue;
    if (sv.front() == '[') {
      if (sv.back() != ']') {
        diags.push_back(Diagnostic{ctx.line, "", "malformed section header"});
        ctx.section.clear();
        continue;
      }
      std::string name{detail::trim(sv.substr(1, sv.size() - 2))};
      bool known = false;
      for (const auto& k : known_sections) known = known || k == name;
      if (!known) {
        diags.push_back(
            Diagnostic{ctx.line, name, "unrecognized section"});
        ctx.section = "\x01ignored";  // swallow keys without further noise
        continue;
      }
      ctx.section = name;
      if (name == "bump") {
        bump_stages.push_back(detail::BumpStage{{}, std::nullopt, ctx.line});
      } else if (name == "ev") {
        sc.evs.push_back(EvSpec{});
        ev_lines.push_back(ctx.line);
      }
      continue;
    }
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos) {
      diags.push_back(Diagnostic{ctx.line, "", "expected key = value"});
      continue;
    }
    const std::string_view key = detail::trim(sv.substr(0, eq));
    const std::string_view value = detail::trim(sv.substr(eq + 1));
    if (key.empty()) {
      diags.push_back(Diagnostic{ctx.line, "", "empty key"});
      continue;
    }
    handle_kv(key, value);
  }

  // Resolve staged bumps: critical speed defaults to the bump's speed limit.
  for (auto& st : bump_stages) {
    st.spec.cfg.oobleck.critical_speed_mps =
        st.critical_speed.value_or(st.spec.cfg.speed_limit_mps);
    sc.bumps.push_back(st.spec);
  }

  // ---- cross-field validation; every failure becomes one diagnostic ----
  auto check = [&](int line_no, const std::string& path, std::string msg) {
    diags.push_back(Diagnostic{line_no, path, std::move(msg)});
  };

  if (!duration_set) {
    check(0, "sim.duration_s", "duration missing");
  } else if (!(sc.duration_s > 0)) {
    check(0, "sim.duration_s", "duration must be > 0");
  } else if (sc.duration_s > 4294967295.0) {
    check(0, "sim.duration_s", "duration exceeds the 32-bit timestamp range");
  }

  const bool needs_road = !sc.bumps.empty() || !sc.evs.empty() || sc.civilians.any();
  if (needs_road && !(sc.road.length_m > 0)) {
    check(0, "road.length_m", "road length must be > 0");
  }
  if (!sc.road.origin.is_valid()) {
    check(0, "road.origin_lat", "origin is not a valid coordinate");
  }

  try {
    sc.lora.validate();
  } catch (const std::exception& e) {
    check(0, "lora", e.what());
  }
  try {
    sc.uplink.validate();
  } catch (const std::exception& e) {
    check(0, "uplink", e.what());
  }
  try {
    sc.zone.validate();
  } catch (const std::exception& e) {
    check(0, "zone", e.what());
  }
  try {
    sc.traffic_model.calibration.validate();
  } catch (const std::exception& e) {
    check(0, "calibration", e.what());
  }
  if (!(sc.rfid_offset_m > 0)) {
    check(0, "sim.rfid_offset_m", "rfid_offset_m must be > 0");
  }

  for (std::size_t i = 0; i < sc.bumps.size(); ++i) {
    const auto& b = sc.bumps[i];
    const int line_no = bump_stages[i].line;
    try {
      b.cfg.validate();
    } catch (const std::exception& e) {
      check(line_no, "bump", e.what());
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (sc.bumps[j].cfg.bump_id == b.cfg.bump_id && b.cfg.bump_id != 0) {
        check(line_no, "bump.id",
              "duplicate bump_id " + std::to_string(b.cfg.bump_id));
      }
    }
    if (sc.road.length_m > 0) {
      if (!(b.chainage_m - sc.zone.upstream_m >= 0)) {
        check(line_no, "bump.chainage_m",
              "bump zone starts before the road origin");
      }
      if (!(b.chainage_m + sc.zone.downstream_m <= sc.road.length_m)) {
        check(line_no, "bump.chainage_m", "bump zone ends beyond the road");
      }
      if (b.kind == traffic::BumpKind::SSBump &&
          !(b.chainage_m - b.cfg.sensor_offset_m >= 0)) {
        check(line_no, "bump.sensor_offset_m",
              "speed sensor sits before the road origin");
      }
    }
  }

  for (std::size_t i = 0; i < sc.evs.size(); ++i) {
    const auto& ev = sc.evs[i];
    const int line_no = ev_lines[i];
    if (ev.id == 0) check(line_no, "ev.id", "ev id must be > 0");
    if (ev.id >= kCivilianIdBase) {
      check(line_no, "ev.id",
            "ev id must be below " + std::to_string(kCivilianIdBase) +
                " (reserved for civilians)");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (sc.evs[j].id == ev.id && ev.id != 0) {
        check(line_no, "ev.id", "duplicate ev id " + std::to_string(ev.id));
      }
    }
    if (!(ev.cruise_speed_mps > 0)) {
      check(line_no, "ev.cruise_speed_mps", "cruise speed must be > 0");
    }
    if (ev.dispatch_time_s < 0 ||
        ev.dispatch_time_s != std::floor(ev.dispatch_time_s)) {
      check(line_no, "ev.dispatch_time_s",
            "dispatch time must be a non-negative whole number of seconds");
    }
    if (ev.beacon_interval_s < 1 ||
        ev.beacon_interval_s != std::floor(ev.beacon_interval_s)) {
      check(line_no, "ev.beacon_interval_s",
            "beacon interval must be a whole number of seconds >= 1");
    }
    if (sc.road.length_m > 0 &&
        (ev.start_chainage_m < 0 || ev.start_chainage_m >= sc.road.length_m)) {
      check(line_no, "ev.start_chainage_m", "start chainage must lie on the road");
    }
  }

  if (sc.civilians.count && sc.civilians.rate_per_s) {
    check(0, "civilians", "give either count or rate_per_s, not both");
  }
  if (sc.civilians.any()) {
    if (!(sc.civilians.compliance >= 0 && sc.civilians.compliance <= 1)) {
      check(0, "civilians.compliance", "compliance must be in [0,1]");
    }
    if (!(sc.civilians.speed_min_mps > 0) ||
        sc.civilians.speed_max_mps < sc.civilians.speed_min_mps) {
      check(0, "civilians.speed_min_mps",
            "require 0 < speed_min_mps <= speed_max_mps");
    }
    const double window = sc.civilians.window_s.value_or(sc.duration_s);
    if (!(window > 0) || window > sc.duration_s) {
      check(0, "civilians.window_s", "window must be in (0, duration]");
    }
    if (sc.civilians.rate_per_s && *sc.civilians.rate_per_s < 0) {
      check(0, "civilians.rate_per_s", "rate must be >= 0");
    }
  }

  if (!diags.empty()) throw ScenarioError(std::move(diags));
  return sc;
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("cannot read scenario file: " + path);
  return load_scenario(buf.str());
}

}  // namespace ssbump::sim
