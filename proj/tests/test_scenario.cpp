#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "ssbump/scenario.hpp"

using namespace ssbump;
using Catch::Approx;

namespace {

std::string fixture(const char* name) {
  return std::string(SSBUMP_SCENARIO_DIR) + "/" + name;
}

bool mentions(const sim::ScenarioError& e, const char* needle) {
  return std::string(e.what()).find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("a full scenario parses into the right fields") {
  const char* text = R"(
[road]
length_m = 2000
origin_lat = 35.70
origin_lon = 51.40
bearing_deg = 90

[sim]
duration_s = 600
seed = 0xdeadbeef
speed_model = kinematic
conventional_control = on
rfid_fallback = true
rfid_offset_m = 75

[lora]
max_range_m = 16093
loss_prob = 0.25
spreading_factor = 9
bandwidth_hz = 250000
coding_rate_denom = 6
preamble_symbols = 10
explicit_header = off
crc_on = off
low_data_rate_optimize = on
carrier_hz = 868e6

[uplink]
latency_ms_mean = 30
latency_ms_jitter = 0
loss_prob = 0.5

[calibration]
solid_mps = 3.0
liquid_mps = 8.0
penalty_mps = 2.0

[zone]
upstream_m = 20
downstream_m = 10

[bump]
id = 4
kind = conventional
chainage_m = 100

[bump]
id = 5
kind = ssbump
chainage_m = 1000
deflate_eta_threshold_s = 25
lower_duration_s = 2.5
raise_duration_s = 4
nominal_height_m = 0.10
penalty_height_m = 0.15
speed_limit_mps = 9          # critical speed defaults to this
approach_cone_deg = 30
pass_radius_m = 35
beacon_timeout_s = 12
sensor_offset_m = 40
fallback_speed_mps = 13
layer_thickness_m = 0.04
consistency_K = 2
flow_index_n = 2.5
solid_crossing_mps = 3.5
penalty_crossing_mps = 2.5

[bump]
id = 6
chainage_m = 1500
critical_speed_mps = 10.5

[ev]
id = 12
dispatch_time_s = 30
start_chainage_m = 50
cruise_speed_mps = 13.9
beacon_interval_s = 4

[civilians]
rate_per_s = 0.2
window_s = 500
speed_min_mps = 10
speed_max_mps = 14
compliance = 0.8
)";

  const sim::Scenario sc = sim::load_scenario(text);

  REQUIRE(sc.road.length_m == 2000.0);
  REQUIRE(sc.road.bearing_deg == 90.0);
  REQUIRE(sc.duration_s == 600.0);
  REQUIRE(sc.seed == 0xdeadbeefull);
  REQUIRE(sc.traffic_model.mode == traffic::AggregationMode::Kinematic);
  REQUIRE(sc.conventional_control);
  REQUIRE(sc.rfid_fallback);
  REQUIRE(sc.rfid_offset_m == 75.0);

  REQUIRE(sc.lora.max_range_m == 16093.0);
  REQUIRE(sc.lora.loss_prob == 0.25);
  REQUIRE(sc.lora.spreading_factor == 9);
  REQUIRE(sc.lora.bandwidth_hz == 250000);
  REQUIRE(sc.lora.coding_rate_denom == 6);
  REQUIRE(sc.lora.preamble_symbols == 10);
  REQUIRE_FALSE(sc.lora.explicit_header);
  REQUIRE_FALSE(sc.lora.crc_on);
  REQUIRE(sc.lora.low_data_rate_optimize);
  REQUIRE(sc.lora.carrier_hz == 868e6);

  REQUIRE(sc.uplink.latency_ms_mean == 30.0);
  REQUIRE(sc.uplink.latency_ms_jitter == 0.0);
  REQUIRE(sc.uplink.loss_prob == 0.5);

  REQUIRE(sc.traffic_model.calibration.solid_mps == 3.0);
  REQUIRE(sc.traffic_model.calibration.liquid_mps == 8.0);
  REQUIRE(sc.traffic_model.calibration.penalty_mps == 2.0);

  REQUIRE(sc.zone.upstream_m == 20.0);
  REQUIRE(sc.zone.downstream_m == 10.0);

  REQUIRE(sc.bumps.size() == 3);
  REQUIRE(sc.bumps[0].cfg.bump_id == 4);
  REQUIRE(sc.bumps[0].kind == traffic::BumpKind::Conventional);
  REQUIRE(sc.bumps[0].chainage_m == 100.0);

  const auto& b5 = sc.bumps[1];
  REQUIRE(b5.cfg.bump_id == 5);
  REQUIRE(b5.kind == traffic::BumpKind::SSBump);
  REQUIRE(b5.cfg.deflate_eta_threshold_s == 25.0);
  REQUIRE(b5.cfg.lower_duration_s == 2.5);
  REQUIRE(b5.cfg.raise_duration_s == 4.0);
  REQUIRE(b5.cfg.nominal_height_m == 0.10);
  REQUIRE(b5.cfg.penalty_height_m == 0.15);
  REQUIRE(b5.cfg.speed_limit_mps == 9.0);
  REQUIRE(b5.cfg.approach_cone_deg == 30.0);
  REQUIRE(b5.cfg.pass_radius_m == 35.0);
  REQUIRE(b5.cfg.beacon_timeout_s == 12.0);
  REQUIRE(b5.cfg.sensor_offset_m == 40.0);
  REQUIRE(b5.cfg.fallback_speed_mps == 13.0);
  REQUIRE(b5.cfg.oobleck.layer_thickness_m == 0.04);
  REQUIRE(b5.cfg.oobleck.consistency_K == 2.0);
  REQUIRE(b5.cfg.oobleck.flow_index_n == 2.5);
  REQUIRE(b5.cfg.oobleck.solid_crossing_speed_mps == 3.5);
  REQUIRE(b5.cfg.oobleck.penalty_crossing_speed_mps == 2.5);
  // Unset critical speed binds to the bump's own limit...
  REQUIRE(b5.cfg.oobleck.critical_speed_mps == 9.0);
  // ...and an explicit one wins.
  REQUIRE(sc.bumps[2].cfg.oobleck.critical_speed_mps == 10.5);
  REQUIRE(sc.bumps[2].cfg.speed_limit_mps == Approx(8.33));

  REQUIRE(sc.evs.size() == 1);
  REQUIRE(sc.evs[0].id == 12);
  REQUIRE(sc.evs[0].dispatch_time_s == 30.0);
  REQUIRE(sc.evs[0].start_chainage_m == 50.0);
  REQUIRE(sc.evs[0].cruise_speed_mps == 13.9);
  REQUIRE(sc.evs[0].beacon_interval_s == 4.0);

  REQUIRE(sc.civilians.rate_per_s == 0.2);
  REQUIRE_FALSE(sc.civilians.count.has_value());
  REQUIRE(sc.civilians.window_s == 500.0);
  REQUIRE(sc.civilians.speed_min_mps == 10.0);
  REQUIRE(sc.civilians.speed_max_mps == 14.0);
  REQUIRE(sc.civilians.compliance == 0.8);
}

TEST_CASE("minimal scenario and defaults") {
  const sim::Scenario sc = sim::load_scenario("[sim]\nduration_s = 10\n");
  REQUIRE(sc.duration_s == 10.0);
  REQUIRE_FALSE(sc.seed.has_value());
  REQUIRE(sc.bumps.empty());
  REQUIRE(sc.evs.empty());
  REQUIRE_FALSE(sc.civilians.any());
  REQUIRE(sc.traffic_model.mode == traffic::AggregationMode::Calibrated);
  REQUIRE(sc.lora.max_range_m == 8000.0);
  REQUIRE(sc.rfid_offset_m == 60.0);
  REQUIRE_FALSE(sc.conventional_control);
}

TEST_CASE("comments, blank lines and CRLF are tolerated") {
  const sim::Scenario sc = sim::load_scenario(
      "# leading comment\r\n"
      "\r\n"
      "[sim]\r\n"
      "duration_s = 42   # trailing comment\r\n");
  REQUIRE(sc.duration_s == 42.0);
}

TEST_CASE("an empty scenario reports exactly the missing duration") {
  try {
    (void)sim::load_scenario("");
    FAIL("expected a validation error");
  } catch (const sim::ScenarioError& e) {
    REQUIRE(e.diagnostics().size() == 1);
    REQUIRE(e.diagnostics()[0].path == "sim.duration_s");
    REQUIRE(e.diagnostics()[0].message == "duration missing");
  }
}

TEST_CASE("all problems are reported in one pass") {
  const char* text = R"(x = 1
[road]
length_m = 100
bogus_key = 3
[teleporter]
power = 9
[sim]
duration_s = 0
[zone]
upstream_m = 80
downstream_m = 80
[bump]
id = 1
chainage_m = 50
[bump]
id = 1
chainage_m = 90
[ev]
id = 1000000
dispatch_time_s = 1.5
beacon_interval_s = 0
start_chainage_m = 500
[civilians]
count = 5
rate_per_s = 2
compliance = 1.5
speed_min_mps = 12
speed_max_mps = 9
window_s = 0
)";
  try {
    (void)sim::load_scenario(text);
    FAIL("expected a validation error");
  } catch (const sim::ScenarioError& e) {
    CAPTURE(e.what());
    REQUIRE(e.diagnostics().size() >= 10);
    REQUIRE(mentions(e, "key appears before any"));
    REQUIRE(mentions(e, "unrecognized field"));
    REQUIRE(mentions(e, "unrecognized section"));
    REQUIRE(mentions(e, "duration must be > 0"));
    REQUIRE(mentions(e, "duplicate bump_id 1"));
    REQUIRE(mentions(e, "zone ends beyond the road"));
    REQUIRE(mentions(e, "zone starts before the road origin"));
    REQUIRE(mentions(e, "must be below 1000000"));
    REQUIRE(mentions(e, "whole number"));
    REQUIRE(mentions(e, "not both"));
    REQUIRE(mentions(e, "compliance must be in [0,1]"));
    REQUIRE(mentions(e, "speed_min_mps"));
    REQUIRE(mentions(e, "window must be in (0, duration]"));
    // Problems tied to a source line carry it.
    bool some_line = false;
    for (const auto& d : e.diagnostics()) some_line = some_line || d.line > 0;
    REQUIRE(some_line);
  }
}

TEST_CASE("unknown sections are reported once and their keys swallowed") {
  const char* text =
      "[sim]\n"
      "duration_s = 5\n"
      "[flux_capacitor]\n"
      "gigawatts = 1.21\n"
      "mode = weird\n";
  try {
    (void)sim::load_scenario(text);
    FAIL("expected a validation error");
  } catch (const sim::ScenarioError& e) {
    REQUIRE(e.diagnostics().size() == 1);
    REQUIRE(e.diagnostics()[0].message == "unrecognized section");
    REQUIRE(e.diagnostics()[0].line == 3);
  }
}

TEST_CASE("malformed syntax is diagnosed") {
  const char* text =
      "[sim]\n"
      "duration_s = 5\n"
      "[oops\n"
      "= 3\n"
      "justaword\n";
  try {
    (void)sim::load_scenario(text);
    FAIL("expected a validation error");
  } catch (const sim::ScenarioError& e) {
    REQUIRE(mentions(e, "malformed section header"));
    REQUIRE(mentions(e, "empty key"));
    REQUIRE(mentions(e, "expected key = value"));
  }
}

TEST_CASE("numeric and boolean value errors name the field") {
  const char* text =
      "[sim]\n"
      "duration_s = soon\n"
      "conventional_control = maybe\n"
      "seed = -4\n";
  try {
    (void)sim::load_scenario(text);
    FAIL("expected a validation error");
  } catch (const sim::ScenarioError& e) {
    REQUIRE(mentions(e, "sim.duration_s"));
    REQUIRE(mentions(e, "expected a number"));
    REQUIRE(mentions(e, "expected on/off"));
    REQUIRE(mentions(e, "expected an unsigned integer"));
  }
}

TEST_CASE("oversized duration is rejected") {
  try {
    (void)sim::load_scenario("[sim]\nduration_s = 5000000000\n");
    FAIL("expected a validation error");
  } catch (const sim::ScenarioError& e) {
    REQUIRE(mentions(e, "32-bit timestamp range"));
  }
}

TEST_CASE("shipped fixtures load and carry the expected shape") {
  const sim::Scenario t1 = sim::load_scenario_file(fixture("table1.scn"));
  REQUIRE(t1.seed == 42ull);
  REQUIRE(t1.conventional_control);
  REQUIRE(t1.bumps.size() == 1);
  REQUIRE(t1.bumps[0].kind == traffic::BumpKind::SSBump);
  REQUIRE(t1.civilians.count == 200ull);
  REQUIRE(t1.lora.loss_prob == 0.0);
  REQUIRE(t1.traffic_model.mode == traffic::AggregationMode::Calibrated);

  const sim::Scenario evr = sim::load_scenario_file(fixture("ev_route.scn"));
  REQUIRE(evr.seed == 7ull);
  REQUIRE(evr.bumps.size() == 3);
  REQUIRE(evr.evs.size() == 1);
  REQUIRE(evr.evs[0].id == 900);

  const sim::Scenario lossy = sim::load_scenario_file(fixture("lossy_link.scn"));
  REQUIRE(lossy.rfid_fallback);
  REQUIRE(lossy.lora.loss_prob == 1.0);
  REQUIRE(lossy.rfid_offset_m == 60.0);
}

TEST_CASE("missing files raise an io error") {
  REQUIRE_THROWS_AS(sim::load_scenario_file(fixture("no_such.scn")),
                    sim::IoError);
}
