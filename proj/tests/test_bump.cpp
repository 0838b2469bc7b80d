#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <optional>
#include <random>

#include "ssbump/bump.hpp"
#include "ssbump/geo.hpp"
#include "ssbump/protocol.hpp"

using namespace ssbump;
using Catch::Approx;

namespace {

bump::BumpConfig make_cfg() {
  bump::BumpConfig cfg;
  cfg.bump_id = 1;
  cfg.position = {35.7, 51.4};
  return cfg;
}

// Beacon from a point `dist_m` due west of the bump, heading east toward it.
proto::EvBeacon beacon_west(const bump::BumpConfig& cfg, double dist_m,
                            std::uint32_t ts, double heading = 90.0,
                            std::uint32_t id = 900) {
  return proto::EvBeacon{id, geo::destination_point(cfg.position, 270.0, dist_m),
                         geo::make_heading(heading), ts};
}

}  // namespace

TEST_CASE("fresh controller is raised and consistent") {
  bump::BumpState st;
  const auto cfg = make_cfg();
  REQUIRE(st.mode == bump::Mode::Raised);
  REQUIRE(st.is_consistent());
  REQUIRE(bump::height_m(st, cfg, 0.0) == cfg.nominal_height_m);
  REQUIRE_FALSE(st.active_ev.has_value());
}

TEST_CASE("approaching vehicle triggers deflation at the eta threshold") {
  const auto cfg = make_cfg();  // threshold 30 s, fallback speed 15 m/s
  bump::BumpState st;

  // Single fix far out: fallback speed gives eta 40 s, above the threshold.
  const auto b1 = beacon_west(cfg, 600.0, 0);
  st = bump::on_beacon(std::move(st), cfg, b1, nullptr, 0.0);
  REQUIRE(st.mode == bump::Mode::Raised);
  REQUIRE(st.last_beacon_at == 0.0);
  REQUIRE(st.prev_ev_distance_m.value() == Approx(600.0).margin(0.01));

  // Two fixes give ~10 m/s; at 450 m the eta is ~45 s: still no trigger.
  const auto b2 = beacon_west(cfg, 450.0, 15);
  st = bump::on_beacon(std::move(st), cfg, b2, &b1, 15.0);
  REQUIRE(st.mode == bump::Mode::Raised);

  // At 290 m and ~10 m/s the eta is ~29 s: lower the bump.
  const auto b3 = beacon_west(cfg, 290.0, 31);
  st = bump::on_beacon(std::move(st), cfg, b3, &b2, 31.0);
  REQUIRE(st.mode == bump::Mode::Lowering);
  REQUIRE(st.active_ev == 900u);
  REQUIRE(st.transition_started_at == 31.0);
  REQUIRE(st.is_consistent());

  // Transition completes only once lower_duration_s has elapsed.
  st = bump::tick(std::move(st), cfg, 33.9);
  REQUIRE(st.mode == bump::Mode::Lowering);
  st = bump::tick(std::move(st), cfg, 34.0);
  REQUIRE(st.mode == bump::Mode::Lowered);
  REQUIRE_FALSE(st.transition_started_at.has_value());
  REQUIRE(st.is_consistent());
}

TEST_CASE("vehicle heading away does not trigger") {
  const auto cfg = make_cfg();
  bump::BumpState st;
  const auto receding = beacon_west(cfg, 290.0, 0, 270.0);  // nose to the west
  st = bump::on_beacon(std::move(st), cfg, receding, nullptr, 0.0);
  REQUIRE(st.mode == bump::Mode::Raised);

  // Outside the 45-degree cone, even though the eta is tiny.
  const auto skewed = beacon_west(cfg, 100.0, 1, 140.0);
  st = bump::on_beacon(std::move(st), cfg, skewed, nullptr, 1.0);
  REQUIRE(st.mode == bump::Mode::Raised);
}

TEST_CASE("pass detection starts the raise") {
  const auto cfg = make_cfg();  // pass_radius 20 m
  bump::BumpState st;

  const auto trigger = beacon_west(cfg, 290.0, 0);
  st = bump::on_beacon(std::move(st), cfg, trigger, nullptr, 0.0);
  REQUIRE(st.mode == bump::Mode::Lowering);  // fallback 15 m/s -> eta ~19 s
  st = bump::tick(std::move(st), cfg, 3.0);
  REQUIRE(st.mode == bump::Mode::Lowered);

  // Close fix inside the pass radius; still approaching.
  const auto close = beacon_west(cfg, 10.0, 28);
  st = bump::on_beacon(std::move(st), cfg, close, &trigger, 28.0);
  REQUIRE(st.mode == bump::Mode::Lowered);
  REQUIRE(st.prev_ev_distance_m.value() == Approx(10.0).margin(0.01));

  // Next fix is receding on the far side: the vehicle has passed.
  const proto::EvBeacon past{900,
                             geo::destination_point(cfg.position, 90.0, 40.0),
                             geo::make_heading(90.0), 33};
  st = bump::on_beacon(std::move(st), cfg, past, &close, 33.0);
  REQUIRE(st.mode == bump::Mode::Raising);
  REQUIRE_FALSE(st.active_ev.has_value());
  REQUIRE(st.transition_started_at == 33.0);

  st = bump::tick(std::move(st), cfg, 36.0);
  REQUIRE(st.mode == bump::Mode::Raised);
  REQUIRE(st.is_consistent());
}

TEST_CASE("a receding fix outside the pass radius is not a pass") {
  const auto cfg = make_cfg();
  bump::BumpState st;
  const auto trigger = beacon_west(cfg, 290.0, 0);
  st = bump::on_beacon(std::move(st), cfg, trigger, nullptr, 0.0);
  st = bump::tick(std::move(st), cfg, 3.0);
  REQUIRE(st.mode == bump::Mode::Lowered);

  // Distance grows (GPS wobble at 290 -> 300 m) but the vehicle never came
  // within the pass radius, so the bump must stay down.
  const auto wobble = beacon_west(cfg, 300.0, 5);
  st = bump::on_beacon(std::move(st), cfg, wobble, &trigger, 5.0);
  REQUIRE(st.mode == bump::Mode::Lowered);
  REQUIRE(st.active_ev == 900u);
}

TEST_CASE("beacon silence raises the bump through the failsafe") {
  const auto cfg = make_cfg();  // timeout 15 s
  bump::BumpState st;
  st = bump::on_beacon(std::move(st), cfg, beacon_west(cfg, 290.0, 0), nullptr,
                       0.0);
  REQUIRE(st.mode == bump::Mode::Lowering);
  st = bump::tick(std::move(st), cfg, 3.0);
  REQUIRE(st.mode == bump::Mode::Lowered);

  st = bump::tick(std::move(st), cfg, 14.99);
  REQUIRE(st.mode == bump::Mode::Lowered);

  st = bump::tick(std::move(st), cfg, 15.0);
  REQUIRE(st.mode == bump::Mode::Raising);
  REQUIRE(st.transition_started_at == 15.0);
  st = bump::tick(std::move(st), cfg, 18.0);
  REQUIRE(st.mode == bump::Mode::Raised);
}

TEST_CASE("tick advances one step per call, cascading to a fixpoint") {
  const auto cfg = make_cfg();
  bump::BumpState st;
  st = bump::on_beacon(std::move(st), cfg, beacon_west(cfg, 290.0, 0), nullptr,
                       0.0);
  REQUIRE(st.mode == bump::Mode::Lowering);

  // Far in the future: completion, timeout, and raise are all overdue, but
  // each call takes exactly one step.
  st = bump::tick(std::move(st), cfg, 100.0);
  REQUIRE(st.mode == bump::Mode::Lowered);
  st = bump::tick(std::move(st), cfg, 100.0);
  REQUIRE(st.mode == bump::Mode::Raising);
  st = bump::tick(std::move(st), cfg, 103.0);
  REQUIRE(st.mode == bump::Mode::Raised);
  st = bump::tick(std::move(st), cfg, 103.0);
  REQUIRE(st.mode == bump::Mode::Raised);
}

TEST_CASE("speeders harden the bump; the penalty clears when the zone empties") {
  const auto cfg = make_cfg();  // speed limit 8.33 m/s
  bump::BumpState st;

  st = bump::on_speed_reading(std::move(st), cfg, {1000000, 8.33, 1.0});
  REQUIRE(st.mode == bump::Mode::Raised);  // at the limit is lawful

  st = bump::on_speed_reading(std::move(st), cfg, {1000001, 9.0, 2.0});
  REQUIRE(st.mode == bump::Mode::PenaltyRaised);
  REQUIRE(st.pending_fastest_mps == Approx(9.0));
  REQUIRE(bump::height_m(st, cfg, 2.0) == cfg.penalty_height_m);

  // A slower follower does not soften the platoon's penalty.
  st = bump::on_speed_reading(std::move(st), cfg, {1000002, 5.0, 3.0});
  REQUIRE(st.mode == bump::Mode::PenaltyRaised);
  REQUIRE(st.pending_fastest_mps == Approx(9.0));

  st = bump::vehicle_crossed(std::move(st), cfg);
  REQUIRE(st.mode == bump::Mode::Raised);
  REQUIRE(st.pending_fastest_mps == 0.0);

  REQUIRE_THROWS_AS(
      bump::on_speed_reading(bump::BumpState{}, cfg, {1, -1.0, 0.0}),
      std::invalid_argument);
}

TEST_CASE("speed readings never disturb an active emergency pass") {
  const auto cfg = make_cfg();
  bump::BumpState st;
  st = bump::on_beacon(std::move(st), cfg, beacon_west(cfg, 290.0, 0), nullptr,
                       0.0);
  REQUIRE(st.mode == bump::Mode::Lowering);

  st = bump::on_speed_reading(std::move(st), cfg, {1000000, 12.0, 1.0});
  REQUIRE(st.mode == bump::Mode::Lowering);
  st = bump::tick(std::move(st), cfg, 3.0);
  st = bump::on_speed_reading(std::move(st), cfg, {1000001, 14.0, 4.0});
  REQUIRE(st.mode == bump::Mode::Lowered);
  REQUIRE(st.pending_fastest_mps == Approx(14.0));
  REQUIRE(st.is_consistent());
}

TEST_CASE("deflation triggers from penalty and reverses an in-flight raise") {
  const auto cfg = make_cfg();

  bump::BumpState penalty;
  penalty.mode = bump::Mode::PenaltyRaised;
  penalty = bump::on_beacon(std::move(penalty), cfg, beacon_west(cfg, 290.0, 0),
                            nullptr, 0.0);
  REQUIRE(penalty.mode == bump::Mode::Lowering);

  bump::BumpState raising;
  raising.mode = bump::Mode::Raising;
  raising.transition_started_at = 5.0;
  raising = bump::on_beacon(std::move(raising), cfg, beacon_west(cfg, 290.0, 6),
                            nullptr, 6.0);
  REQUIRE(raising.mode == bump::Mode::Lowering);
  REQUIRE(raising.transition_started_at == 6.0);
}

TEST_CASE("height interpolates linearly through transitions") {
  const auto cfg = make_cfg();  // nominal 0.08, durations 3 s

  bump::BumpState st;
  st.mode = bump::Mode::Lowering;
  st.transition_started_at = 10.0;
  REQUIRE(bump::height_m(st, cfg, 10.0) == Approx(0.08));
  REQUIRE(bump::height_m(st, cfg, 11.5) == Approx(0.04));
  REQUIRE(bump::height_m(st, cfg, 13.0) == 0.0);

  st.mode = bump::Mode::Raising;
  st.transition_started_at = 20.0;
  REQUIRE(bump::height_m(st, cfg, 20.0) == 0.0);
  REQUIRE(bump::height_m(st, cfg, 21.5) == Approx(0.04));
  REQUIRE(bump::height_m(st, cfg, 23.0) == Approx(0.08));

  st = bump::BumpState{};
  st.mode = bump::Mode::Lowered;
  REQUIRE(bump::height_m(st, cfg, 0.0) == 0.0);
}

TEST_CASE("viscosity follows the power law") {
  bump::OobleckParams p;  // n = 2
  REQUIRE(bump::viscosity(0.0, p) == 0.0);
  // n = 2 means viscosity is exactly proportional to shear rate.
  for (double g : {0.125, 1.0, 3.5, 7.75, 19.0}) {
    REQUIRE(bump::viscosity(2.0 * g, p) == 2.0 * bump::viscosity(g, p));
  }
  REQUIRE(bump::viscosity(3.0, p) == Approx(3.0));

  bump::OobleckParams cubic = p;
  cubic.flow_index_n = 3.0;
  cubic.consistency_K = 0.5;
  REQUIRE(bump::viscosity(4.0, cubic) == Approx(8.0));

  REQUIRE_THROWS_AS(bump::viscosity(-0.1, p), std::invalid_argument);
}

TEST_CASE("crossing speed by surface state") {
  const auto cfg = make_cfg();  // critical 8.33, solid 3.33, penalty 2.22

  bump::BumpState lowered;
  lowered.mode = bump::Mode::Lowered;
  REQUIRE(bump::crossing_speed(11.11, lowered, cfg, 0.0) == 11.11);

  bump::BumpState raised;  // default
  REQUIRE(bump::crossing_speed(8.0, raised, cfg, 0.0) == 8.0);
  REQUIRE(bump::crossing_speed(8.33, raised, cfg, 0.0) == 8.33);
  REQUIRE(bump::crossing_speed(11.11, raised, cfg, 0.0) ==
          cfg.oobleck.solid_crossing_speed_mps);

  bump::BumpState penalty;
  penalty.mode = bump::Mode::PenaltyRaised;
  REQUIRE(bump::crossing_speed(11.11, penalty, cfg, 0.0) ==
          cfg.oobleck.penalty_crossing_speed_mps);
  REQUIRE(bump::crossing_speed(5.0, penalty, cfg, 0.0) == 5.0);

  // A half-lowered surface still hardens under a fast wheel.
  bump::BumpState midway;
  midway.mode = bump::Mode::Lowering;
  midway.transition_started_at = 0.0;
  REQUIRE(bump::crossing_speed(11.11, midway, cfg, 1.5) ==
          cfg.oobleck.solid_crossing_speed_mps);
  // ...but not once it is fully down.
  REQUIRE(bump::crossing_speed(11.11, midway, cfg, 3.0) == 11.11);

  REQUIRE_THROWS_AS(bump::crossing_speed(-1.0, raised, cfg, 0.0),
                    std::invalid_argument);
}

TEST_CASE("config validation rejects inconsistent setups") {
  auto cfg = make_cfg();
  REQUIRE_NOTHROW(cfg.validate());

  cfg.bump_id = 0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = make_cfg();
  cfg.penalty_height_m = cfg.nominal_height_m;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = make_cfg();
  cfg.deflate_eta_threshold_s = 1.0;  // below lower_duration_s
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = make_cfg();
  cfg.fallback_speed_mps = 0.3;  // below the stationary threshold
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = make_cfg();
  cfg.oobleck.flow_index_n = 1.0;  // not dilatant
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = make_cfg();
  cfg.oobleck.penalty_crossing_speed_mps = 3.4;  // above solid
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = make_cfg();
  cfg.oobleck.critical_speed_mps = 3.0;  // below solid crossing
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("controller invariants hold under random event sequences") {
  auto cfg = make_cfg();
  std::mt19937 rnd(12345);
  bump::BumpState st;
  double now = 0.0;
  std::uint32_t ts = 0;
  std::optional<proto::EvBeacon> prev;

  for (int i = 0; i < 20000; ++i) {
    now += static_cast<double>(rnd() % 400) / 100.0;
    const unsigned op = rnd() % 100;
    if (op < 45) {
      proto::EvBeacon b;
      b.vehicle_id = 900;
      const double dist = static_cast<double>(rnd() % 200000) / 100.0;
      const double place_brg = static_cast<double>(rnd() % 36000) / 100.0;
      b.position = geo::destination_point(cfg.position, place_brg, dist);
      b.heading = geo::make_heading(static_cast<double>(rnd() % 36000) / 100.0);
      ts += 1 + rnd() % 5;
      b.timestamp_s = ts;
      st = bump::on_beacon(std::move(st), cfg, b, prev ? &*prev : nullptr, now);
      prev = b;
    } else if (op < 65) {
      st = bump::on_speed_reading(
          std::move(st), cfg,
          {1000000 + op, static_cast<double>(rnd() % 2000) / 100.0, now});
    } else if (op < 75) {
      st = bump::vehicle_crossed(std::move(st), cfg);
    } else {
      st = bump::tick(std::move(st), cfg, now);
    }
    REQUIRE(st.is_consistent());
    REQUIRE(st.pending_fastest_mps >= 0.0);
    if (st.active_ev) {
      REQUIRE((st.mode == bump::Mode::Lowering || st.mode == bump::Mode::Lowered));
    }
  }
}
