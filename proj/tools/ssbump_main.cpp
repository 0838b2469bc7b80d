#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ssbump/ssbump.hpp"
#include "table1_scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitMismatch = 3;

std::optional<std::uint64_t> parse_seed(const std::string& text) {
  std::uint64_t out = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  int base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    first += 2;
    base = 16;
  }
  auto [ptr, ec] = std::from_chars(first, last, out, base);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return out;
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ssbump::sim::IoError("cannot open output file: " + out_path);
  out << text;
  out.flush();
  if (!out) throw ssbump::sim::IoError("cannot write output file: " + out_path);
}

int cmd_run(const std::string& scenario_path, const std::string& seed_text,
            bool seed_given, const std::string& out_path,
            const std::string& format_name, unsigned sweep) {
  using namespace ssbump;

  sim::Scenario sc;
  try {
    sc = sim::load_scenario_file(scenario_path);
  } catch (const sim::IoError& e) {
    std::cerr << scenario_path << ": " << e.what() << "\n";
    return kExitIo;
  } catch (const sim::ScenarioError& e) {
    for (const auto& d : e.diagnostics()) {
      std::cerr << scenario_path << ":" << d.to_string() << "\n";
    }
    return kExitValidation;
  }

  auto parsed_seed = parse_seed(seed_text);
  if (!parsed_seed) {
    std::cerr << "invalid seed '" << seed_text << "'\n";
    return kExitValidation;
  }
  const std::uint64_t seed =
      seed_given ? *parsed_seed : sc.seed.value_or(*parsed_seed);
  const auto format = format_name == "tabular" ? sim::ReportFormat::Tabular
                                               : sim::ReportFormat::Structured;

  std::string text;
  if (sweep <= 1) {
    text = sim::emit_report(sim::run(sc, seed), format);
  } else {
    std::vector<sim::Report> reports(sweep);
    std::vector<std::thread> workers;
    workers.reserve(sweep);
    for (unsigned i = 0; i < sweep; ++i) {
      workers.emplace_back([&, i] { reports[i] = sim::run(sc, seed + i); });
    }
    for (auto& w : workers) w.join();
    if (format == sim::ReportFormat::Structured) {
      std::string joined = "[\n";
      for (unsigned i = 0; i < sweep; ++i) {
        std::string one = sim::emit_report(reports[i], format);
        if (!one.empty() && one.back() == '\n') one.pop_back();
        joined += one;
        joined += (i + 1 < sweep) ? ",\n" : "\n";
      }
      joined += "]\n";
      text = std::move(joined);
    } else {
      for (unsigned i = 0; i < sweep; ++i) {
        text += "# seed " + std::to_string(seed + i) + "\n";
        text += sim::emit_report(reports[i], format);
        if (i + 1 < sweep) text += "\n";
      }
    }
  }

  try {
    write_output(text, out_path);
  } catch (const ssbump::sim::IoError& e) {
    std::cerr << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}

int cmd_table1() {
  using namespace ssbump;
  sim::Scenario sc = sim::load_scenario(cli::kTable1Scenario);
  const std::uint64_t seed = sc.seed.value_or(42);
  sim::Report report = sim::run(sc, seed);

  if (!report.conventional || !report.ssbump || !report.reduction_percent) {
    std::cerr << "table1 run produced an incomplete report\n";
    return kExitMismatch;
  }
  const double conv = report.conventional->mean_transit_s;
  const double ss = report.ssbump->mean_transit_s;
  const double raw_reduction = *report.reduction_percent;
  auto round1 = [](double v) { return std::round(v * 10.0) / 10.0; };
  const double rounded_reduction = (1.0 - round1(ss) / round1(conv)) * 100.0;

  std::printf("bump type      mean zone transit per vehicle\n");
  std::printf("conventional   %.1f s\n", conv);
  std::printf("ssbump         %.1f s\n", ss);
  std::printf("reduction      %.1f%% (rounded means) / %.1f%% (raw means)\n",
              rounded_reduction, raw_reduction);

  struct Check {
    const char* name;
    double observed, lo, hi;
  } checks[] = {
      {"conventional mean", conv, 9.3, 9.5},
      {"ssbump mean", ss, 3.5, 3.7},
      {"raw reduction", raw_reduction, 61.0, 62.2},
      {"rounded reduction", rounded_reduction, 61.0, 62.2},
  };
  bool ok = true;
  for (const auto& c : checks) {
    if (!(c.observed >= c.lo && c.observed <= c.hi)) {
      std::fprintf(stderr, "MISMATCH %s: observed %.4f, expected [%.1f, %.1f]\n",
                   c.name, c.observed, c.lo, c.hi);
      ok = false;
    }
  }
  return ok ? kExitOk : kExitMismatch;
}

int cmd_codec(const std::string& decode_hex, bool encode_given,
              std::uint64_t id, double lat, double lon, double heading,
              std::uint64_t ts) {
  using namespace ssbump;
  if (!decode_hex.empty()) {
    std::vector<std::uint8_t> bytes;
    try {
      bytes = proto::from_hex(decode_hex);
    } catch (const std::exception& e) {
      std::cerr << e.what() << "\n";
      return kExitValidation;
    }
    try {
      auto decoded = proto::decode_frame(bytes);
      if (std::holds_alternative<proto::EvBeacon>(decoded)) {
        const auto& b = std::get<proto::EvBeacon>(decoded);
        std::printf("type=beacon vehicle_id=%u lat=%.6f lon=%.6f heading=%.2f "
                    "timestamp=%u\n",
                    b.vehicle_id, b.position.lat_deg, b.position.lon_deg,
                    b.heading.deg, b.timestamp_s);
      } else {
        const auto& t = std::get<proto::BumpTelemetry>(decoded);
        std::printf("type=telemetry bump_id=%u state_code=%u "
                    "last_speed_cmps=%u timestamp=%u\n",
                    t.bump_id, t.state_code, t.last_speed_reading_cmps,
                    t.timestamp_s);
      }
      return kExitOk;
    } catch (const proto::DecodeError& e) {
      std::cerr << e.what() << "\n";
      return kExitValidation;
    }
  }
  if (!encode_given) {
    std::cerr << "codec: give --decode HEX, or --id/--lat/--lon/--heading/--ts "
                 "to encode a beacon\n";
    return kExitValidation;
  }
  try {
    proto::EvBeacon b;
    b.vehicle_id = static_cast<std::uint32_t>(id);
    b.position = geo::GeoPoint{lat, lon};
    b.heading = geo::make_heading(heading);
    b.timestamp_s = static_cast<std::uint32_t>(ts);
    const auto frame = proto::encode_beacon(b);
    std::printf("%s\n", proto::to_hex(frame).c_str());
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  }
}

int cmd_airtime(int sf, long bw, int cr, int payload, int preamble,
                bool implicit_header, bool no_crc, bool ldro) {
  using namespace ssbump;
  radio::LoraLinkParams p;
  p.spreading_factor = sf;
  p.bandwidth_hz = bw;
  p.coding_rate_denom = cr;
  p.preamble_symbols = preamble;
  p.explicit_header = !implicit_header;
  p.crc_on = !no_crc;
  p.low_data_rate_optimize = ldro;
  try {
    std::printf("%.3f ms\n", radio::airtime_ms(p, payload));
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ssbump: deterministic smart-speed-bump network simulator"};
  app.require_subcommand(1);

  // run
  std::string scenario_path;
  std::string seed_text = "42";
  std::string out_path;
  std::string format_name = "structured";
  unsigned sweep = 1;
  auto* run = app.add_subcommand("run", "Run a scenario file and emit a report");
  run->add_option("--scenario", scenario_path, "Scenario file path")->required();
  auto* seed_opt = run->add_option(
      "--seed", seed_text,
      "RNG seed, decimal or 0x-hex (default 42; a scenario may set its own)");
  run->add_option("--out", out_path,
                  "Report file path (standard output when omitted)");
  run->add_option("--format", format_name, "Report format")
      ->check(CLI::IsMember({"structured", "tabular"}))
      ->capture_default_str();
  run->add_option("--sweep", sweep,
                  "Run N consecutive seeds in parallel, merged in seed order")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();

  // table1
  app.add_subcommand("table1",
                     "Reproduce the two-row transit comparison from the "
                     "embedded fixture and check it against the expected "
                     "values");

  // codec
  std::string decode_hex;
  std::uint64_t enc_id = 0;
  double enc_lat = 0, enc_lon = 0, enc_heading = 0;
  std::uint64_t enc_ts = 0;
  auto* codec = app.add_subcommand("codec", "Encode/decode wire frames");
  auto* dec_opt = codec->add_option("--decode", decode_hex,
                                    "Hex frame to decode and print");
  auto* id_opt = codec->add_option("--id", enc_id, "Beacon vehicle_id");
  codec->add_option("--lat", enc_lat, "Beacon latitude, degrees");
  codec->add_option("--lon", enc_lon, "Beacon longitude, degrees");
  codec->add_option("--heading", enc_heading, "Beacon heading, degrees");
  codec->add_option("--ts", enc_ts, "Beacon timestamp, seconds");
  dec_opt->excludes(id_opt);

  // airtime
  int sf = 7, cr = 5, payload = 22, preamble = 8;
  long bw = 125000;
  bool implicit_header = false, no_crc = false, ldro = false;
  auto* airtime = app.add_subcommand("airtime", "LoRa time-on-air calculator");
  airtime->add_option("--sf", sf, "Spreading factor")
      ->check(CLI::Range(7, 12))
      ->capture_default_str();
  airtime->add_option("--bw", bw, "Bandwidth in Hz")
      ->check(CLI::IsMember({125000l, 250000l, 500000l}))
      ->capture_default_str();
  airtime->add_option("--cr", cr, "Coding rate denominator (4/5..4/8)")
      ->check(CLI::Range(5, 8))
      ->capture_default_str();
  airtime->add_option("--payload", payload, "Payload length in bytes")
      ->check(CLI::Range(1, 255))
      ->capture_default_str();
  airtime->add_option("--preamble", preamble, "Preamble symbol count")
      ->check(CLI::Range(1, 65535))
      ->capture_default_str();
  airtime->add_flag("--implicit-header", implicit_header, "Implicit PHY header");
  airtime->add_flag("--no-crc", no_crc, "Disable payload CRC");
  airtime->add_flag("--ldro", ldro, "Low data rate optimization");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(scenario_path, seed_text, seed_opt->count() > 0, out_path,
                     format_name, sweep);
    }
    if (app.got_subcommand("table1")) return cmd_table1();
    if (codec->parsed()) {
      return cmd_codec(decode_hex, id_opt->count() > 0, enc_id, enc_lat,
                       enc_lon, enc_heading, enc_ts);
    }
    if (airtime->parsed()) {
      return cmd_airtime(sf, bw, cr, payload, preamble, implicit_header, no_crc,
                         ldro);
    }
  } catch (const std::logic_error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    std::abort();
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
