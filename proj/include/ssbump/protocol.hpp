#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ssbump/geo.hpp"

namespace ssbump::proto {

inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::uint8_t kMsgBeacon = 0x01;
inline constexpr std::uint8_t kMsgTelemetry = 0x02;

inline constexpr std::size_t kBeaconFrameSize = 22;
inline constexpr std::size_t kTelemetryFrameSize = 15;

// The emergency vehicle's broadcast: registered ID, position, direction of
// movement, plus a timestamp so the receiver can derive speed by differencing
// successive beacons.
struct EvBeacon {
  std::uint32_t vehicle_id = 0;  // > 0; 0 is reserved as invalid
  geo::GeoPoint position;
  geo::Heading heading;
  std::uint32_t timestamp_s = 0;  // seconds since scenario epoch

  bool operator==(const EvBeacon&) const = default;
};

// Uplink status report from a bump controller.
struct BumpTelemetry {
  std::uint32_t bump_id = 0;
  std::uint8_t state_code = 0;             // 0=Raised 1=Lowering 2=Lowered 3=Raising 4=PenaltyRaised
  std::uint16_t last_speed_reading_cmps = 0;  // centi-m/s
  std::uint32_t timestamp_s = 0;

  bool operator==(const BumpTelemetry&) const = default;
};

inline constexpr std::uint8_t kMaxStateCode = 4;

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final XOR.
// Check value: "123456789" -> 0x29B1; empty input -> 0xFFFF.
inline std::uint16_t crc16(std::span<const std::uint8_t> bytes) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t b : bytes) {
    crc ^= static_cast<std::uint16_t>(b) << 8;
    for (int i = 0; i < 8; ++i) {
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                           : static_cast<std::uint16_t>(crc << 1);
    }
  }
  return crc;
}

enum class DecodeErrorKind {
  TruncatedFrame,    // length does not match the msg_type's fixed size
  IntegrityFailure,  // CRC mismatch
  UnsupportedFrame,  // unknown version/msg_type or field outside its contract
};

class DecodeError : public std::runtime_error {
 public:
  DecodeError(DecodeErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  DecodeErrorKind kind() const { return kind_; }

 private:
  DecodeErrorKind kind_;
};

namespace detail {

// Quantization: degrees to signed microdegrees, rounded half away from zero.
inline std::int32_t to_microdeg(double deg) {
  return static_cast<std::int32_t>(std::llround(deg * 1e6));
}

// Heading to centidegrees. 359.995..360 rounds up to 36000 and wraps to 0,
// which is the same direction to within the quantization step.
inline std::uint16_t to_centideg(double heading_deg) {
  const long long c = std::llround(geo::normalize_heading_deg(heading_deg) * 100.0);
  return static_cast<std::uint16_t>(c % 36000);
}

inline void put_u16_le(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}

inline void put_u32_le(std::uint8_t* p, std::uint32_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
  p[2] = static_cast<std::uint8_t>(v >> 16);
  p[3] = static_cast<std::uint8_t>(v >> 24);
}

inline void put_i32_le(std::uint8_t* p, std::int32_t v) {
  put_u32_le(p, static_cast<std::uint32_t>(v));
}

inline std::uint16_t get_u16_le(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::int32_t get_i32_le(const std::uint8_t* p) {
  return static_cast<std::int32_t>(get_u32_le(p));
}

// Trailing CRC is big-endian over everything before it.
inline void seal(std::span<std::uint8_t> frame) {
  const std::uint16_t c = crc16(frame.first(frame.size() - 2));
  frame[frame.size() - 2] = static_cast<std::uint8_t>(c >> 8);
  frame[frame.size() - 1] = static_cast<std::uint8_t>(c);
}

inline bool crc_ok(std::span<const std::uint8_t> frame) {
  const std::uint16_t expect = crc16(frame.first(frame.size() - 2));
  const std::uint16_t got = static_cast<std::uint16_t>(
      (frame[frame.size() - 2] << 8) | frame[frame.size() - 1]);
  return expect == got;
}

}  // namespace detail

// Beacon frame, 22 bytes, payload fields little-endian:
//   0     version (0x01)
//   1     msg_type (0x01)
//   2-5   vehicle_id u32
//   6-9   latitude  i32 microdegrees
//   10-13 longitude i32 microdegrees
//   14-15 heading   u16 centidegrees (0..35999)
//   16-19 timestamp u32 seconds
//   20-21 CRC-16/CCITT-FALSE over bytes 0..19, big-endian
inline std::array<std::uint8_t, kBeaconFrameSize> encode_beacon(const EvBeacon& b) {
  if (b.vehicle_id == 0) {
    throw std::invalid_argument("encode_beacon: vehicle_id 0 is reserved");
  }
  if (!b.position.is_valid()) {
    throw std::invalid_argument("encode_beacon: position out of range");
  }
  std::array<std::uint8_t, kBeaconFrameSize> f{};
  f[0] = kVersion;
  f[1] = kMsgBeacon;
  detail::put_u32_le(&f[2], b.vehicle_id);
  detail::put_i32_le(&f[6], detail::to_microdeg(b.position.lat_deg));
  detail::put_i32_le(&f[10], detail::to_microdeg(b.position.lon_deg));
  detail::put_u16_le(&f[14], detail::to_centideg(b.heading.deg));
  detail::put_u32_le(&f[16], b.timestamp_s);
  detail::seal(f);
  return f;
}

// Telemetry frame, 15 bytes:
//   0     version (0x01)
//   1     msg_type (0x02)
//   2-5   bump_id u32 LE
//   6     state_code (0..4)
//   7-8   last_speed_reading u16 LE, centi-m/s
//   9-12  timestamp u32 LE
//   13-14 CRC-16/CCITT-FALSE over bytes 0..12, big-endian
inline std::array<std::uint8_t, kTelemetryFrameSize> encode_telemetry(
    const BumpTelemetry& t) {
  if (t.state_code > kMaxStateCode) {
    throw std::invalid_argument("encode_telemetry: state_code out of range");
  }
  std::array<std::uint8_t, kTelemetryFrameSize> f{};
  f[0] = kVersion;
  f[1] = kMsgTelemetry;
  detail::put_u32_le(&f[2], t.bump_id);
  f[6] = t.state_code;
  detail::put_u16_le(&f[7], t.last_speed_reading_cmps);
  detail::put_u32_le(&f[9], t.timestamp_s);
  detail::seal(f);
  return f;
}

using DecodedFrame = std::variant<EvBeacon, BumpTelemetry>;

inline DecodedFrame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) {
    throw DecodeError(DecodeErrorKind::TruncatedFrame,
                      "truncated frame: shorter than header");
  }
  if (bytes[0] != kVersion) {
    throw DecodeError(DecodeErrorKind::UnsupportedFrame,
                      "unsupported frame: unknown version");
  }
  const std::uint8_t msg_type = bytes[1];
  if (msg_type != kMsgBeacon && msg_type != kMsgTelemetry) {
    throw DecodeError(DecodeErrorKind::UnsupportedFrame,
                      "unsupported frame: unknown msg_type");
  }
  const std::size_t want =
      msg_type == kMsgBeacon ? kBeaconFrameSize : kTelemetryFrameSize;
  if (bytes.size() != want) {
    throw DecodeError(DecodeErrorKind::TruncatedFrame,
                      "truncated frame: length " + std::to_string(bytes.size()) +
                          ", expected " + std::to_string(want));
  }
  if (!detail::crc_ok(bytes)) {
    throw DecodeError(DecodeErrorKind::IntegrityFailure,
                      "integrity failure: CRC mismatch");
  }

  if (msg_type == kMsgBeacon) {
    EvBeacon b;
    b.vehicle_id = detail::get_u32_le(&bytes[2]);
    const std::int32_t lat_u = detail::get_i32_le(&bytes[6]);
    const std::int32_t lon_u = detail::get_i32_le(&bytes[10]);
    const std::uint16_t hdg_c = detail::get_u16_le(&bytes[14]);
    if (b.vehicle_id == 0) {
      throw DecodeError(DecodeErrorKind::UnsupportedFrame,
                        "unsupported frame: vehicle_id 0 is reserved");
    }
    if (lat_u < -90'000'000 || lat_u > 90'000'000 || lon_u < -180'000'000 ||
        lon_u >= 180'000'000 || hdg_c >= 36'000) {
      throw DecodeError(DecodeErrorKind::UnsupportedFrame,
                        "unsupported frame: field outside wire contract");
    }
    b.position = geo::GeoPoint{lat_u / 1e6, lon_u / 1e6};
    b.heading = geo::Heading{hdg_c / 100.0};
    b.timestamp_s = detail::get_u32_le(&bytes[16]);
    return b;
  }

  BumpTelemetry t;
  t.bump_id = detail::get_u32_le(&bytes[2]);
  t.state_code = bytes[6];
  if (t.state_code > kMaxStateCode) {
    throw DecodeError(DecodeErrorKind::UnsupportedFrame,
                      "unsupported frame: state_code outside wire contract");
  }
  t.last_speed_reading_cmps = detail::get_u16_le(&bytes[7]);
  t.timestamp_s = detail::get_u32_le(&bytes[9]);
  return t;
}

// Speed derived from two successive beacons of the same vehicle; the beacon
// itself carries no speed field.
inline double estimate_speed(const EvBeacon& prev, const EvBeacon& curr,
                             double cap_mps = geo::kSpeedCapMps) {
  if (curr.vehicle_id != prev.vehicle_id) {
    throw std::invalid_argument("estimate_speed: mismatched vehicle_id");
  }
  if (curr.timestamp_s <= prev.timestamp_s) {
    throw std::invalid_argument("non-monotonic beacon: timestamps must increase");
  }
  return geo::ground_speed_mps(prev.position, prev.timestamp_s, curr.position,
                               curr.timestamp_s, cap_mps);
}

inline bool is_approaching(const EvBeacon& beacon, const geo::GeoPoint& target,
                           double cone_half_angle_deg = geo::kDefaultConeHalfAngleDeg) {
  return geo::is_approaching(beacon.position, beacon.heading, target,
                             cone_half_angle_deg);
}

// Hex helpers for the codec CLI and the conformance vectors.
inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0F]);
  }
  return out;
}

inline std::vector<std::uint8_t> from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) {
    throw std::invalid_argument("hex string must have even length");
  }
  std::vector<std::uint8_t> out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nibble(hex[i]);
    const int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) {
      throw std::invalid_argument("invalid hex digit");
    }
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

}  // namespace ssbump::proto
