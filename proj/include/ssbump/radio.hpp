#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "ssbump/geo.hpp"
#include "ssbump/rng.hpp"

namespace ssbump::radio {

// Long-range radio hop between the vehicle and a bump controller. Range is a
// hard disc; in-range packets suffer independent Bernoulli loss. The hardware
// this models advertises roughly 16 km line-of-sight in the open; the 8 km
// default is a conservative urban figure.
struct LoraLinkParams {
  double max_range_m = 8000.0;
  double loss_prob = 0.01;
  int spreading_factor = 7;     // 7..12
  long bandwidth_hz = 125'000;  // 125k / 250k / 500k
  int coding_rate_denom = 5;    // 5..8, i.e. 4/5 .. 4/8
  int preamble_symbols = 8;
  bool explicit_header = true;
  bool crc_on = true;
  bool low_data_rate_optimize = false;
  double carrier_hz = 433e6;  // metadata only; no propagation model uses it

  void validate() const {
    if (spreading_factor < 7 || spreading_factor > 12) {
      throw std::invalid_argument("spreading_factor must be in 7..12");
    }
    if (bandwidth_hz != 125'000 && bandwidth_hz != 250'000 &&
        bandwidth_hz != 500'000) {
      throw std::invalid_argument("bandwidth_hz must be 125000, 250000 or 500000");
    }
    if (coding_rate_denom < 5 || coding_rate_denom > 8) {
      throw std::invalid_argument("coding_rate_denom must be in 5..8");
    }
    if (preamble_symbols < 1) {
      throw std::invalid_argument("preamble_symbols must be >= 1");
    }
    if (!(max_range_m > 0)) {
      throw std::invalid_argument("max_range_m must be > 0");
    }
    if (!(loss_prob >= 0.0 && loss_prob <= 1.0)) {
      throw std::invalid_argument("loss_prob must be in [0,1]");
    }
  }
};

// Bump-to-server uplink: fixed mean latency with symmetric uniform jitter.
struct UplinkParams {
  double latency_ms_mean = 20.0;
  double latency_ms_jitter = 5.0;
  double loss_prob = 0.0;

  void validate() const {
    if (!(latency_ms_mean >= 0)) {
      throw std::invalid_argument("latency_ms_mean must be >= 0");
    }
    if (!(latency_ms_jitter >= 0)) {
      throw std::invalid_argument("latency_ms_jitter must be >= 0");
    }
    if (!(loss_prob >= 0.0 && loss_prob <= 1.0)) {
      throw std::invalid_argument("uplink loss_prob must be in [0,1]");
    }
  }
};

inline bool in_range(const geo::GeoPoint& tx, const geo::GeoPoint& rx,
                     const LoraLinkParams& params) {
  return geo::haversine_distance_m(tx, rx) <= params.max_range_m;
}

// One delivery trial. Out-of-range packets never arrive; in-range packets are
// dropped with probability loss_prob. Consumes exactly one draw from `rng`
// when in range, zero otherwise, so range changes don't shift the stream.
inline bool deliver(const LoraLinkParams& params, double distance_m,
                    RandomStream& rng) {
  if (distance_m > params.max_range_m) return false;
  return !rng.bernoulli(params.loss_prob);
}

// Time on air for one frame.
//   T_sym = 2^SF / BW
//   payload symbols = 8 + max(ceil((8 PL - 4 SF + 28 + 16 CRC - 20 H)
//                                   / (4 (SF - 2 DE))) * CR_denom, 0)
//   total = (preamble + 4.25 + payload symbols) * T_sym
// where H = 1 for implicit header (0 for explicit) and DE = 1 when the
// low-data-rate optimization is on.
inline double airtime_ms(const LoraLinkParams& params, int payload_len) {
  params.validate();
  if (payload_len < 1) {
    throw std::invalid_argument("payload_len must be >= 1");
  }
  const double t_sym_s =
      std::exp2(params.spreading_factor) / static_cast<double>(params.bandwidth_hz);
  const int crc = params.crc_on ? 1 : 0;
  const int h = params.explicit_header ? 0 : 1;
  const int de = params.low_data_rate_optimize ? 1 : 0;
  const double numer = 8.0 * payload_len - 4.0 * params.spreading_factor + 28.0 +
                       16.0 * crc - 20.0 * h;
  const double denom = 4.0 * (params.spreading_factor - 2 * de);
  const double payload_syms =
      8.0 + std::max(std::ceil(numer / denom) * params.coding_rate_denom, 0.0);
  const double total_syms = params.preamble_symbols + 4.25 + payload_syms;
  return total_syms * t_sym_s * 1000.0;
}

// One uplink trial: nullopt on loss, otherwise the latency in milliseconds.
inline std::optional<double> uplink_deliver(const UplinkParams& params,
                                            RandomStream& rng) {
  if (rng.bernoulli(params.loss_prob)) return std::nullopt;
  const double jitter =
      params.latency_ms_jitter > 0
          ? rng.uniform(-params.latency_ms_jitter, params.latency_ms_jitter)
          : 0.0;
  return std::max(0.0, params.latency_ms_mean + jitter);
}

}  // namespace ssbump::radio
