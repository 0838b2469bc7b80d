#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace ssbump {

// Deterministic pseudo-random stream, derived from a master seed and a fixed
// subsystem label. Streams with distinct labels are independent, so one
// subsystem's draw count never perturbs another's sequence.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view label)
      : gen_(splitmix64(seed ^ fnv1a64(label))) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits, independent of the C++ library's
  // unspecified distribution internals.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Inverse-CDF exponential draw; rate must be > 0.
  double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

 private:
  static constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    return h;
  }

  static constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 gen_;
};

}  // namespace ssbump
