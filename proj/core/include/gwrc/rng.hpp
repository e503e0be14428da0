#pragma once

#include <cstdint>

namespace gwrc {

// splitmix64 finalizer (Steele/Lea/Flood; constants due to Vigna).
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// Stable key derivation for splittable streams. Every tree node, replica and
// estimator owns a key derived from (parent key, salt); contents generated
// from a key are independent of the order in which keys are visited.
inline constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t salt) noexcept {
  return mix64(key + kGolden * (salt + 1));
}

// Counter-mode splitmix64 stream: one u64 of state, no platform-dependent
// behaviour. All distribution sampling in this project goes through explicit
// inverse-CDF transforms of these uniforms so that replays are bit-exact.
class RandomStream {
 public:
  RandomStream() = default;
  explicit RandomStream(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept {
    state_ += kGolden;
    return mix64(state_);
  }

  // uniform on [0,1), 53-bit resolution
  double next_unit() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0,1), never returns an endpoint; safe under log/quantile maps
  double next_unit_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0;
};

// Inverse standard normal CDF for u in (0,1). Acklam's rational approximation
// with one Halley refinement step; absolute error well below 1e-12.
double probit(double u) noexcept;

}  // namespace gwrc
