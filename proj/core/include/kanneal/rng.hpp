#pragma once

#include <cstdint>
#include <random>

namespace kanneal {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 output finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of replica `index` under `base_seed`: mix64(base_seed + index * gamma).
constexpr std::uint64_t stream_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
  return mix64(base_seed + index * kGoldenGamma);
}

/// Standard normal draws from a 64-bit Mersenne twister.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

  double operator()() { return dist_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_;
};

/// Drop-in for NormalSource that always returns 0 (noise suppressed).
struct ZeroNoise {
  double operator()() const noexcept { return 0.0; }
};

}  // namespace kanneal
