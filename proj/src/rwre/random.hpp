#pragma once

#include <cstdint>
#include <limits>

namespace rwre {

// Finalizer from SplitMix64; a bijective avalanche mix on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Keyed stream derivation: distinct (seed, tag, index) triples give
// statistically independent SplitMix64 starting states.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                                    std::uint64_t index) noexcept {
  return mix64(mix64(seed ^ mix64(tag)) + index * 0xD1B54A32D192ED03ULL);
}

// Stream tags. Changing any of these changes every derived random number.
namespace stream {
inline constexpr std::uint64_t kSite = 0x5175;
inline constexpr std::uint64_t kEnvironment = 0xE4F1;
inline constexpr std::uint64_t kReplicate = 0x4E91;
inline constexpr std::uint64_t kWalk = 0x3A1C;
inline constexpr std::uint64_t kLevel = 0x7B0D;
}  // namespace stream

// SplitMix64 stream. Satisfies UniformRandomBitGenerator so it can feed
// <random> distributions, but uniform01() is the path used for walk steps.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}
  SplitMix64(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) noexcept
      : state_(derive_seed(seed, tag, index)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace rwre
