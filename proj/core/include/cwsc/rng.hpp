#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace cwsc {

// Counter-based generator. Draw k (k = 0, 1, ...) of stream `key` is
//
//   mix64(key + (k + 1) * 0x9E3779B97F4A7C15)
//
// with mix64 the SplitMix64 finalizer
//
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z =  z ^ (z >> 31)
//
// and key = mix64(seed). Doubles take the top 53 bits. Any language with
// wrapping 64-bit unsigned arithmetic reproduces the streams bit for bit.
inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// FNV-1a over bytes; used for experiment ids and checksums.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// seed(replica) = stable hash of (master seed, experiment id, N, replica).
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view experiment,
                                    std::uint64_t n, std::uint64_t replica) noexcept {
  std::uint64_t h = mix64(master_seed ^ fnv1a64(experiment));
  h = mix64(h + kGoldenGamma * (n + 1));
  h = mix64(h ^ (replica * 0xD1B54A32D192ED03ULL + 1));
  return h;
}

class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t seed) noexcept : key_(mix64(seed)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept { return mix64(key_ + kGoldenGamma * ++counter_); }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by Box-Muller; consumes two draws.
  double normal() noexcept {
    const double r = std::sqrt(-2.0 * std::log(uniform_open()));
    return r * std::cos(2.0 * 3.14159265358979323846 * uniform());
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace cwsc
