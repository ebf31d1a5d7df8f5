#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al., SC 2011).
//
// Every draw is a pure function of (key, counter), so a stream can be
// addressed by (seed, path, step) and generated in any order or on any
// thread with identical results.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace gsde {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

inline Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key) noexcept {
  constexpr std::uint32_t kMulA = 0xD2511F53u;
  constexpr std::uint32_t kMulB = 0xCD9E8D57u;
  constexpr std::uint32_t kWeylA = 0x9E3779B9u;
  constexpr std::uint32_t kWeylB = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeylA;
      key[1] += kWeylB;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// Uniform double in the open interval (0, 1) from the top 52 random bits;
/// the half-step offset keeps both endpoints out after rounding.
inline double open_unit_interval(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Two independent standard normals from one Philox block (Box-Muller).
inline std::array<double, 2> normal_pair(const Philox4x32Counter& block) noexcept {
  const double u1 = open_unit_interval(block[0], block[1]);
  const double u2 = open_unit_interval(block[2], block[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(angle), r * std::sin(angle)};
}

// Domain tags keep the Brownian stream and the auxiliary streams disjoint
// even when they share a user seed.
inline constexpr std::uint32_t kBrownianDomain = 0x0u;
inline constexpr std::uint32_t kAuxiliaryDomain = 0x5bd1e995u;

inline Philox4x32Key make_key(std::uint64_t seed, std::uint32_t domain) noexcept {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32) ^ domain};
}

/// Writes m standard normals for increment `step` of `path`.
///
/// Counter layout: (step, block-within-step, path low word, path high word).
/// Steps 0..k never depend on anything generated later.
inline void brownian_normals(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                             std::span<double> out) noexcept {
  const Philox4x32Key key = make_key(seed, kBrownianDomain);
  std::uint32_t block = 0;
  for (std::size_t j = 0; j < out.size(); j += 2, ++block) {
    const auto z = normal_pair(philox4x32_10(
        {static_cast<std::uint32_t>(step), block, static_cast<std::uint32_t>(path),
         static_cast<std::uint32_t>(path >> 32)},
        key));
    out[j] = z[0];
    if (j + 1 < out.size()) out[j + 1] = z[1];
  }
  // TODO: fold the high word of `step` into the counter if grids ever exceed 2^32 steps.
}

/// Sequential stream (seed, stream id) for auxiliary randomness: probe
/// segments, oracle samples, search candidates.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(make_key(seed, kAuxiliaryDomain)), stream_(stream) {}

  std::uint32_t next_u32() noexcept {
    if (used_ == 4) refill();
    return buffer_[used_++];
  }

  /// Uniform in (0, 1).
  double uniform() noexcept {
    const std::uint32_t hi = next_u32();
    const std::uint32_t lo = next_u32();
    return open_unit_interval(hi, lo);
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    Philox4x32Counter block{next_u32(), next_u32(), next_u32(), next_u32()};
    const auto z = normal_pair(block);
    spare_ = z[1];
    has_spare_ = true;
    return z[0];
  }

 private:
  void refill() noexcept {
    buffer_ = philox4x32_10({static_cast<std::uint32_t>(counter_),
                             static_cast<std::uint32_t>(counter_ >> 32),
                             static_cast<std::uint32_t>(stream_),
                             static_cast<std::uint32_t>(stream_ >> 32)},
                            key_);
    ++counter_;
    used_ = 0;
  }

  Philox4x32Key key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  Philox4x32Counter buffer_{};
  int used_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gsde
