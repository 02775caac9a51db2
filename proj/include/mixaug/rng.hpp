#pragma once

// Counter-based random streams. Philox4x32-10 (Salmon et al., SC'11) keyed by
// a 64-bit hash of (seed, purpose), so every consumer owns an independent,
// platform-stable stream. No std:: distributions are used anywhere: their
// output is implementation-defined.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>

#include "mixaug/error.hpp"

namespace mixaug {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a, 64-bit.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// One hashed component: integers are taken as-is, strings go through FNV-1a.
struct HashPart {
  std::uint64_t value;
  constexpr HashPart(std::uint64_t v) noexcept : value(v) {}                      // NOLINT
  constexpr HashPart(int v) noexcept : value(static_cast<std::uint64_t>(v)) {}    // NOLINT
  constexpr HashPart(std::string_view s) noexcept : value(fnv1a64(s)) {}          // NOLINT
  constexpr HashPart(const char* s) noexcept : value(fnv1a64(s)) {}               // NOLINT
};

/// h0 = 0; h_{i+1} = mix64(h_i ^ mix64(v_i + 0x9E3779B97F4A7C15)).
constexpr std::uint64_t hash64(std::initializer_list<HashPart> parts) noexcept {
  std::uint64_t h = 0;
  for (const auto& p : parts) h = mix64(h ^ mix64(p.value + 0x9E3779B97F4A7C15ULL));
  return h;
}

namespace detail {

using PhiloxBlock = std::array<std::uint32_t, 4>;

constexpr PhiloxBlock philox4x32_10(PhiloxBlock ctr, std::array<std::uint32_t, 2> key) noexcept {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

}  // namespace detail

class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view purpose) noexcept
      : seed_(seed), key_(hash64({seed, purpose})) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t key() const noexcept { return key_; }

  /// Independent child stream; does not advance this one.
  Rng fork(std::string_view purpose) const noexcept { return Rng(key_, purpose); }

  std::uint32_t next_u32() noexcept {
    if (lane_ == 4) refill();
    return block_[lane_++];
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer on the closed range [lo, hi], unbiased (rejection).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw Error(ErrorCode::invalid_argument, "uniform_int with empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
    if (span == ~0ULL) return static_cast<std::int64_t>(next_u64());
    const std::uint64_t range = span + 1;
    const std::uint64_t limit = ~0ULL - (~0ULL % range + 1) % range;  // largest multiple - 1
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x > limit);
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + x % range);
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1)); }

  bool bernoulli(double p) noexcept { return uniform01() < p; }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() noexcept {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  void refill() noexcept {
    const detail::PhiloxBlock ctr = {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32), 0u, 0u};
    block_ = detail::philox4x32_10(ctr, {static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)});
    ++counter_;
    lane_ = 0;
  }

  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  detail::PhiloxBlock block_{};
  int lane_ = 4;
};

}  // namespace mixaug
