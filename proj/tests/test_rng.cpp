#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "mixaug/rng.hpp"

using namespace mixaug;

TEST(Philox, KnownAnswerZero) {
  const auto out = detail::philox4x32_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (detail::PhiloxBlock{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = detail::philox4x32_10({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u});
  EXPECT_EQ(out, (detail::PhiloxBlock{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const auto out = detail::philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (detail::PhiloxBlock{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Hash, SplitMixFinalizer) {
  // First SplitMix64 output for state 0.
  EXPECT_EQ(mix64(0x9E3779B97F4A7C15ULL), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(mix64(0), 0u);
}

TEST(Hash, Fnv1a) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Hash, Hash64FollowsPublishedRule) {
  const std::uint64_t a = 7;
  const std::uint64_t h1 = mix64(0 ^ mix64(a + 0x9E3779B97F4A7C15ULL));
  const std::uint64_t h2 = mix64(h1 ^ mix64(fnv1a64("x") + 0x9E3779B97F4A7C15ULL));
  EXPECT_EQ(hash64({a, "x"}), h2);
  EXPECT_NE(hash64({a, "x"}), hash64({"x", a}));
  EXPECT_NE(hash64({1, 2}), hash64({2, 1}));
}

TEST(Rng, SameSeedAndPurposeReproduce) {
  Rng a(42, "train_mix"), b(42, "train_mix");
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, PurposesAreIndependentStreams) {
  Rng a(42, "train_mix"), b(42, "pool");
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a.next_u32() == b.next_u32();
  EXPECT_LT(equal, 3);
}

TEST(Rng, ForkDoesNotAdvanceParent) {
  Rng a(1, "p"), b(1, "p");
  Rng child = a.fork("c");
  (void)child.next_u64();
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, UniformIntCoversClosedRangeUniformly) {
  Rng r(3, "test");
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto v = r.uniform_int(-3, 3);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 3);
    ++counts[static_cast<std::size_t>(v + 3)];
  }
  double chi2 = 0;
  for (int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
  EXPECT_LT(chi2, 30.0);  // 6 dof; p ~ 4e-5
}

TEST(Rng, Uniform01RangeAndMoments) {
  Rng r(9, "u");
  double sum = 0, sq = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12, 0.002);
}

TEST(Rng, NormalMoments) {
  Rng r(5, "n");
  double sum = 0, sq = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    sum += v;
    sq += v * v;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.02);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Rng, EmptyRangeThrows) {
  Rng r(1, "x");
  EXPECT_THROW(r.uniform_int(2, 1), Error);
}

TEST(Rng, FullRangeAndSingleton) {
  Rng r(1, "x");
  EXPECT_EQ(r.uniform_int(5, 5), 5);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 10; ++i) seen.insert(r.uniform_int(INT64_MIN, INT64_MAX));
  EXPECT_GT(seen.size(), 8u);
}
