#include <gtest/gtest.h>

#include "mixaug/metrics.hpp"
#include "oracles.hpp"

using namespace mixaug;

namespace {

AudioClip filtered_plus_noise(const AudioClip& ref, const std::vector<double>& taps, double noise_amp, std::uint32_t seed) {
  const auto noise = oracle::noise(ref.size(), seed, noise_amp);
  AudioClip out(ref.sample_rate, ref.size());
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t t = 0; t < ref.size(); ++t) {
      double v = noise[c][t];
      for (std::size_t k = 0; k < taps.size() && k <= t; ++k) v += taps[k] * ref[c][t - k];
      out[c][t] = static_cast<float>(v);
    }
  return out;
}

}  // namespace

TEST(SdrGlobal, ClosedForms) {
  const auto s = oracle::noise(20000, 1);
  EXPECT_NEAR(sdr_global(s, s), 100.0, 0.01);
  EXPECT_NEAR(sdr_global(s, AudioClip(44100, 20000)), 0.0, 0.01);
  EXPECT_NEAR(sdr_global(s, scaled(s, 2.0)), 0.0, 0.01);
  for (double a : {0.5, 0.9, -1.0, 1.25}) EXPECT_NEAR(sdr_global(s, scaled(s, a)), -20.0 * std::log10(std::abs(1.0 - a)), 0.01) << a;
}

TEST(SdrGlobal, SilentReferenceAndEstimate) {
  const AudioClip z(44100, 1000);
  EXPECT_NEAR(sdr_global(z, z), 0.0, 1e-12);
  EXPECT_THROW(sdr_global(z, AudioClip(44100, 999)), Error);
}

TEST(Levinson, MatchesDenseSolve) {
  std::mt19937 gen(3);
  std::normal_distribution<double> d;
  for (std::size_t n : {1u, 2u, 7u, 32u}) {
    // autocorrelation of a random sequence is positive definite
    std::vector<double> x(200);
    for (auto& v : x) v = d(gen);
    std::vector<double> r(n, 0.0), b(n);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = k; i < x.size(); ++i) r[k] += x[i] * x[i - k];
    for (auto& v : b) v = d(gen);
    std::vector<std::vector<double>> a(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a[i][j] = r[i > j ? i - j : j - i];
    const auto want = oracle::dense_solve(a, b);
    const auto got = levinson_solve(r, b);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(got[i], want[i], 1e-9 * (1 + std::abs(want[i])));
  }
}

TEST(BssEval, MatchesDenseOracleOnRandomInstances) {
  std::mt19937 gen(11);
  std::uniform_int_distribution<int> wdist(64, 2048), ldist(1, 32), fdist(1, 4);
  std::normal_distribution<double> d;
  for (int trial = 0; trial < 50; ++trial) {
    BssEvalConfig cfg;
    cfg.window = static_cast<std::size_t>(wdist(gen));
    cfg.filter_len = static_cast<std::size_t>(ldist(gen));
    cfg.hop = cfg.window / static_cast<std::size_t>(fdist(gen));
    const std::size_t n = cfg.window + 2 * cfg.hop + static_cast<std::size_t>(trial);
    const auto ref = oracle::noise(n, 100 + trial);
    std::vector<double> taps(static_cast<std::size_t>(ldist(gen)));
    for (auto& t : taps) t = 0.5 * d(gen);
    const auto est = filtered_plus_noise(ref, taps, 0.02 + 0.01 * (trial % 5), 500 + trial);
    const auto got = sdr_bsseval_frames(ref, est, cfg);
    const auto want = oracle::dense_bsseval(ref, est, cfg.window, cfg.hop, cfg.filter_len);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t f = 0; f < got.size(); ++f) ASSERT_NEAR(got[f], want[f], 1e-6) << "trial " << trial << " frame " << f;
  }
}

TEST(BssEval, PureDelayScoresHigh) {
  const auto ref = oracle::noise(44100 * 4, 5);
  for (std::int64_t delay : {0, 1, 100, 511}) {
    AudioClip est(44100, ref.size());
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t t = static_cast<std::size_t>(delay); t < ref.size(); ++t) est[c][t] = ref[c][t - static_cast<std::size_t>(delay)];
    for (double v : sdr_bsseval_frames(ref, est)) EXPECT_GE(v, 40.0) << delay;
  }
}

TEST(BssEval, SingleTapMatchesScalarProjection) {
  const auto ref = oracle::noise(4000, 6);
  const auto est = filtered_plus_noise(ref, {0.7}, 0.1, 7);
  BssEvalConfig cfg;
  cfg.window = 1000;
  cfg.hop = 500;
  cfg.filter_len = 1;
  const auto got = sdr_bsseval_frames(ref, est, cfg);
  std::array<double, 2> alpha{};
  for (std::size_t c = 0; c < 2; ++c) {
    double rr = 0, re = 0;
    for (std::size_t t = 0; t < ref.size(); ++t) rr += double(ref[c][t]) * ref[c][t], re += double(ref[c][t]) * est[c][t];
    alpha[c] = re / (rr * (1.0 + cfg.loading));
  }
  ASSERT_EQ(got.size(), 7u);
  for (std::size_t f = 0; f < got.size(); ++f) {
    double tgt = 0, err = 0;
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t t = f * 500; t < f * 500 + 1000; ++t) {
        const double p = alpha[c] * ref[c][t];
        tgt += p * p;
        err += (est[c][t] - p) * (est[c][t] - p);
      }
    EXPECT_NEAR(got[f], 10.0 * std::log10(tgt / err), 1e-9);
  }
}

TEST(BssEval, SilentReferenceWindowsAreNaN) {
  auto ref = oracle::noise(4000, 8);
  for (auto& ch : ref.channels) std::fill(ch.begin(), ch.begin() + 2000, 0.0f);
  const auto est = oracle::noise(4000, 9);
  BssEvalConfig cfg;
  cfg.window = 1000;
  cfg.hop = 1000;
  cfg.filter_len = 16;
  const auto frames = sdr_bsseval_frames(ref, est, cfg);
  ASSERT_EQ(frames.size(), 4u);
  EXPECT_TRUE(std::isnan(frames[0]));
  EXPECT_TRUE(std::isnan(frames[1]));
  EXPECT_TRUE(std::isfinite(frames[2]));
  EXPECT_THROW(sdr_bsseval_frames(AudioClip(44100, 4000), est, cfg), Error);
}

TEST(BssEval, SilentEstimateIsNegativeCap) {
  const auto ref = oracle::noise(4000, 10);
  BssEvalConfig cfg;
  cfg.window = 1000;
  cfg.hop = 1000;
  cfg.filter_len = 8;
  for (double v : sdr_bsseval_frames(ref, AudioClip(44100, 4000), cfg)) EXPECT_EQ(v, -cfg.inf_cap_db);
}

TEST(BssEval, RejectsBadShapes) {
  const auto ref = oracle::noise(1000, 1);
  EXPECT_THROW(sdr_bsseval_frames(ref, ref), Error);  // shorter than a window
  BssEvalConfig cfg;
  cfg.window = 100;
  cfg.filter_len = 200;
  EXPECT_THROW(sdr_bsseval_frames(ref, ref, cfg), Error);
}

TEST(Aggregate, MedianSkipsNaN) {
  EXPECT_EQ(finite_median({1.0, kNaN, 3.0, 2.0}), 2.0);
  EXPECT_EQ(finite_median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_TRUE(std::isnan(finite_median({kNaN})));
  EXPECT_EQ(finite_mean({1.0, kNaN, 3.0}), 2.0);
}

TEST(Aggregate, MedianOfTrackMediansAndMeanOfGlobals) {
  std::vector<SourceScore> rows;
  for (std::size_t s = 0; s < kNumSources; ++s) {
    rows.push_back({"a", static_cast<SourceType>(s), {1.0, 2.0, 9.0}, 4.0});
    rows.push_back({"b", static_cast<SourceType>(s), {kNaN, 5.0}, 6.0});
    rows.push_back({"c", static_cast<SourceType>(s), {7.0, 8.0, 3.0}, 8.0});
  }
  const auto rep = aggregate(rows);
  for (std::size_t s = 0; s < kNumSources; ++s) {
    EXPECT_EQ(rep.source_median[s], 5.0);  // median of {2, 5, 7}
    EXPECT_EQ(rep.source_global[s], 6.0);
  }
  EXPECT_EQ(rep.avg_median, 5.0);
  EXPECT_EQ(rep.rows[1].frames_silent(), 1u);
  const auto csv = summary_to_csv(rep);
  EXPECT_NE(csv.find("avg,5.000000,6.000000"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_THROW(aggregate({}), Error);
}
