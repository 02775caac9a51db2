#pragma once

// ITU-R BS.1770-4 integrated loudness. The K-weighting biquads are derived for
// any sample rate from their analog prototypes via the bilinear transform (the
// same parameterization libebur128 uses); at 48 kHz they reproduce the
// coefficients tabulated in the recommendation.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "mixaug/audio.hpp"
#include "mixaug/error.hpp"

namespace mixaug {

inline constexpr double kDefaultLoudnessTarget = -17.0;  // LUFS, applied to mixtures

struct LoudnessLufs {
  double value = -std::numeric_limits<double>::infinity();
  bool is_silent() const noexcept { return std::isinf(value) && value < 0; }
};

struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 3> a{1.0, 0.0, 0.0};  // a[0] == 1
};

/// Stage 1 (high shelf, ~+4 dB above 1.5 kHz) and stage 2 (RLB high-pass).
inline std::pair<Biquad, Biquad> k_weighting(double rate) {
  Biquad shelf, highpass;
  {
    const double f0 = 1681.974450955533, gain_db = 3.999843853973347, q = 0.7071752369554196;
    const double k = std::tan(std::numbers::pi * f0 / rate);
    const double vh = std::pow(10.0, gain_db / 20.0);
    const double vb = std::pow(vh, 0.4996667741545416);
    const double a0 = 1.0 + k / q + k * k;
    shelf.b = {(vh + vb * k / q + k * k) / a0, 2.0 * (k * k - vh) / a0, (vh - vb * k / q + k * k) / a0};
    shelf.a = {1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0};
  }
  {
    const double f0 = 38.13547087602444, q = 0.5003270373238773;
    const double k = std::tan(std::numbers::pi * f0 / rate);
    const double a0 = 1.0 + k / q + k * k;
    highpass.b = {1.0, -2.0, 1.0};
    highpass.a = {1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0};
  }
  return {shelf, highpass};
}

namespace detail {

inline std::vector<double> filter_biquad(const std::vector<double>& x, const Biquad& f) {
  std::vector<double> y(x.size());
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = f.b[0] * x[i] + f.b[1] * x1 + f.b[2] * x2 - f.a[1] * y1 - f.a[2] * y2;
    x2 = x1;
    x1 = x[i];
    y2 = y1;
    y1 = v;
    y[i] = v;
  }
  return y;
}

}  // namespace detail

/// Per-block summed channel mean squares (unit channel weights) over 400 ms
/// blocks stepped by 100 ms.
inline std::vector<double> gating_block_powers(const AudioClip& clip) {
  const double rate = clip.sample_rate;
  const auto block = static_cast<std::size_t>(std::llround(0.4 * rate));
  const auto step = static_cast<std::size_t>(std::llround(0.1 * rate));
  if (clip.size() < block) throw Error(ErrorCode::out_of_range, "clip shorter than one 400 ms gating block");
  const auto [shelf, highpass] = k_weighting(rate);
  const std::size_t nblocks = (clip.size() - block) / step + 1;
  std::vector<double> powers(nblocks, 0.0);
  for (std::size_t c = 0; c < kChannels; ++c) {
    std::vector<double> x(clip[c].begin(), clip[c].end());
    const auto y = detail::filter_biquad(detail::filter_biquad(x, shelf), highpass);
    // Prefix sums of squares make every block an O(1) lookup.
    std::vector<double> prefix(y.size() + 1, 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) prefix[i + 1] = prefix[i] + y[i] * y[i];
    for (std::size_t j = 0; j < nblocks; ++j)
      powers[j] += (prefix[j * step + block] - prefix[j * step]) / static_cast<double>(block);
  }
  return powers;
}

inline double power_to_lufs(double power) { return -0.691 + 10.0 * std::log10(power); }

/// Integrated loudness with the -70 LUFS absolute and -10 LU relative gates.
/// Returns -inf when no block survives gating (e.g. digital silence).
inline LoudnessLufs measure_loudness(const AudioClip& clip) {
  clip.validate();
  const auto powers = gating_block_powers(clip);
  double sum = 0.0;
  std::size_t count = 0;
  for (double p : powers)
    if (p > 0.0 && power_to_lufs(p) > -70.0) {
      sum += p;
      ++count;
    }
  if (count == 0) return {};
  const double relative_gate = power_to_lufs(sum / static_cast<double>(count)) - 10.0;
  sum = 0.0;
  count = 0;
  for (double p : powers)
    if (p > 0.0 && power_to_lufs(p) > -70.0 && power_to_lufs(p) > relative_gate) {
      sum += p;
      ++count;
    }
  if (count == 0) return {};
  return {power_to_lufs(sum / static_cast<double>(count))};
}

struct NormalizedClip {
  AudioClip clip;
  double gain = 1.0;
};

/// Gain that brings `clip` to `target_lufs`. A second pass corrects the rare
/// case where the first gain moves blocks across the absolute gate.
inline double loudness_gain(const AudioClip& clip, double target_lufs) {
  const LoudnessLufs before = measure_loudness(clip);
  if (before.is_silent()) throw Error(ErrorCode::degenerate_signal, "cannot normalize a silent clip");
  double gain = std::pow(10.0, (target_lufs - before.value) / 20.0);
  const LoudnessLufs after = measure_loudness(scaled(clip, gain));
  if (!after.is_silent() && std::abs(after.value - target_lufs) > 1e-3)
    gain *= std::pow(10.0, (target_lufs - after.value) / 20.0);
  return gain;
}

inline NormalizedClip normalize_loudness(const AudioClip& clip, double target_lufs = kDefaultLoudnessTarget) {
  const double gain = loudness_gain(clip, target_lufs);
  return {scaled(clip, gain), gain};
}

}  // namespace mixaug
