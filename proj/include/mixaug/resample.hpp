#pragma once

// Windowed-sinc resampler (Kaiser window, tabulated kernel with linear
// interpolation between phases).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "mixaug/audio.hpp"
#include "mixaug/error.hpp"

namespace mixaug {

struct ResampleConfig {
  int taps = 64;              // kernel width in input samples when not band-limiting
  double kaiser_beta = 8.0;
  int phases = 512;           // table resolution per input sample
};

namespace detail {

/// Kernel table h(k / phases) for k in [0, half_width * phases], cutoff `fc`
/// in units of the input Nyquist.
inline std::vector<double> sinc_table(double fc, double half_width, const ResampleConfig& cfg) {
  const std::size_t n = static_cast<std::size_t>(std::ceil(half_width * cfg.phases)) + 2;
  std::vector<double> table(n, 0.0);
  const double i0_beta = std::cyl_bessel_i(0.0, cfg.kaiser_beta);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / cfg.phases;
    if (t >= half_width) break;
    const double u = t / half_width;
    const double w = std::cyl_bessel_i(0.0, cfg.kaiser_beta * std::sqrt(1.0 - u * u)) / i0_beta;
    const double arg = std::numbers::pi * fc * t;
    const double sinc = t == 0.0 ? 1.0 : std::sin(arg) / arg;
    table[k] = fc * sinc * w;
  }
  return table;
}

}  // namespace detail

/// Output sample j reads the input at position j * ratio, so ratio 2 halves the
/// length and doubles every frequency.
inline std::vector<double> resample_channel(std::span<const double> x, double ratio, std::size_t out_len,
                                            const ResampleConfig& cfg = {}) {
  const double fc = std::min(1.0, 1.0 / ratio);
  const double half_width = 0.5 * cfg.taps / fc;
  const auto table = detail::sinc_table(fc, half_width, cfg);
  const double phases = cfg.phases;
  const auto n = static_cast<std::ptrdiff_t>(x.size());

  std::vector<double> y(out_len, 0.0);
  for (std::size_t j = 0; j < out_len; ++j) {
    const double pos = static_cast<double>(j) * ratio;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(pos - half_width)) + 1);
    const auto hi = std::min<std::ptrdiff_t>(n - 1, static_cast<std::ptrdiff_t>(std::ceil(pos + half_width)) - 1);
    double acc = 0.0;
    for (std::ptrdiff_t i = lo; i <= hi; ++i) {
      const double t = std::abs(pos - static_cast<double>(i)) * phases;
      const auto k = static_cast<std::size_t>(t);
      if (k + 1 >= table.size()) continue;
      const double frac = t - static_cast<double>(k);
      acc += x[static_cast<std::size_t>(i)] * (table[k] + frac * (table[k + 1] - table[k]));
    }
    y[j] = acc;
  }
  return y;
}

/// Output length is round(length / ratio); ratio must lie in [0.25, 4].
inline AudioClip resample(const AudioClip& clip, double ratio, const ResampleConfig& cfg = {}) {
  clip.validate();
  if (!(ratio >= 0.25 && ratio <= 4.0)) throw Error(ErrorCode::out_of_range, "resample ratio " + std::to_string(ratio));
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(clip.size()) / ratio));
  AudioClip out(clip.sample_rate, out_len);
  std::vector<double> x(clip.size());
  for (std::size_t c = 0; c < kChannels; ++c) {
    std::copy(clip[c].begin(), clip[c].end(), x.begin());
    const auto y = resample_channel(x, ratio, out_len, cfg);
    for (std::size_t i = 0; i < out_len; ++i) out[c][i] = static_cast<float>(y[i]);
  }
  return out;
}

}  // namespace mixaug
