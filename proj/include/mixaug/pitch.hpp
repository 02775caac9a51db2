#pragma once

// Pitch and time modification: phase-vocoder time stretching with identity
// phase locking, resampling-based pitch shift, and integer-sample time shift.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "mixaug/audio.hpp"
#include "mixaug/error.hpp"
#include "mixaug/fft.hpp"
#include "mixaug/resample.hpp"
#include "mixaug/stft.hpp"

namespace mixaug {

struct VocoderConfig {
  std::size_t fft_size = 4096;
  std::size_t hop_size = 1024;  // synthesis hop
};

namespace detail {

inline double wrap_phase(double p) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  p = std::fmod(p + std::numbers::pi, two_pi);
  if (p < 0) p += two_pi;
  return p - std::numbers::pi;
}

/// Stretches `x` to exactly `out_len` samples without changing its pitch.
inline std::vector<double> stretch_channel(std::span<const double> x, std::size_t out_len, const VocoderConfig& cfg) {
  const std::size_t n = cfg.fft_size, half = n / 2, bins = n / 2 + 1, hop = cfg.hop_size;
  const double rate = static_cast<double>(x.size()) / static_cast<double>(out_len);  // analysis samples per output sample
  const std::size_t frames = 1 + (out_len + hop - 1) / hop;
  const auto window = hann_window(n);
  const RealFft fft(n);

  std::vector<double> buf(n), mag(bins), phase(bins), prev_phase(bins), synth_phase(bins), next(bins);
  std::vector<cplx> spec(bins);
  std::vector<std::size_t> peaks;
  std::vector<std::size_t> owner(bins);
  std::vector<double> acc(out_len, 0.0), norm(out_len, 0.0);
  std::ptrdiff_t prev_center = 0;

  for (std::size_t m = 0; m < frames; ++m) {
    const auto center = static_cast<std::ptrdiff_t>(std::llround(static_cast<double>(m * hop) * rate));
    const std::ptrdiff_t origin = center - static_cast<std::ptrdiff_t>(half);
    for (std::size_t i = 0; i < n; ++i) {
      const std::ptrdiff_t t = origin + static_cast<std::ptrdiff_t>(i);
      buf[i] = (t >= 0 && t < static_cast<std::ptrdiff_t>(x.size())) ? window[i] * x[static_cast<std::size_t>(t)] : 0.0;
    }
    fft.forward(buf, spec);
    for (std::size_t k = 0; k < bins; ++k) {
      mag[k] = std::abs(spec[k]);
      phase[k] = std::arg(spec[k]);
    }

    if (m == 0) {
      synth_phase = phase;
    } else {
      const double step = static_cast<double>(center - prev_center);
      peaks.clear();
      for (std::size_t k = 0; k < bins; ++k) {
        bool is_peak = mag[k] > 0.0;
        for (std::size_t d = 1; d <= 2 && is_peak; ++d) {
          if (k >= d && mag[k - d] >= mag[k]) is_peak = false;
          if (k + d < bins && mag[k + d] > mag[k]) is_peak = false;
        }
        if (is_peak) peaks.push_back(k);
      }
      // Each bin is locked to the peak whose region contains it; regions end
      // at the quietest bin between neighbouring peaks.
      if (peaks.empty()) {
        for (std::size_t k = 0; k < bins; ++k) owner[k] = k;
      } else {
        std::size_t lo = 0;
        for (std::size_t p = 0; p < peaks.size(); ++p) {
          std::size_t hi = bins;
          if (p + 1 < peaks.size()) {
            hi = peaks[p] + 1;
            for (std::size_t k = peaks[p] + 1; k < peaks[p + 1]; ++k)
              if (mag[k] < mag[hi - 1] || hi - 1 == peaks[p]) hi = k + 1;
          }
          for (std::size_t k = lo; k < hi; ++k) owner[k] = peaks[p];
          lo = hi;
        }
      }
      for (std::size_t k : peaks) {
        const double omega = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        const double dev = step > 0 ? wrap_phase(phase[k] - prev_phase[k] - omega * step) / step : 0.0;
        next[k] = synth_phase[k] + (omega + dev) * static_cast<double>(hop);
      }
      if (peaks.empty()) {
        for (std::size_t k = 0; k < bins; ++k) {
          const double omega = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
          const double dev = step > 0 ? wrap_phase(phase[k] - prev_phase[k] - omega * step) / step : 0.0;
          next[k] = synth_phase[k] + (omega + dev) * static_cast<double>(hop);
        }
      } else {
        for (std::size_t k = 0; k < bins; ++k)
          if (owner[k] != k) next[k] = next[owner[k]] + phase[k] - phase[owner[k]];
      }
      synth_phase.swap(next);
    }
    prev_phase = phase;
    prev_center = center;

    for (std::size_t k = 0; k < bins; ++k) spec[k] = std::polar(mag[k], synth_phase[k]);
    fft.inverse(spec, buf);
    const std::ptrdiff_t out_origin = static_cast<std::ptrdiff_t>(m * hop) - static_cast<std::ptrdiff_t>(half);
    for (std::size_t i = 0; i < n; ++i) {
      const std::ptrdiff_t t = out_origin + static_cast<std::ptrdiff_t>(i);
      if (t < 0 || t >= static_cast<std::ptrdiff_t>(out_len)) continue;
      acc[static_cast<std::size_t>(t)] += window[i] * buf[i];
      norm[static_cast<std::size_t>(t)] += window[i] * window[i];
    }
  }
  for (std::size_t t = 0; t < out_len; ++t) acc[t] = norm[t] > 1e-10 ? acc[t] / norm[t] : 0.0;
  return acc;
}

}  // namespace detail

/// Changes duration to `out_len` samples, keeping pitch.
inline AudioClip time_stretch(const AudioClip& clip, std::size_t out_len, const VocoderConfig& cfg = {}) {
  clip.validate();
  if (clip.empty() || out_len == 0) throw Error(ErrorCode::out_of_range, "time_stretch of an empty clip");
  AudioClip out(clip.sample_rate, out_len);
  std::vector<double> x(clip.size());
  for (std::size_t c = 0; c < kChannels; ++c) {
    std::copy(clip[c].begin(), clip[c].end(), x.begin());
    const auto y = detail::stretch_channel(x, out_len, cfg);
    for (std::size_t i = 0; i < out_len; ++i) out[c][i] = static_cast<float>(y[i]);
  }
  return out;
}

/// Scales every frequency by 2^(semitones/12) and keeps the length: resample
/// (which shortens or lengthens the clip) followed by a vocoder stretch back.
inline AudioClip pitch_shift(const AudioClip& clip, double semitones, const VocoderConfig& cfg = {}) {
  clip.validate();
  if (!(semitones >= -12.0 && semitones <= 12.0))
    throw Error(ErrorCode::out_of_range, "pitch shift of " + std::to_string(semitones) + " semitones");
  if (semitones == 0.0) return clip;
  const double factor = std::exp2(semitones / 12.0);
  const AudioClip moved = resample(clip, factor);
  return time_stretch(moved, clip.size(), cfg);
}

/// Integer delay (positive) or advance (negative) with zero fill; length kept.
inline AudioClip time_shift(const AudioClip& clip, std::int64_t offset) {
  clip.validate();
  const auto n = static_cast<std::int64_t>(clip.size());
  if (offset >= n || -offset >= n)
    throw Error(ErrorCode::out_of_range, "time shift " + std::to_string(offset) + " for clip of " + std::to_string(n));
  if (offset == 0) return clip;
  AudioClip out(clip.sample_rate, clip.size());
  for (std::size_t c = 0; c < kChannels; ++c)
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int64_t src = i - offset;
      if (src >= 0 && src < n) out[c][static_cast<std::size_t>(i)] = clip[c][static_cast<std::size_t>(src)];
    }
  return out;
}

}  // namespace mixaug
