#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "mixaug/audio.hpp"
#include "mixaug/error.hpp"
#include "mixaug/fft.hpp"

namespace mixaug {

enum class Window { hann };

/// Periodic Hann window of length n.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

struct StftConfig {
  std::size_t fft_size = 8192;  // 185.8 ms at 44.1 kHz
  std::size_t hop_size = 2048;  // 46.4 ms
  Window window = Window::hann;

  std::size_t bins() const noexcept { return fft_size / 2 + 1; }

  /// Power-of-two FFT, hop dividing it with at least 50% overlap (Hann COLA).
  void validate() const {
    if (!is_power_of_two(fft_size) || fft_size < 4)
      throw Error(ErrorCode::invalid_argument, "fft_size must be a power of two >= 4");
    if (hop_size == 0 || fft_size % hop_size != 0 || fft_size / hop_size < 2)
      throw Error(ErrorCode::invalid_argument, "hop_size must divide fft_size with at least 2x overlap");
  }

  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

/// Complex coefficients laid out [channel][frame][bin].
struct Spectrogram {
  StftConfig config;
  int sample_rate = kSampleRate;
  std::size_t original_length = 0;
  std::size_t frames = 0;
  std::vector<cplx> data;

  std::size_t bins() const noexcept { return config.bins(); }

  std::span<cplx> frame(std::size_t ch, std::size_t f) {
    return {data.data() + (ch * frames + f) * bins(), bins()};
  }
  std::span<const cplx> frame(std::size_t ch, std::size_t f) const {
    return {data.data() + (ch * frames + f) * bins(), bins()};
  }
  cplx& at(std::size_t ch, std::size_t f, std::size_t k) { return data[(ch * frames + f) * bins() + k]; }
  const cplx& at(std::size_t ch, std::size_t f, std::size_t k) const { return data[(ch * frames + f) * bins() + k]; }
};

inline std::size_t stft_frame_count(std::size_t length, const StftConfig& cfg) { return 1 + length / cfg.hop_size; }

namespace detail {

/// Centered analysis of one real channel: frame f is centered at f * hop, with
/// zeros outside [0, n).
inline void stft_channel(std::span<const double> x, const StftConfig& cfg, const std::vector<double>& window,
                         const RealFft& fft, std::size_t frames, cplx* out) {
  const std::size_t n = cfg.fft_size, half = n / 2, bins = cfg.bins();
  std::vector<double> buf(n);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::ptrdiff_t origin = static_cast<std::ptrdiff_t>(f * cfg.hop_size) - static_cast<std::ptrdiff_t>(half);
    for (std::size_t i = 0; i < n; ++i) {
      const std::ptrdiff_t t = origin + static_cast<std::ptrdiff_t>(i);
      buf[i] = (t >= 0 && t < static_cast<std::ptrdiff_t>(x.size())) ? window[i] * x[static_cast<std::size_t>(t)] : 0.0;
    }
    fft.forward(buf, std::span<cplx>(out + f * bins, bins));
  }
}

/// Weighted overlap-add with per-sample normalization by the summed squared window.
inline std::vector<double> istft_channel(std::span<const cplx> spec, const StftConfig& cfg, const std::vector<double>& window,
                                         const RealFft& fft, std::size_t frames, std::size_t target_length) {
  const std::size_t n = cfg.fft_size, half = n / 2, bins = cfg.bins();
  std::vector<double> acc(target_length, 0.0), norm(target_length, 0.0), buf(n);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::ptrdiff_t origin = static_cast<std::ptrdiff_t>(f * cfg.hop_size) - static_cast<std::ptrdiff_t>(half);
    if (origin >= static_cast<std::ptrdiff_t>(target_length)) break;
    fft.inverse(spec.subspan(f * bins, bins), buf);
    for (std::size_t i = 0; i < n; ++i) {
      const std::ptrdiff_t t = origin + static_cast<std::ptrdiff_t>(i);
      if (t < 0 || t >= static_cast<std::ptrdiff_t>(target_length)) continue;
      acc[static_cast<std::size_t>(t)] += window[i] * buf[i];
      norm[static_cast<std::size_t>(t)] += window[i] * window[i];
    }
  }
  for (std::size_t t = 0; t < target_length; ++t) acc[t] = norm[t] > 1e-10 ? acc[t] / norm[t] : 0.0;
  return acc;
}

}  // namespace detail

/// Centered STFT with half-window zero padding; Hermitian half-spectrum.
inline Spectrogram stft(const AudioClip& clip, const StftConfig& cfg = {}) {
  cfg.validate();
  clip.validate();
  if (clip.size() < cfg.fft_size)
    throw Error(ErrorCode::out_of_range, "clip of " + std::to_string(clip.size()) + " samples is shorter than one frame");
  Spectrogram spec;
  spec.config = cfg;
  spec.sample_rate = clip.sample_rate;
  spec.original_length = clip.size();
  spec.frames = stft_frame_count(clip.size(), cfg);
  spec.data.resize(kChannels * spec.frames * cfg.bins());
  const auto window = hann_window(cfg.fft_size);
  const RealFft fft(cfg.fft_size);
  std::vector<double> x(clip.size());
  for (std::size_t c = 0; c < kChannels; ++c) {
    std::copy(clip[c].begin(), clip[c].end(), x.begin());
    detail::stft_channel(x, cfg, window, fft, spec.frames, spec.data.data() + c * spec.frames * cfg.bins());
  }
  return spec;
}

/// Float64 output of the inverse transform, one vector per channel.
inline std::array<std::vector<double>, kChannels> istft_f64(const Spectrogram& spec, std::size_t target_length) {
  spec.config.validate();
  if (spec.data.size() != kChannels * spec.frames * spec.bins())
    throw Error(ErrorCode::invalid_argument, "spectrogram data does not match its config");
  const std::size_t covered = (spec.frames == 0 ? 0 : (spec.frames - 1) * spec.config.hop_size) + spec.config.fft_size / 2;
  if (target_length > covered)
    throw Error(ErrorCode::invalid_argument, "spectrogram frames do not cover " + std::to_string(target_length) + " samples");
  const auto window = hann_window(spec.config.fft_size);
  const RealFft fft(spec.config.fft_size);
  std::array<std::vector<double>, kChannels> out;
  const std::span<const cplx> all(spec.data);
  for (std::size_t c = 0; c < kChannels; ++c)
    out[c] = detail::istft_channel(all.subspan(c * spec.frames * spec.bins(), spec.frames * spec.bins()), spec.config,
                                   window, fft, spec.frames, target_length);
  return out;
}

inline AudioClip istft(const Spectrogram& spec, std::size_t target_length) {
  const auto x = istft_f64(spec, target_length);
  AudioClip clip(spec.sample_rate, target_length);
  for (std::size_t c = 0; c < kChannels; ++c)
    for (std::size_t i = 0; i < target_length; ++i) clip[c][i] = static_cast<float>(x[c][i]);
  return clip;
}

inline AudioClip istft(const Spectrogram& spec) { return istft(spec, spec.original_length); }

}  // namespace mixaug
