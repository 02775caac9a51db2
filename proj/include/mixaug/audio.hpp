#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mixaug/error.hpp"

namespace mixaug {

inline constexpr int kSampleRate = 44100;
inline constexpr std::size_t kChannels = 2;
inline constexpr std::size_t kNumSources = 4;

/// Ordinal order is part of every file format: vocals, drums, bass, other.
enum class SourceType { vocals = 0, drums = 1, bass = 2, other = 3 };

inline constexpr std::array<SourceType, kNumSources> kAllSources = {
    SourceType::vocals, SourceType::drums, SourceType::bass, SourceType::other};

inline constexpr std::array<std::string_view, kNumSources> kSourceNames = {"vocals", "drums", "bass", "other"};

constexpr std::string_view source_name(SourceType s) { return kSourceNames[static_cast<std::size_t>(s)]; }
constexpr std::size_t source_index(SourceType s) { return static_cast<std::size_t>(s); }

inline std::optional<SourceType> parse_source(std::string_view name) {
  for (std::size_t i = 0; i < kNumSources; ++i)
    if (kSourceNames[i] == name) return kAllSources[i];
  return std::nullopt;
}

/// Stereo float32 buffer. Processing happens in float64 and is rounded on the way back.
struct AudioClip {
  int sample_rate = kSampleRate;
  std::array<std::vector<float>, kChannels> channels;

  AudioClip() = default;
  AudioClip(int rate, std::size_t length) : sample_rate(rate) {
    for (auto& c : channels) c.assign(length, 0.0f);
  }

  std::size_t size() const noexcept { return channels[0].size(); }
  bool empty() const noexcept { return size() == 0; }
  double seconds() const noexcept { return static_cast<double>(size()) / sample_rate; }

  std::vector<float>& operator[](std::size_t ch) { return channels[ch]; }
  const std::vector<float>& operator[](std::size_t ch) const { return channels[ch]; }

  void validate() const {
    if (sample_rate <= 0) throw Error(ErrorCode::invalid_argument, "sample rate must be positive");
    if (channels[0].size() != channels[1].size())
      throw Error(ErrorCode::length_mismatch, "channel lengths differ");
  }

  friend bool operator==(const AudioClip&, const AudioClip&) = default;
};

/// Clip of `length` samples with both channels produced by `fn(channel, sample)`.
template <typename Fn>
AudioClip make_clip(int rate, std::size_t length, Fn&& fn) {
  AudioClip clip(rate, length);
  for (std::size_t c = 0; c < kChannels; ++c)
    for (std::size_t i = 0; i < length; ++i) clip[c][i] = static_cast<float>(fn(c, i));
  return clip;
}

inline AudioClip scaled(const AudioClip& clip, double gain) {
  AudioClip out = clip;
  for (auto& ch : out.channels)
    for (auto& v : ch) v = static_cast<float>(gain * v);
  return out;
}

inline double energy(const AudioClip& clip) {
  double e = 0.0;
  for (const auto& ch : clip.channels)
    for (float v : ch) e += static_cast<double>(v) * v;
  return e;
}

/// One song's four stems, equal length and rate.
struct StemSet {
  std::string song_id;
  int sample_rate = kSampleRate;
  std::array<AudioClip, kNumSources> stems;

  std::size_t size() const noexcept { return stems[0].size(); }
  AudioClip& operator[](SourceType s) { return stems[source_index(s)]; }
  const AudioClip& operator[](SourceType s) const { return stems[source_index(s)]; }

  void validate() const {
    for (std::size_t i = 0; i < kNumSources; ++i) {
      stems[i].validate();
      if (stems[i].sample_rate != sample_rate)
        throw Error(ErrorCode::rate_mismatch, song_id + ": " + std::string(kSourceNames[i]));
      if (stems[i].size() != stems[0].size())
        throw Error(ErrorCode::length_mismatch, song_id + ": " + std::string(kSourceNames[i]));
    }
  }

  friend bool operator==(const StemSet&, const StemSet&) = default;
};

/// Samplewise sum of the four stems; no clipping.
inline AudioClip mixture_of(const std::array<AudioClip, kNumSources>& stems) {
  const std::size_t n = stems[0].size();
  for (const auto& s : stems) {
    s.validate();
    if (s.size() != n) throw Error(ErrorCode::length_mismatch, "stems differ in length");
    if (s.sample_rate != stems[0].sample_rate) throw Error(ErrorCode::rate_mismatch, "stems differ in rate");
  }
  AudioClip mix(stems[0].sample_rate, n);
  for (std::size_t c = 0; c < kChannels; ++c)
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (const auto& s : stems) acc += s[c][i];
      mix[c][i] = static_cast<float>(acc);
    }
  return mix;
}

inline AudioClip mixture_of(const StemSet& set) {
  set.validate();
  return mixture_of(set.stems);
}

}  // namespace mixaug
