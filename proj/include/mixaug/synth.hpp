#pragma once

// Procedural four-stem songs on a shared beat grid in a major key. Tonal
// stems are additive syntheses that stop below Nyquist; drums are filtered
// noise bursts on every beat.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mixaug/audio.hpp"
#include "mixaug/csv.hpp"
#include "mixaug/dataset.hpp"
#include "mixaug/error.hpp"
#include "mixaug/rng.hpp"

namespace mixaug {

struct SynthSongConfig {
  double bpm = 120.0;
  int key_root = 48;  // MIDI note of the tonic
  double duration = 12.0;  // seconds
  std::uint64_t seed = 0;
  double correlation = 0.0;  // probability that 'other' doubles the melody in a bar
  int sample_rate = kSampleRate;

  void validate() const {
    if (!(bpm >= 40.0 && bpm <= 220.0)) throw Error(ErrorCode::invalid_argument, "bpm must lie in [40, 220]");
    if (key_root < 0 || key_root > 127) throw Error(ErrorCode::invalid_argument, "key_root must be a MIDI note");
    if (!(duration >= 12.0)) throw Error(ErrorCode::invalid_argument, "duration must be at least 12 s");
    if (!(correlation >= 0.0 && correlation <= 1.0)) throw Error(ErrorCode::invalid_argument, "correlation must lie in [0, 1]");
    if (sample_rate <= 0) throw Error(ErrorCode::invalid_argument, "sample rate must be positive");
  }
};

inline constexpr std::array<int, 7> kMajorScale = {0, 2, 4, 5, 7, 9, 11};

/// Semitones above the tonic of a (possibly multi-octave) scale degree.
inline int scale_semitones(int degree) {
  const int octave = degree >= 0 ? degree / 7 : -((6 - degree) / 7);
  return 12 * octave + kMajorScale[static_cast<std::size_t>(degree - 7 * octave)];
}

inline double midi_to_hz(double note) { return 440.0 * std::exp2((note - 69.0) / 12.0); }

/// Bass register note (MIDI 33..44, i.e. 55-104 Hz) with the given pitch class.
inline int bass_note(int pitch_class) { return 33 + ((pitch_class - 33) % 12 + 12) % 12; }

namespace detail {

struct Voice {
  double f0 = 0.0;
  std::size_t start = 0;
  std::size_t length = 0;
  double amp = 1.0;
  int harmonics = 1;
  double rolloff = 1.0;  // harmonic h has amplitude h^-rolloff
  double attack = 0.01;  // seconds
  double release = 0.02;
  double decay = 0.0;  // exponential time constant in seconds; 0 holds
  double vibrato_rate = 0.0;
  double vibrato_cents = 0.0;
};

/// Adds one harmonic note; partials that could reach 0.45 * rate are skipped.
inline void add_voice(std::vector<double>& out, const Voice& v, int rate) {
  const double fs = rate;
  const double top = v.f0 * std::exp2(v.vibrato_cents / 1200.0);
  const std::size_t end = std::min(out.size(), v.start + v.length);
  int harmonics = 0;
  while (harmonics < v.harmonics && top * (harmonics + 1) < 0.45 * fs) ++harmonics;
  if (harmonics == 0) return;
  std::vector<double> amps(static_cast<std::size_t>(harmonics));
  for (int h = 1; h <= harmonics; ++h) amps[static_cast<std::size_t>(h - 1)] = std::pow(h, -v.rolloff);
  double phase = 0.0;
  const double dur = static_cast<double>(v.length) / fs;
  for (std::size_t i = v.start; i < end; ++i) {
    const double t = static_cast<double>(i - v.start) / fs;
    double env = std::min(1.0, t / v.attack) * std::min(1.0, (dur - t) / v.release);
    if (v.decay > 0.0) env *= std::exp(-t / v.decay);
    double s = 0.0;
    for (int h = 1; h <= harmonics; ++h) s += amps[static_cast<std::size_t>(h - 1)] * std::sin(phase * h);
    out[i] += v.amp * std::max(0.0, env) * s;
    const double cents = v.vibrato_cents * std::sin(2.0 * std::numbers::pi * v.vibrato_rate * t);
    phase += 2.0 * std::numbers::pi * v.f0 * std::exp2(cents / 1200.0) / fs;
    if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
  }
}

/// Scales both channels together to a peak of `peak`.
inline AudioClip to_stereo(const std::vector<double>& mono, int rate, double left, double right, double peak) {
  double m = 0.0;
  for (double v : mono) m = std::max(m, std::abs(v));
  const double g = m > 0.0 ? peak / (m * std::max(left, right)) : 0.0;
  AudioClip out(rate, mono.size());
  for (std::size_t i = 0; i < mono.size(); ++i) {
    out[0][i] = static_cast<float>(mono[i] * g * left);
    out[1][i] = static_cast<float>(mono[i] * g * right);
  }
  return out;
}

}  // namespace detail

inline constexpr double kStemPeak = 0.5;

inline StemSet synth_song(const SynthSongConfig& cfg, const std::string& song_id = "song") {
  cfg.validate();
  const int rate = cfg.sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration * rate));
  const double beat_s = 60.0 / cfg.bpm;
  const auto beat_at = [&](std::size_t b) { return static_cast<std::size_t>(std::llround(static_cast<double>(b) * beat_s * rate)); };
  std::size_t beats = 0;
  while (beat_at(beats) < n) ++beats;
  const std::size_t bars = (beats + 3) / 4;

  const Rng base(cfg.seed, "synth");
  Rng chord_rng = base.fork("chords"), melody_rng = base.fork("melody"), drum_rng = base.fork("drums"),
      double_rng = base.fork("doubling");

  // Chord per bar from I, IV, V, vi; melody degree per beat from the chord.
  constexpr std::array<int, 4> kProgression = {0, 3, 4, 5};
  std::vector<int> chord(bars);
  for (auto& c : chord) c = kProgression[chord_rng.index(kProgression.size())];
  std::vector<int> melody(beats);
  constexpr std::array<int, 4> kChordTones = {0, 2, 4, 7};
  for (std::size_t b = 0; b < beats; ++b) melody[b] = chord[b / 4] + kChordTones[melody_rng.index(kChordTones.size())];
  std::vector<bool> doubled(bars);
  for (std::size_t i = 0; i < bars; ++i) doubled[i] = double_rng.bernoulli(cfg.correlation);

  std::vector<double> vocals(n, 0.0), drums(n, 0.0), bass(n, 0.0), other(n, 0.0);
  const auto note_len = [&](std::size_t from, std::size_t count) { return beat_at(from + count) - beat_at(from); };
  const auto melody_voice = [&](std::size_t b) {
    detail::Voice v;
    v.f0 = midi_to_hz(cfg.key_root + 12 + scale_semitones(melody[b]));
    v.start = beat_at(b);
    v.length = note_len(b, 1);
    v.harmonics = 8;
    v.rolloff = 1.0;
    v.attack = 0.02;
    v.release = 0.03;
    v.vibrato_rate = 5.5;
    v.vibrato_cents = 25.0;
    return v;
  };

  for (std::size_t b = 0; b < beats; ++b) {
    detail::add_voice(vocals, melody_voice(b), rate);

    const int root_pc = (cfg.key_root + scale_semitones(chord[b / 4])) % 12;
    detail::Voice bv;
    bv.f0 = midi_to_hz(bass_note(root_pc));
    bv.start = beat_at(b);
    bv.length = note_len(b, 1);
    bv.harmonics = 6;
    bv.rolloff = 1.0;
    bv.attack = 0.01;
    bv.release = 0.02;
    bv.decay = 0.5 * beat_s;
    detail::add_voice(bass, bv, rate);

    // Kick-like low burst on odd beats of the bar, snare-like bright burst otherwise.
    const bool low = b % 2 == 0;
    const std::size_t start = beat_at(b);
    const std::size_t len = std::min(note_len(b, 1), static_cast<std::size_t>(0.25 * rate));
    const double tau = (low ? 0.06 : 0.04) * rate;
    const double lp = low ? 0.05 : 0.6;  // one-pole smoothing coefficient
    double state = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < len && start + i < n; ++i) {
      const double noise = drum_rng.uniform(-1.0, 1.0);
      state += lp * (noise - state);
      const double shaped = low ? state : state - prev;  // low-pass or a crude high-pass of it
      prev = state;
      drums[start + i] += (low ? 4.0 : 1.5) * shaped * std::exp(-static_cast<double>(i) / tau);
    }
  }

  for (std::size_t bar = 0; bar < bars; ++bar) {
    const std::size_t first = 4 * bar, count = std::min<std::size_t>(4, beats - first);
    for (int tone : {0, 2, 4}) {
      detail::Voice v;
      v.f0 = midi_to_hz(cfg.key_root + scale_semitones(chord[bar] + tone));
      v.start = beat_at(first);
      v.length = note_len(first, count);
      v.harmonics = 5;
      v.rolloff = 2.0;
      v.attack = 0.05;
      v.release = 0.05;
      v.amp = 0.6;
      detail::add_voice(other, v, rate);
    }
    if (doubled[bar])
      for (std::size_t b = first; b < first + count; ++b) {
        detail::Voice v = melody_voice(b);
        v.amp = 0.8;
        detail::add_voice(other, v, rate);
      }
  }

  StemSet set;
  set.song_id = song_id;
  set.sample_rate = rate;
  set.stems[source_index(SourceType::vocals)] = detail::to_stereo(vocals, rate, 1.0, 1.0, kStemPeak);
  set.stems[source_index(SourceType::drums)] = detail::to_stereo(drums, rate, 0.9, 1.0, kStemPeak);
  set.stems[source_index(SourceType::bass)] = detail::to_stereo(bass, rate, 1.0, 1.0, kStemPeak);
  set.stems[source_index(SourceType::other)] = detail::to_stereo(other, rate, 1.0, 0.8, kStemPeak);
  set.validate();
  return set;
}

/// Ranges that per-song parameters are drawn from (closed intervals).
struct SynthRanges {
  double bpm_lo = 80.0, bpm_hi = 160.0;
  int key_lo = 45, key_hi = 56;
  double duration_lo = 12.0, duration_hi = 16.0;
  double correlation_lo = 0.5, correlation_hi = 0.5;

  void validate() const {
    SynthSongConfig lo{bpm_lo, key_lo, duration_lo, 0, correlation_lo}, hi{bpm_hi, key_hi, duration_hi, 0, correlation_hi};
    lo.validate();
    hi.validate();
    if (bpm_lo > bpm_hi || key_lo > key_hi || duration_lo > duration_hi || correlation_lo > correlation_hi)
      throw Error(ErrorCode::invalid_argument, "synth range with lo > hi");
  }
};

struct SynthSong {
  SynthSongConfig config;
  StemSet stems;
};

/// Draws per-song configs in order: bpm, key, duration, correlation, seed.
inline std::vector<SynthSongConfig> draw_synth_configs(std::size_t n_songs, Rng& rng, const SynthRanges& ranges = {}) {
  if (n_songs == 0) throw Error(ErrorCode::invalid_argument, "n_songs must be at least 1");
  ranges.validate();
  std::vector<SynthSongConfig> out(n_songs);
  for (auto& c : out) {
    c.bpm = rng.uniform(ranges.bpm_lo, ranges.bpm_hi);
    c.key_root = static_cast<int>(rng.uniform_int(ranges.key_lo, ranges.key_hi));
    c.duration = rng.uniform(ranges.duration_lo, ranges.duration_hi);
    c.correlation = rng.uniform(ranges.correlation_lo, ranges.correlation_hi);
    c.seed = rng.next_u64();
  }
  return out;
}

inline std::string synth_song_id(std::size_t i, std::size_t n) {
  const std::size_t width = std::max<std::size_t>(2, std::to_string(n - 1).size());
  std::string num = std::to_string(i);
  return "song" + std::string(width - std::min(width, num.size()), '0') + num;
}

inline std::vector<SynthSong> synth_songs(std::size_t n_songs, Rng& rng, const SynthRanges& ranges = {}) {
  const auto configs = draw_synth_configs(n_songs, rng, ranges);
  std::vector<SynthSong> out;
  for (std::size_t i = 0; i < configs.size(); ++i) out.push_back({configs[i], synth_song(configs[i], synth_song_id(i, n_songs))});
  return out;
}

inline StemLibrary synth_library(std::size_t n_songs, Rng& rng, const SynthRanges& ranges = {}, Split split = Split::train) {
  std::vector<StemSet> sets;
  for (auto& s : synth_songs(n_songs, rng, ranges)) sets.push_back(std::move(s.stems));
  return StemLibrary(std::move(sets), split);
}

inline constexpr std::string_view kSynthParamsHeader = "song_id,bpm,key_root,duration_s,correlation,seed";

/// Writes n songs in dataset layout plus `params.csv`, then indexes the tree.
inline DatasetIndex synth_dataset(std::size_t n_songs, Rng& rng, const SynthRanges& ranges, const fs::path& root,
                                  Split split = Split::train) {
  std::ostringstream params;
  params << kSynthParamsHeader << '\n';
  for (const auto& s : synth_songs(n_songs, rng, ranges)) {
    write_song(s.stems, root);
    params << s.stems.song_id << ',' << csv::format_exact(s.config.bpm) << ',' << s.config.key_root << ','
           << csv::format_exact(s.config.duration) << ',' << csv::format_exact(s.config.correlation) << ','
           << s.config.seed << '\n';
  }
  csv::write_text(root / "params.csv", params.str());
  return index_dataset(root, split);
}

}  // namespace mixaug
