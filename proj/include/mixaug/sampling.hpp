#pragma once

// Seeded generation of training examples. Every sampler consumes its Rng in a
// fixed order, documented per function, so a (index, config, seed) triple
// determines the MixSpec stream bit for bit on any platform.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mixaug/audio.hpp"
#include "mixaug/csv.hpp"
#include "mixaug/dataset.hpp"
#include "mixaug/error.hpp"
#include "mixaug/log.hpp"
#include "mixaug/loudness.hpp"
#include "mixaug/perturb.hpp"
#include "mixaug/rng.hpp"

namespace mixaug {

enum class MixKind { original, random, within_song, pooled };

inline std::string_view kind_name(MixKind k) {
  switch (k) {
    case MixKind::original: return "original";
    case MixKind::random: return "random";
    case MixKind::within_song: return "within_song";
    case MixKind::pooled: return "pooled";
  }
  return "original";
}

inline MixKind parse_mix_kind(std::string_view s) {
  for (MixKind k : {MixKind::original, MixKind::random, MixKind::within_song, MixKind::pooled})
    if (kind_name(k) == s) return k;
  throw Error(ErrorCode::invalid_argument, "mix kind '" + std::string(s) + "'");
}

/// Where one source's excerpt comes from and what happens to it.
struct SourceDraw {
  std::string song_id;
  std::size_t start_sample = 0;
  double gain = 1.0;
  int pitch_semitones = 0;
  std::int64_t time_shift_samples = 0;

  friend bool operator==(const SourceDraw&, const SourceDraw&) = default;
};

struct MixSpec {
  std::uint64_t mix_id = 0;
  MixKind kind = MixKind::original;
  std::array<SourceDraw, kNumSources> sources;

  void validate() const {
    for (const auto& s : sources)
      if (!std::isfinite(s.gain) || s.gain <= 0.0) throw Error(ErrorCode::invalid_argument, "gain must be finite and > 0");
    if (kind == MixKind::original)
      for (const auto& s : sources)
        if (s.song_id != sources[0].song_id || s.start_sample != sources[0].start_sample)
          throw Error(ErrorCode::invalid_argument, "original mix with differing songs or starts");
  }

  /// Sets pitch/time fields from a perturbation.
  void attach(const PerturbSpec& p) {
    for (std::size_t i = 0; i < kNumSources; ++i) {
      sources[i].pitch_semitones = p.pitch_semitones[i];
      sources[i].time_shift_samples = p.time_shift_samples[i];
    }
  }

  friend bool operator==(const MixSpec&, const MixSpec&) = default;
};

/// Unbounded within-song spread.
inline constexpr std::optional<std::size_t> kUnboundedSpread = std::nullopt;

struct SamplerConfig {
  double p = 0.0;                                  // probability of an original mix
  std::size_t chunk_len = kDefaultChunkLen;
  std::uint64_t seed = 0;
  std::optional<std::size_t> within_song_ts = kUnboundedSpread;

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::invalid_argument, "p must lie in [0, 1]");
    if (chunk_len == 0) throw Error(ErrorCode::invalid_argument, "chunk_len must be positive");
  }
};

// ---------------------------------------------------------------------------
// Samplers

namespace detail {

/// Songs with at least `min_len` samples, in index order.
inline std::vector<const SongEntry*> eligible_songs(const DatasetIndex& index, std::size_t min_len) {
  std::vector<const SongEntry*> out;
  for (const auto& s : index.songs)
    if (s.length >= min_len) out.push_back(&s);
  if (out.empty())
    throw Error(ErrorCode::no_eligible_songs, "no song has " + std::to_string(min_len) + " samples");
  return out;
}

inline std::size_t draw_start(const SongEntry& song, std::size_t chunk_len, Rng& rng) {
  return static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(song.length - chunk_len)));
}

}  // namespace detail

/// Logs one warning per song too short to yield a chunk; returns how many.
inline std::size_t warn_short_songs(const DatasetIndex& index, std::size_t chunk_len) {
  std::size_t n = 0;
  for (const auto& s : index.songs)
    if (s.length < chunk_len) {
      log_warn(s.song_id + " is shorter than one chunk (" + std::to_string(s.length) + " < " +
               std::to_string(chunk_len) + " samples) and is excluded from sampling");
      ++n;
    }
  return n;
}

/// Draws: song (uniform over eligible songs), then start.
inline MixSpec sample_original_chunk(const DatasetIndex& index, Rng& rng, const SamplerConfig& cfg) {
  const auto songs = detail::eligible_songs(index, cfg.chunk_len);
  const SongEntry& song = *songs[rng.index(songs.size())];
  const std::size_t start = detail::draw_start(song, cfg.chunk_len, rng);
  MixSpec spec;
  spec.kind = MixKind::original;
  for (auto& s : spec.sources) s = SourceDraw{song.song_id, start};
  return spec;
}

/// Draws per source in canonical order: song, then start.
inline MixSpec sample_random_mix(const DatasetIndex& index, Rng& rng, const SamplerConfig& cfg) {
  const auto songs = detail::eligible_songs(index, cfg.chunk_len);
  MixSpec spec;
  spec.kind = MixKind::random;
  for (auto& s : spec.sources) {
    const SongEntry& song = *songs[rng.index(songs.size())];
    s = SourceDraw{song.song_id, detail::draw_start(song, cfg.chunk_len, rng)};
  }
  return spec;
}

/// Draws u ~ U[0,1) first; u < p selects an original mix, otherwise a random mix.
inline MixSpec sample_training_example(const DatasetIndex& index, Rng& rng, const SamplerConfig& cfg) {
  cfg.validate();
  return rng.bernoulli(cfg.p) ? sample_original_chunk(index, rng, cfg) : sample_random_mix(index, rng, cfg);
}

/// Draws: song, base start, then per source either an offset in [-ts, ts]
/// (clamped into the song) or, for unbounded ts, an independent start.
inline MixSpec sample_within_song(const DatasetIndex& index, Rng& rng, const SamplerConfig& cfg,
                                  std::optional<std::size_t> ts) {
  const std::size_t need = cfg.chunk_len + (ts ? 2 * *ts : 0);
  const auto songs = detail::eligible_songs(index, need);
  const SongEntry& song = *songs[rng.index(songs.size())];
  const std::size_t base = detail::draw_start(song, cfg.chunk_len, rng);
  const auto last = static_cast<std::int64_t>(song.length - cfg.chunk_len);
  MixSpec spec;
  spec.kind = MixKind::within_song;
  for (auto& s : spec.sources) {
    std::int64_t start;
    if (ts) {
      const auto spread = static_cast<std::int64_t>(*ts);
      start = std::clamp<std::int64_t>(static_cast<std::int64_t>(base) + rng.uniform_int(-spread, spread), 0, last);
    } else {
      start = rng.uniform_int(0, last);
    }
    s = SourceDraw{song.song_id, static_cast<std::size_t>(start)};
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Fixed pools

class MixPool {
 public:
  MixPool(std::vector<MixSpec> specs, std::uint64_t seed, std::uint64_t fingerprint)
      : specs_(std::move(specs)), seed_(seed), fingerprint_(fingerprint) {}

  const std::vector<MixSpec>& specs() const noexcept { return specs_; }
  std::size_t size() const noexcept { return specs_.size(); }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

 private:
  std::vector<MixSpec> specs_;
  std::uint64_t seed_;
  std::uint64_t fingerprint_;
};

/// R random mixes generated once, in order, from `rng`.
inline MixPool build_fixed_pool(const DatasetIndex& index, std::size_t r, Rng& rng, std::size_t chunk_len = kDefaultChunkLen) {
  if (r == 0) throw Error(ErrorCode::invalid_argument, "pool size must be >= 1");
  const std::uint64_t fp = hash64({"pool", index.fingerprint(), rng.key(), static_cast<std::uint64_t>(r),
                                   static_cast<std::uint64_t>(chunk_len)});
  SamplerConfig cfg;
  cfg.chunk_len = chunk_len;
  std::vector<MixSpec> specs;
  specs.reserve(r);
  for (std::size_t i = 0; i < r; ++i) {
    MixSpec s = sample_random_mix(index, rng, cfg);
    s.mix_id = i;
    specs.push_back(std::move(s));
  }
  return MixPool(std::move(specs), rng.seed(), fp);
}

/// Uniform with replacement; mix_id keeps the pool position.
inline MixSpec sample_from_pool(const MixPool& pool, Rng& rng) {
  if (pool.size() == 0) throw Error(ErrorCode::empty_input, "empty pool");
  MixSpec s = pool.specs()[rng.index(pool.size())];
  s.kind = MixKind::pooled;
  return s;
}

// ---------------------------------------------------------------------------
// Realization

struct RealizedMix {
  AudioClip mixture;
  std::array<AudioClip, kNumSources> stems;
  double loudness_gain = 1.0;
};

/// Extracts, gains and perturbs each source, sums them, then applies one
/// mixture-loudness gain to the stems and re-sums, so the returned mixture is
/// the stem sum. Silent mixtures are left at unit gain.
inline RealizedMix realize(const StemLibrary& lib, const MixSpec& spec, std::size_t chunk_len,
                           std::optional<double> loudness_target = kDefaultLoudnessTarget) {
  spec.validate();
  RealizedMix out;
  for (std::size_t i = 0; i < kNumSources; ++i) {
    const SourceDraw& d = spec.sources[i];
    const StemSet& song = lib.song(d.song_id);
    if (d.start_sample + chunk_len > song.size())
      throw Error(ErrorCode::stale_spec, d.song_id + " has no chunk at " + std::to_string(d.start_sample));
    AudioClip chunk = extract_chunk(song.stems[i], d.start_sample, chunk_len);
    if (d.gain != 1.0) chunk = scaled(chunk, d.gain);
    out.stems[i] = perturb_stem(chunk, d.pitch_semitones, d.time_shift_samples);
  }
  out.mixture = mixture_of(out.stems);
  if (loudness_target) {
    if (!measure_loudness(out.mixture).is_silent()) {
      out.loudness_gain = loudness_gain(out.mixture, *loudness_target);
      for (auto& s : out.stems) s = scaled(s, out.loudness_gain);
      out.mixture = mixture_of(out.stems);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset-level transforms

/// One remixed song: source n comes from donors[n], all trimmed to `length`.
struct RemixPlan {
  std::string song_id;
  std::array<std::string, kNumSources> donors;
  std::size_t length = 0;
};

/// Remix i takes source n from song perm[(i + offset[n]) mod M], with a random
/// permutation `perm` and distinct offsets (offset[0] = 0). Each source type is
/// therefore a permutation of the songs and every remix has four distinct
/// donors. Draws: Fisher-Yates over songs, then Fisher-Yates over 1..M-1.
inline std::vector<RemixPlan> plan_song_level_remix(const DatasetIndex& index, Rng& rng) {
  const std::size_t m = index.songs.size();
  if (m < kNumSources) throw Error(ErrorCode::empty_input, "song-level remix needs at least 4 songs");
  std::vector<std::size_t> perm(m);
  for (std::size_t i = 0; i < m; ++i) perm[i] = i;
  for (std::size_t i = m - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
  std::vector<std::size_t> shifts(m - 1);
  for (std::size_t i = 0; i < m - 1; ++i) shifts[i] = i + 1;
  for (std::size_t i = shifts.size() - 1; i > 0; --i) std::swap(shifts[i], shifts[rng.index(i + 1)]);
  const std::array<std::size_t, kNumSources> offset = {0, shifts[0], shifts[1], shifts[2]};

  const int width = static_cast<int>(std::to_string(m).size());
  std::vector<RemixPlan> plans(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::string num = std::to_string(i);
    plans[i].song_id = "remix" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(num.size()))), '0') + num;
    plans[i].length = static_cast<std::size_t>(-1);
    for (std::size_t n = 0; n < kNumSources; ++n) {
      const SongEntry& donor = index.songs[perm[(i + offset[n]) % m]];
      plans[i].donors[n] = donor.song_id;
      plans[i].length = std::min(plans[i].length, donor.length);
    }
  }
  return plans;
}

inline StemLibrary materialize_remix(const StemLibrary& lib, const std::vector<RemixPlan>& plans) {
  std::vector<StemSet> songs;
  for (const auto& plan : plans) {
    StemSet set;
    set.song_id = plan.song_id;
    set.sample_rate = lib.sample_rate();
    for (std::size_t n = 0; n < kNumSources; ++n)
      set.stems[n] = extract_chunk(lib.song(plan.donors[n]).stems[n], 0, plan.length);
    songs.push_back(std::move(set));
  }
  return StemLibrary(std::move(songs));
}

/// Writes the remixed dataset under `out_dir` and returns its index.
inline DatasetIndex build_song_level_remix(const DatasetIndex& index, Rng& rng, const fs::path& out_dir) {
  const auto plans = plan_song_level_remix(index, rng);
  const StemLibrary remix = materialize_remix(StemLibrary::load(index), plans);
  return write_library(remix, out_dir, index.split);
}

/// Uniform subset of round(fraction * |songs|) songs, sorted by id.
/// Draws: Fisher-Yates over all songs.
inline DatasetIndex reduce_dataset(const DatasetIndex& index, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorCode::invalid_argument, "fraction must lie in (0, 1]");
  const std::size_t m = index.songs.size();
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(m)));
  if (k == 0) throw Error(ErrorCode::empty_input, "reduced dataset would be empty");
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  for (std::size_t i = m - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
  DatasetIndex out;
  out.split = index.split;
  out.sample_rate = index.sample_rate;
  for (std::size_t i = 0; i < k; ++i) out.songs.push_back(index.songs[order[i]]);
  std::sort(out.songs.begin(), out.songs.end(), [](const SongEntry& a, const SongEntry& b) { return a.song_id < b.song_id; });
  log_info("reduced dataset: " + std::to_string(k) + " of " + std::to_string(m) + " songs, " +
           std::to_string(out.hours()) + " h");
  return out;
}

/// Library restricted to the songs of `index`.
inline StemLibrary subset_library(const StemLibrary& lib, const DatasetIndex& index) {
  std::vector<StemSet> songs;
  for (const auto& e : index.songs) songs.push_back(lib.song(e.song_id));
  return StemLibrary(std::move(songs), index.split);
}

// ---------------------------------------------------------------------------
// Example streams

enum class StreamMode { scheduler, pool, within_song };

/// How a training stream draws its MixSpecs.
struct StreamConfig {
  SamplerConfig sampler;
  StreamMode mode = StreamMode::scheduler;
  std::size_t pool_size = 0;          // pool mode
  int pitch_smax = 0;                 // optional pitch perturbation attached to every spec
  PerturbMode pitch_mode = PerturbMode::consistent;
};

/// Sequential MixSpec generator owning its streams; one per worker.
class MixStream {
 public:
  MixStream(const DatasetIndex& index, StreamConfig cfg)
      : index_(index), cfg_(std::move(cfg)), rng_(cfg_.sampler.seed, "train_mix"),
        pitch_rng_(cfg_.sampler.seed, "train_pitch") {
    cfg_.sampler.validate();
    if (cfg_.mode == StreamMode::pool) {
      Rng pool_rng(cfg_.sampler.seed, "pool");
      pool_.emplace(build_fixed_pool(index_, cfg_.pool_size, pool_rng, cfg_.sampler.chunk_len));
    }
  }

  MixSpec next() {
    MixSpec s;
    switch (cfg_.mode) {
      case StreamMode::scheduler: s = sample_training_example(index_, rng_, cfg_.sampler); break;
      case StreamMode::pool: s = sample_from_pool(*pool_, rng_); break;
      case StreamMode::within_song: s = sample_within_song(index_, rng_, cfg_.sampler, cfg_.sampler.within_song_ts); break;
    }
    if (cfg_.pitch_smax > 0) s.attach(draw_pitch_perturb(cfg_.pitch_smax, cfg_.pitch_mode, pitch_rng_));
    s.mix_id = count_++;
    return s;
  }

  const std::optional<MixPool>& pool() const noexcept { return pool_; }

 private:
  DatasetIndex index_;
  StreamConfig cfg_;
  Rng rng_;
  Rng pitch_rng_;
  std::optional<MixPool> pool_;
  std::uint64_t count_ = 0;
};

// ---------------------------------------------------------------------------
// MixSpec CSV

inline constexpr std::string_view kMixSpecHeader =
    "mix_id,kind,src,song_id,start_sample,gain,pitch_semitones,time_shift_samples";

inline std::string mixspecs_to_csv(const std::vector<MixSpec>& specs) {
  std::ostringstream out;
  out << kMixSpecHeader << '\n';
  for (const auto& m : specs)
    for (std::size_t i = 0; i < kNumSources; ++i) {
      const auto& s = m.sources[i];
      out << m.mix_id << ',' << kind_name(m.kind) << ',' << kSourceNames[i] << ',' << csv::checked_field(s.song_id) << ','
          << s.start_sample << ',' << csv::format_exact(s.gain) << ',' << s.pitch_semitones << ','
          << s.time_shift_samples << '\n';
    }
  return out.str();
}

inline std::vector<MixSpec> read_mixspecs_csv(const fs::path& path) {
  const auto rows = csv::read_rows(path, kMixSpecHeader);
  if (rows.size() % kNumSources != 0) throw Error(ErrorCode::invalid_argument, path.string() + ": incomplete mix");
  std::vector<MixSpec> specs;
  for (std::size_t r = 0; r < rows.size(); r += kNumSources) {
    MixSpec m;
    m.mix_id = csv::parse_number<std::uint64_t>(rows[r][0], "mix_id");
    m.kind = parse_mix_kind(rows[r][1]);
    for (std::size_t i = 0; i < kNumSources; ++i) {
      const auto& f = rows[r + i];
      if (csv::parse_number<std::uint64_t>(f[0], "mix_id") != m.mix_id || f[1] != rows[r][1] || f[2] != kSourceNames[i])
        throw Error(ErrorCode::invalid_argument, path.string() + ": rows of mix " + f[0] + " out of canonical order");
      auto& s = m.sources[i];
      s.song_id = f[3];
      s.start_sample = csv::parse_number<std::size_t>(f[4], "start_sample");
      s.gain = csv::parse_number<double>(f[5], "gain");
      s.pitch_semitones = csv::parse_number<int>(f[6], "pitch_semitones");
      s.time_shift_samples = csv::parse_number<std::int64_t>(f[7], "time_shift_samples");
    }
    m.validate();
    specs.push_back(std::move(m));
  }
  return specs;
}

}  // namespace mixaug
