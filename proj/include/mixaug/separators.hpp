#pragma once

// Desk-scale separators: oracle ratio masks and a per-bin complex linear mask
// fitted in closed form, plus the evaluation loop shared by both.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mixaug/audio.hpp"
#include "mixaug/dataset.hpp"
#include "mixaug/error.hpp"
#include "mixaug/metrics.hpp"
#include "mixaug/sampling.hpp"
#include "mixaug/stft.hpp"

namespace mixaug {

using Estimates = std::array<AudioClip, kNumSources>;

inline constexpr double kMaskEps = 1e-12;

// ---------------------------------------------------------------------------
// Oracle masks

enum class OracleKind { irm_alpha2, irm_alpha1 };

inline std::string_view oracle_name(OracleKind k) { return k == OracleKind::irm_alpha2 ? "irm_alpha2" : "irm_alpha1"; }

inline OracleKind parse_oracle(std::string_view s) {
  if (s == "irm_alpha2") return OracleKind::irm_alpha2;
  if (s == "irm_alpha1") return OracleKind::irm_alpha1;
  throw Error(ErrorCode::invalid_argument, "oracle kind '" + std::string(s) + "'");
}

/// mask_n = |S_n|^a / (sum_k |S_k|^a + eps), applied to the mixture STFT.
inline Estimates oracle_separate(const std::array<AudioClip, kNumSources>& stems, const AudioClip& mixture,
                                 OracleKind kind = OracleKind::irm_alpha2, const StftConfig& cfg = {}) {
  mixture.validate();
  for (const auto& s : stems) {
    s.validate();
    if (s.size() != mixture.size() || s.sample_rate != mixture.sample_rate)
      throw Error(ErrorCode::length_mismatch, "stem and mixture shapes differ");
  }
  const Spectrogram x = stft(mixture, cfg);
  std::array<Spectrogram, kNumSources> s;
  for (std::size_t n = 0; n < kNumSources; ++n) s[n] = stft(stems[n], cfg);

  std::vector<double> total(x.data.size(), 0.0);
  std::array<std::vector<double>, kNumSources> weights;
  for (std::size_t n = 0; n < kNumSources; ++n) {
    weights[n].resize(x.data.size());
    for (std::size_t i = 0; i < x.data.size(); ++i) {
      const double w = kind == OracleKind::irm_alpha2 ? std::norm(s[n].data[i]) : std::abs(s[n].data[i]);
      weights[n][i] = w;
      total[i] += w;
    }
  }
  Estimates out;
  Spectrogram masked = x;
  for (std::size_t n = 0; n < kNumSources; ++n) {
    for (std::size_t i = 0; i < x.data.size(); ++i) masked.data[i] = x.data[i] * (weights[n][i] / (total[i] + kMaskEps));
    out[n] = istft(masked, mixture.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear mask model

/// Complex gains laid out [source][channel][bin].
struct MaskModel {
  StftConfig config;
  std::vector<cplx> gains;
  double p = 0.0;
  std::uint64_t n_examples = 0;
  std::uint64_t seed = 0;

  MaskModel() = default;
  explicit MaskModel(const StftConfig& cfg) : config(cfg), gains(kNumSources * kChannels * cfg.bins()) {}

  std::size_t bins() const noexcept { return config.bins(); }
  cplx& gain(std::size_t src, std::size_t ch, std::size_t k) { return gains[(src * kChannels + ch) * bins() + k]; }
  const cplx& gain(std::size_t src, std::size_t ch, std::size_t k) const { return gains[(src * kChannels + ch) * bins() + k]; }

  void validate() const {
    config.validate();
    if (gains.size() != kNumSources * kChannels * bins())
      throw Error(ErrorCode::invalid_argument, "mask model bin count does not match its STFT config");
    for (const auto& g : gains)
      if (!std::isfinite(g.real()) || !std::isfinite(g.imag())) throw Error(ErrorCode::numeric, "non-finite mask gain");
  }

  friend bool operator==(const MaskModel&, const MaskModel&) = default;
};

/// Per-bin sufficient statistics of the least-squares fit. Shards merge by addition.
class LinearMaskFitter {
 public:
  explicit LinearMaskFitter(const StftConfig& cfg = {})
      : cfg_(cfg), cross_(kNumSources * kChannels * cfg.bins()), power_(kChannels * cfg.bins()) {
    cfg_.validate();
  }

  void add(const AudioClip& mixture, const std::array<AudioClip, kNumSources>& stems) {
    const std::size_t bins = cfg_.bins();
    const Spectrogram x = stft(mixture, cfg_);
    for (std::size_t c = 0; c < kChannels; ++c)
      for (std::size_t f = 0; f < x.frames; ++f) {
        const auto xf = x.frame(c, f);
        for (std::size_t k = 0; k < bins; ++k) power_[c * bins + k] += std::norm(xf[k]);
      }
    for (std::size_t n = 0; n < kNumSources; ++n) {
      if (stems[n].size() != mixture.size()) throw Error(ErrorCode::length_mismatch, "stem and mixture lengths differ");
      const Spectrogram s = stft(stems[n], cfg_);
      for (std::size_t c = 0; c < kChannels; ++c)
        for (std::size_t f = 0; f < x.frames; ++f) {
          const auto xf = x.frame(c, f);
          const auto sf = s.frame(c, f);
          cplx* acc = cross_.data() + (n * kChannels + c) * bins;
          for (std::size_t k = 0; k < bins; ++k) acc[k] += sf[k] * std::conj(xf[k]);
        }
    }
    ++count_;
  }

  void merge(const LinearMaskFitter& other) {
    if (!(other.cfg_ == cfg_)) throw Error(ErrorCode::config_conflict, "merging fitters with different STFT configs");
    for (std::size_t i = 0; i < cross_.size(); ++i) cross_[i] += other.cross_[i];
    for (std::size_t i = 0; i < power_.size(); ++i) power_[i] += other.power_[i];
    count_ += other.count_;
  }

  std::uint64_t count() const noexcept { return count_; }

  MaskModel finish() const {
    if (count_ == 0) throw Error(ErrorCode::empty_input, "no examples were accumulated");
    MaskModel m(cfg_);
    const std::size_t bins = cfg_.bins();
    for (std::size_t n = 0; n < kNumSources; ++n)
      for (std::size_t c = 0; c < kChannels; ++c)
        for (std::size_t k = 0; k < bins; ++k)
          m.gain(n, c, k) = cross_[(n * kChannels + c) * bins + k] / (power_[c * bins + k] + kMaskEps);
    m.n_examples = count_;
    return m;
  }

 private:
  StftConfig cfg_;
  std::vector<cplx> cross_;
  std::vector<double> power_;
  std::uint64_t count_ = 0;
};

/// One training example: a mixture with its four stems.
struct Example {
  AudioClip mixture;
  std::array<AudioClip, kNumSources> stems;
};

/// Fits on the first `n_examples` items of `next_example`.
inline MaskModel fit_linear_mask(const std::function<Example()>& next_example, const StftConfig& cfg, std::uint64_t n_examples) {
  if (n_examples == 0) throw Error(ErrorCode::empty_input, "n_examples must be at least 1");
  LinearMaskFitter fitter(cfg);
  for (std::uint64_t i = 0; i < n_examples; ++i) {
    const Example e = next_example();
    fitter.add(e.mixture, e.stems);
  }
  return fitter.finish();
}

/// Fits on realized mixes drawn from `stream`; records p and seed in the model.
inline MaskModel fit_linear_mask(const StemLibrary& lib, MixStream& stream, const StreamConfig& scfg, const StftConfig& cfg,
                                 std::uint64_t n_examples, std::optional<double> loudness_target = kDefaultLoudnessTarget) {
  MaskModel m = fit_linear_mask(
      [&] {
        RealizedMix r = realize(lib, stream.next(), scfg.sampler.chunk_len, loudness_target);
        return Example{std::move(r.mixture), std::move(r.stems)};
      },
      cfg, n_examples);
  m.p = scfg.sampler.p;
  m.seed = scfg.sampler.seed;
  return m;
}

inline Estimates apply_mask(const MaskModel& model, const AudioClip& mixture) {
  if (model.gains.size() != kNumSources * kChannels * model.bins())
    throw Error(ErrorCode::config_conflict, "mask model bin count does not match its STFT config");
  const Spectrogram x = stft(mixture, model.config);
  const std::size_t bins = model.bins();
  Estimates out;
  Spectrogram masked = x;
  for (std::size_t n = 0; n < kNumSources; ++n) {
    for (std::size_t c = 0; c < kChannels; ++c)
      for (std::size_t f = 0; f < x.frames; ++f) {
        const auto xf = x.frame(c, f);
        auto mf = masked.frame(c, f);
        for (std::size_t k = 0; k < bins; ++k) mf[k] = model.gain(n, c, k) * xf[k];
      }
    out[n] = istft(masked, mixture.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model file: "MMDL", u32 version, u32 fft_size, u32 hop, u32 n_sources,
// u32 n_channels, f64 p, u64 n_examples, u64 seed, then f64 (re, im) gains.
// Little-endian throughout.

inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

template <class T>
void put_le(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error(ErrorCode::wav_truncated_data, "model file is truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace detail

inline std::string encode_model(const MaskModel& m) {
  m.validate();
  std::string out = "MMDL";
  detail::put_le<std::uint32_t>(out, kModelVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.config.fft_size));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.config.hop_size));
  detail::put_le<std::uint32_t>(out, kNumSources);
  detail::put_le<std::uint32_t>(out, kChannels);
  detail::put_le<double>(out, m.p);
  detail::put_le<std::uint64_t>(out, m.n_examples);
  detail::put_le<std::uint64_t>(out, m.seed);
  for (const auto& g : m.gains) {
    detail::put_le<double>(out, g.real());
    detail::put_le<double>(out, g.imag());
  }
  return out;
}

inline MaskModel decode_model(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "MMDL") != 0) throw Error(ErrorCode::invalid_argument, "not a mask model file");
  std::size_t pos = 4;
  if (detail::get_le<std::uint32_t>(bytes, pos) != kModelVersion)
    throw Error(ErrorCode::invalid_argument, "unsupported mask model version");
  MaskModel m;
  m.config.fft_size = detail::get_le<std::uint32_t>(bytes, pos);
  m.config.hop_size = detail::get_le<std::uint32_t>(bytes, pos);
  if (detail::get_le<std::uint32_t>(bytes, pos) != kNumSources || detail::get_le<std::uint32_t>(bytes, pos) != kChannels)
    throw Error(ErrorCode::invalid_argument, "mask model has unexpected source/channel counts");
  m.config.validate();
  m.p = detail::get_le<double>(bytes, pos);
  m.n_examples = detail::get_le<std::uint64_t>(bytes, pos);
  m.seed = detail::get_le<std::uint64_t>(bytes, pos);
  m.gains.resize(kNumSources * kChannels * m.bins());
  for (auto& g : m.gains) {
    const double re = detail::get_le<double>(bytes, pos);
    g = {re, detail::get_le<double>(bytes, pos)};
  }
  if (pos != bytes.size()) throw Error(ErrorCode::invalid_argument, "trailing bytes in mask model file");
  m.validate();
  return m;
}

inline void save_model(const MaskModel& m, const fs::path& path) {
  csv::write_text(path, encode_model(m));
}

inline MaskModel load_model(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model(bytes);
}

// ---------------------------------------------------------------------------
// Evaluation

/// Maps (mixture, ground-truth stems) to four estimates. Non-oracle separators
/// ignore the stems.
using Separator = std::function<Estimates(const AudioClip& mixture, const std::array<AudioClip, kNumSources>& stems)>;

inline Separator oracle_separator(OracleKind kind = OracleKind::irm_alpha2, StftConfig cfg = {}) {
  return [kind, cfg](const AudioClip& mix, const std::array<AudioClip, kNumSources>& stems) {
    return oracle_separate(stems, mix, kind, cfg);
  };
}

inline Separator mask_separator(std::shared_ptr<const MaskModel> model) {
  return [model = std::move(model)](const AudioClip& mix, const std::array<AudioClip, kNumSources>&) {
    return apply_mask(*model, mix);
  };
}

enum class MetricChoice { global, bsseval, both };

inline MetricChoice parse_metric(std::string_view s) {
  if (s == "global") return MetricChoice::global;
  if (s == "bsseval") return MetricChoice::bsseval;
  if (s == "both") return MetricChoice::both;
  throw Error(ErrorCode::invalid_argument, "metric '" + std::string(s) + "'");
}

struct EvalConfig {
  MetricChoice metric = MetricChoice::both;
  std::size_t chunk_len = 0;  // 0: whole tracks; otherwise non-overlapping chunks
  BssEvalConfig bsseval;
};

namespace detail {

inline void score_segment(const std::string& track, const std::array<AudioClip, kNumSources>& stems, const Separator& sep,
                          const EvalConfig& cfg, std::vector<SourceScore>& rows) {
  const AudioClip mix = mixture_of(stems);
  const Estimates est = sep(mix, stems);
  for (std::size_t n = 0; n < kNumSources; ++n) {
    SourceScore row;
    row.track = track;
    row.source = kAllSources[n];
    if (cfg.metric != MetricChoice::bsseval) row.global_db = sdr_global(stems[n], est[n]);
    if (cfg.metric != MetricChoice::global) {
      if (energy(stems[n]) == 0.0) {
        const std::size_t frames = stems[n].size() < cfg.bsseval.window ? 0 : (stems[n].size() - cfg.bsseval.window) / cfg.bsseval.hop + 1;
        row.frames.assign(frames, kNaN);
      } else {
        row.frames = sdr_bsseval_frames(stems[n], est[n], cfg.bsseval);
      }
    }
    rows.push_back(std::move(row));
  }
}

}  // namespace detail

/// Separates every track (or every chunk of it) of `test` and scores each
/// source against its ground truth. Chunk rows are named "<song>@<start>".
inline SdrReport evaluate_separator(const Separator& sep, const StemLibrary& test, const EvalConfig& cfg = {}) {
  if (test.size() == 0) throw Error(ErrorCode::empty_input, "no tracks to evaluate");
  std::vector<SourceScore> rows;
  for (const auto& song : test.songs()) {
    if (cfg.chunk_len == 0) {
      detail::score_segment(song.song_id, song.stems, sep, cfg, rows);
      continue;
    }
    for (std::size_t start = 0; start + cfg.chunk_len <= song.size(); start += cfg.chunk_len) {
      std::array<AudioClip, kNumSources> chunk;
      for (std::size_t n = 0; n < kNumSources; ++n) chunk[n] = extract_chunk(song.stems[n], start, cfg.chunk_len);
      detail::score_segment(song.song_id + "@" + std::to_string(start), chunk, sep, cfg, rows);
    }
  }
  return aggregate(std::move(rows));
}

/// Test library whose songs are the realized mixes of `specs` ("mixNNNNN").
inline StemLibrary realized_library(const StemLibrary& lib, const std::vector<MixSpec>& specs, std::size_t chunk_len,
                                    std::optional<double> loudness_target = kDefaultLoudnessTarget) {
  std::vector<StemSet> songs;
  for (const auto& spec : specs) {
    RealizedMix r = realize(lib, spec, chunk_len, loudness_target);
    StemSet set;
    std::string id = std::to_string(spec.mix_id);
    set.song_id = "mix" + std::string(id.size() < 5 ? 5 - id.size() : 0, '0') + id;
    set.sample_rate = lib.sample_rate();
    set.stems = std::move(r.stems);
    songs.push_back(std::move(set));
  }
  return StemLibrary(std::move(songs), Split::test);
}

}  // namespace mixaug
