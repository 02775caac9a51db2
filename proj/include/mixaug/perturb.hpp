#pragma once

// Per-stem timing and pitch perturbations that break beat or tonality
// alignment across stems, and the builder for modified test sets.

#include <array>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "mixaug/audio.hpp"
#include "mixaug/csv.hpp"
#include "mixaug/dataset.hpp"
#include "mixaug/error.hpp"
#include "mixaug/pitch.hpp"
#include "mixaug/rng.hpp"

namespace mixaug {

enum class PerturbMode { consistent, inconsistent };

inline std::string_view mode_name(PerturbMode m) { return m == PerturbMode::consistent ? "consistent" : "inconsistent"; }

inline PerturbMode parse_mode(std::string_view s) {
  if (s == "consistent") return PerturbMode::consistent;
  if (s == "inconsistent") return PerturbMode::inconsistent;
  throw Error(ErrorCode::invalid_argument, "perturbation mode '" + std::string(s) + "'");
}

struct PerturbSpec {
  std::array<int, kNumSources> pitch_semitones{};
  std::array<std::int64_t, kNumSources> time_shift_samples{};
  PerturbMode mode = PerturbMode::inconsistent;
  std::int64_t ts_range = 0;
  int smax = 0;
  std::uint64_t seed = 0;

  bool is_identity() const noexcept {
    for (std::size_t i = 0; i < kNumSources; ++i)
      if (pitch_semitones[i] != 0 || time_shift_samples[i] != 0) return false;
    return true;
  }

  void validate() const {
    for (std::size_t i = 0; i < kNumSources; ++i) {
      if (std::abs(pitch_semitones[i]) > smax) throw Error(ErrorCode::invalid_argument, "pitch value exceeds smax");
      if (std::abs(time_shift_samples[i]) > ts_range) throw Error(ErrorCode::invalid_argument, "time shift exceeds ts_range");
      if (mode == PerturbMode::consistent &&
          (pitch_semitones[i] != pitch_semitones[0] || time_shift_samples[i] != time_shift_samples[0]))
        throw Error(ErrorCode::invalid_argument, "consistent perturbation with unequal per-stem values");
    }
  }

  friend bool operator==(const PerturbSpec&, const PerturbSpec&) = default;
};

/// Four independent offsets, uniform on the integers of [-ts_range, ts_range].
inline PerturbSpec draw_timing_perturb(std::int64_t ts_range, Rng& rng) {
  if (ts_range < 0) throw Error(ErrorCode::invalid_argument, "negative ts_range");
  PerturbSpec p;
  p.mode = PerturbMode::inconsistent;
  p.ts_range = ts_range;
  p.seed = rng.seed();
  for (auto& t : p.time_shift_samples) t = rng.uniform_int(-ts_range, ts_range);
  return p;
}

/// Integer semitones uniform on {-smax, ..., smax}; one shared draw when consistent.
inline PerturbSpec draw_pitch_perturb(int smax, PerturbMode mode, Rng& rng) {
  if (smax < 0 || smax > 12) throw Error(ErrorCode::out_of_range, "smax must lie in [0, 12]");
  PerturbSpec p;
  p.mode = mode;
  p.smax = smax;
  p.seed = rng.seed();
  if (mode == PerturbMode::consistent) {
    p.pitch_semitones.fill(static_cast<int>(rng.uniform_int(-smax, smax)));
  } else {
    for (auto& s : p.pitch_semitones) s = static_cast<int>(rng.uniform_int(-smax, smax));
  }
  return p;
}

/// Pitch shift first, then the exact integer time shift.
inline AudioClip perturb_stem(const AudioClip& stem, int semitones, std::int64_t shift) {
  AudioClip out = semitones == 0 ? stem : pitch_shift(stem, semitones);
  return shift == 0 ? out : time_shift(out, shift);
}

inline StemSet apply_perturb(const StemSet& set, const PerturbSpec& spec) {
  set.validate();
  if (spec.is_identity()) return set;
  StemSet out = set;
  for (std::size_t i = 0; i < kNumSources; ++i)
    out.stems[i] = perturb_stem(set.stems[i], spec.pitch_semitones[i], spec.time_shift_samples[i]);
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Modified test sets

enum class PerturbKind { timing, pitch };

inline std::string_view kind_name(PerturbKind k) { return k == PerturbKind::timing ? "timing" : "pitch"; }

/// One grid point. `parameter` is ts in samples (timing) or smax in semitones (pitch).
struct GridCell {
  PerturbKind kind = PerturbKind::timing;
  std::int64_t parameter = 0;
  PerturbMode mode = PerturbMode::inconsistent;  // pitch only
};

inline std::string cell_id(const GridCell& cell, std::uint64_t seed) {
  return std::string(kind_name(cell.kind)) + "_" + std::to_string(cell.parameter) + "_s" + std::to_string(seed);
}

/// Draws one perturbation per song (in song order) from the stream of (cell, seed).
inline std::vector<PerturbSpec> draw_cell_perturbs(const DatasetIndex& index, const GridCell& cell, std::uint64_t seed) {
  Rng rng(seed, "testset/" + std::string(kind_name(cell.kind)) + "/" + std::to_string(cell.parameter) + "/" +
                    std::string(mode_name(cell.mode)));
  std::vector<PerturbSpec> out;
  for (std::size_t i = 0; i < index.songs.size(); ++i)
    out.push_back(cell.kind == PerturbKind::timing ? draw_timing_perturb(cell.parameter, rng)
                                                   : draw_pitch_perturb(static_cast<int>(cell.parameter), cell.mode, rng));
  return out;
}

/// In-memory perturbed copy of a test library for one (cell, seed).
inline StemLibrary perturb_library(const StemLibrary& lib, const GridCell& cell, std::uint64_t seed) {
  const auto specs = draw_cell_perturbs(lib.index(), cell, seed);
  std::vector<StemSet> songs;
  for (std::size_t i = 0; i < lib.size(); ++i) songs.push_back(apply_perturb(lib.songs()[i], specs[i]));
  return StemLibrary(std::move(songs), Split::test);
}

struct ManifestRow {
  std::string cell_id;
  PerturbKind kind;
  std::int64_t parameter;
  std::uint64_t seed;
  std::string song_id;
  fs::path out_dir;
};

inline constexpr std::string_view kManifestHeader = "cell_id,kind,parameter,seed,song_id,out_dir";

inline std::string manifest_to_csv(const std::vector<ManifestRow>& rows) {
  std::ostringstream out;
  out << kManifestHeader << '\n';
  for (const auto& r : rows)
    out << r.cell_id << ',' << kind_name(r.kind) << ',' << r.parameter << ',' << r.seed << ',' << r.song_id << ','
        << csv::checked_field(r.out_dir.generic_string()) << '\n';
  return out.str();
}

inline std::vector<ManifestRow> read_manifest_csv(const fs::path& path) {
  std::vector<ManifestRow> rows;
  for (const auto& f : csv::read_rows(path, kManifestHeader)) {
    ManifestRow r;
    r.cell_id = f[0];
    if (f[1] == "timing") r.kind = PerturbKind::timing;
    else if (f[1] == "pitch") r.kind = PerturbKind::pitch;
    else throw Error(ErrorCode::invalid_argument, "manifest kind '" + f[1] + "'");
    r.parameter = csv::parse_number<std::int64_t>(f[2], "parameter");
    r.seed = csv::parse_number<std::uint64_t>(f[3], "seed");
    r.song_id = f[4];
    r.out_dir = f[5];
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Materializes every (cell, seed) under `out_root/<cell_id>/` in dataset
/// layout and writes `out_root/manifest.csv`. Rows: cells x seeds x songs.
inline std::vector<ManifestRow> build_modified_testset(const StemLibrary& test, const std::vector<GridCell>& grid,
                                                       const std::vector<std::uint64_t>& seeds, const fs::path& out_root) {
  std::vector<ManifestRow> rows;
  for (const auto& cell : grid) {
    for (std::uint64_t seed : seeds) {
      const std::string id = cell_id(cell, seed);
      const fs::path dir = out_root / id;
      const StemLibrary perturbed = perturb_library(test, cell, seed);
      for (const auto& song : perturbed.songs()) {
        write_song(song, dir);
        rows.push_back({id, cell.kind, cell.parameter, seed, song.song_id, dir});
      }
    }
  }
  csv::write_text(out_root / "manifest.csv", manifest_to_csv(rows));
  return rows;
}

inline std::vector<ManifestRow> build_modified_testset(const DatasetIndex& index, const std::vector<GridCell>& grid,
                                                       const std::vector<std::uint64_t>& seeds, const fs::path& out_root) {
  return build_modified_testset(StemLibrary::load(index), grid, seeds, out_root);
}

}  // namespace mixaug
