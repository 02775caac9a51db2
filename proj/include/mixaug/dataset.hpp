#pragma once

// Stem-dataset layout `<root>/<song>/{vocals,drums,bass,other}.wav`, its CSV
// index, and in-memory song libraries.

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mixaug/audio.hpp"
#include "mixaug/csv.hpp"
#include "mixaug/error.hpp"
#include "mixaug/log.hpp"
#include "mixaug/rng.hpp"
#include "mixaug/wav.hpp"

namespace mixaug {

namespace fs = std::filesystem;

inline constexpr std::size_t kDefaultChunkLen = 264600;  // 6 s at 44.1 kHz

enum class Split { train, valid, test };

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "train";
}

struct SongEntry {
  std::string song_id;
  std::size_t length = 0;  // samples
  std::array<fs::path, kNumSources> paths;  // empty for in-memory songs

  friend bool operator==(const SongEntry&, const SongEntry&) = default;
};

struct DatasetIndex {
  std::vector<SongEntry> songs;  // sorted by song_id
  Split split = Split::train;
  int sample_rate = kSampleRate;

  const SongEntry* find(std::string_view id) const {
    auto it = std::lower_bound(songs.begin(), songs.end(), id,
                               [](const SongEntry& e, std::string_view key) { return e.song_id < key; });
    return (it != songs.end() && it->song_id == id) ? &*it : nullptr;
  }

  double hours() const {
    double samples = 0.0;
    for (const auto& s : songs) samples += static_cast<double>(s.length);
    return samples / sample_rate / 3600.0;
  }

  /// Content hash over ids, lengths and rate; file locations do not contribute.
  std::uint64_t fingerprint() const {
    std::uint64_t h = hash64({"index", sample_rate, songs.size()});
    for (const auto& s : songs) h = hash64({h, std::string_view(s.song_id), static_cast<std::uint64_t>(s.length)});
    return h;
  }

  friend bool operator==(const DatasetIndex&, const DatasetIndex&) = default;
};

inline constexpr std::string_view kIndexCsvHeader =
    "song_id,length_samples,sample_rate,vocals_path,drums_path,bass_path,other_path";

inline std::string index_to_csv(const DatasetIndex& index) {
  std::ostringstream out;
  out << kIndexCsvHeader << '\n';
  for (const auto& s : index.songs) {
    out << csv::checked_field(s.song_id) << ',' << s.length << ',' << index.sample_rate;
    for (const auto& p : s.paths) out << ',' << csv::checked_field(p.generic_string());
    out << '\n';
  }
  return out.str();
}

inline DatasetIndex read_index_csv(const fs::path& path, Split split = Split::train) {
  DatasetIndex index;
  index.split = split;
  bool first = true;
  for (const auto& row : csv::read_rows(path, kIndexCsvHeader)) {
    SongEntry e;
    e.song_id = row[0];
    e.length = csv::parse_number<std::size_t>(row[1], "length_samples");
    const int rate = csv::parse_number<int>(row[2], "sample_rate");
    if (first) index.sample_rate = rate;
    else if (rate != index.sample_rate) throw Error(ErrorCode::rate_mismatch, e.song_id);
    first = false;
    for (std::size_t i = 0; i < kNumSources; ++i) e.paths[i] = row[3 + i];
    index.songs.push_back(std::move(e));
  }
  std::sort(index.songs.begin(), index.songs.end(),
            [](const SongEntry& a, const SongEntry& b) { return a.song_id < b.song_id; });
  return index;
}

inline StemSet load_song(const SongEntry& entry, int expected_rate = kSampleRate) {
  StemSet set;
  set.song_id = entry.song_id;
  set.sample_rate = expected_rate;
  for (std::size_t i = 0; i < kNumSources; ++i) {
    if (entry.paths[i].empty()) throw Error(ErrorCode::missing_stem, entry.song_id + " has no file for " + std::string(kSourceNames[i]));
    set.stems[i] = load_wav(entry.paths[i]);
    if (set.stems[i].sample_rate != expected_rate)
      throw Error(ErrorCode::rate_mismatch, entry.song_id + "/" + std::string(kSourceNames[i]) + " is " +
                                                std::to_string(set.stems[i].sample_rate) + " Hz");
  }
  set.validate();
  return set;
}

/// Scans `root` for song directories. Every subdirectory is a song and must
/// carry all four stems at the canonical rate with equal lengths.
inline DatasetIndex index_dataset(const fs::path& root, Split split = Split::train, int sample_rate = kSampleRate) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(ErrorCode::io, "not a directory: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());

  DatasetIndex index;
  index.split = split;
  index.sample_rate = sample_rate;
  for (const auto& dir : dirs) {
    SongEntry e;
    e.song_id = dir.filename().string();
    for (std::size_t i = 0; i < kNumSources; ++i) {
      e.paths[i] = dir / (std::string(kSourceNames[i]) + ".wav");
      if (!fs::is_regular_file(e.paths[i]))
        throw Error(ErrorCode::missing_stem, e.song_id + " lacks " + std::string(kSourceNames[i]) + ".wav");
    }
    const StemSet set = load_song(e, sample_rate);  // validates lengths and rates
    e.length = set.size();
    index.songs.push_back(std::move(e));
  }
  std::sort(index.songs.begin(), index.songs.end(),
            [](const SongEntry& a, const SongEntry& b) { return a.song_id < b.song_id; });
  return index;
}

/// Exact window [start, start + length); never pads.
inline AudioClip extract_chunk(const AudioClip& clip, std::size_t start, std::size_t length) {
  if (start > clip.size() || length > clip.size() - start)
    throw Error(ErrorCode::out_of_range, "window [" + std::to_string(start) + ", +" + std::to_string(length) +
                                             ") exceeds clip of " + std::to_string(clip.size()));
  AudioClip out(clip.sample_rate, 0);
  for (std::size_t c = 0; c < kChannels; ++c)
    out[c].assign(clip[c].begin() + static_cast<std::ptrdiff_t>(start),
                  clip[c].begin() + static_cast<std::ptrdiff_t>(start + length));
  return out;
}

/// Writes one song in dataset layout (float32 stems plus a recomputed mixture.wav).
inline SongEntry write_song(const StemSet& set, const fs::path& root, bool with_mixture = true) {
  set.validate();
  const fs::path dir = root / set.song_id;
  fs::create_directories(dir);
  SongEntry e;
  e.song_id = set.song_id;
  e.length = set.size();
  for (std::size_t i = 0; i < kNumSources; ++i) {
    e.paths[i] = dir / (std::string(kSourceNames[i]) + ".wav");
    save_wav(set.stems[i], e.paths[i]);
  }
  if (with_mixture) save_wav(mixture_of(set), dir / "mixture.wav");
  return e;
}

/// Songs held in memory, addressable by id. Immutable once built.
class StemLibrary {
 public:
  StemLibrary() = default;

  explicit StemLibrary(std::vector<StemSet> songs, Split split = Split::train) : split_(split) {
    std::sort(songs.begin(), songs.end(), [](const StemSet& a, const StemSet& b) { return a.song_id < b.song_id; });
    for (std::size_t i = 0; i < songs.size(); ++i) {
      songs[i].validate();
      if (i > 0 && songs[i].song_id == songs[i - 1].song_id)
        throw Error(ErrorCode::invalid_argument, "duplicate song id " + songs[i].song_id);
      if (songs[i].sample_rate != songs[0].sample_rate) throw Error(ErrorCode::rate_mismatch, songs[i].song_id);
    }
    songs_ = std::move(songs);
    if (!songs_.empty()) sample_rate_ = songs_[0].sample_rate;
  }

  static StemLibrary load(const DatasetIndex& index) {
    std::vector<StemSet> songs;
    songs.reserve(index.songs.size());
    for (const auto& e : index.songs) songs.push_back(load_song(e, index.sample_rate));
    StemLibrary lib(std::move(songs), index.split);
    lib.paths_ = index;
    return lib;
  }

  const StemSet& song(std::string_view id) const {
    auto it = std::lower_bound(songs_.begin(), songs_.end(), id,
                               [](const StemSet& s, std::string_view key) { return s.song_id < key; });
    if (it == songs_.end() || it->song_id != id) throw Error(ErrorCode::stale_spec, "unknown song " + std::string(id));
    return *it;
  }

  const std::vector<StemSet>& songs() const noexcept { return songs_; }
  std::size_t size() const noexcept { return songs_.size(); }
  int sample_rate() const noexcept { return sample_rate_; }

  /// Index over the held songs; carries file paths when loaded from disk.
  DatasetIndex index() const {
    if (paths_) return *paths_;
    DatasetIndex idx;
    idx.split = split_;
    idx.sample_rate = sample_rate_;
    for (const auto& s : songs_) idx.songs.push_back(SongEntry{s.song_id, s.size(), {}});
    return idx;
  }

 private:
  std::vector<StemSet> songs_;
  Split split_ = Split::train;
  int sample_rate_ = kSampleRate;
  std::optional<DatasetIndex> paths_;
};

/// Materializes a whole library under `root` and returns its index.
inline DatasetIndex write_library(const StemLibrary& lib, const fs::path& root, Split split = Split::train) {
  DatasetIndex idx;
  idx.split = split;
  idx.sample_rate = lib.sample_rate();
  for (const auto& s : lib.songs()) idx.songs.push_back(write_song(s, root));
  return idx;
}

}  // namespace mixaug
