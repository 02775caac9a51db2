#pragma once

// Flat `key = value` configuration: one pair per line, `#` starts a comment,
// lists are comma separated. Keys are checked against a fixed table.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mixaug/csv.hpp"
#include "mixaug/dataset.hpp"
#include "mixaug/error.hpp"
#include "mixaug/perturb.hpp"
#include "mixaug/separators.hpp"
#include "mixaug/stft.hpp"
#include "mixaug/synth.hpp"

namespace mixaug {

/// Every recognized key with its default ("" means unset).
inline const std::map<std::string, std::string, std::less<>>& config_defaults() {
  static const std::map<std::string, std::string, std::less<>> table = {
      // data
      {"train_root", ""},
      {"test_root", ""},
      {"train_index", ""},
      {"test_index", ""},
      {"synth_train_songs", "8"},
      {"synth_test_songs", "8"},
      {"synth_correlation", "0.5"},
      {"synth_bpm_min", "80"},
      {"synth_bpm_max", "160"},
      {"synth_duration_min", "12"},
      {"synth_duration_max", "16"},
      // sampling and training
      {"seed", "0"},
      {"p", "0"},
      {"pool_ratio", ""},
      {"chunk_len", "264600"},
      {"within_song_ts", ""},
      {"n_examples", "2000"},
      {"n_mixes", "100"},
      {"loudness_target", "-17"},
      {"fft_size", "8192"},
      {"hop_size", "2048"},
      {"pitch_train_smax", "3"},
      // perturbation
      {"perturb_kind", "timing"},
      {"pitch_mode", "inconsistent"},
      {"ts_grid", "0,1323,4410,8820,22050,44100"},
      {"smax_grid", "0,1,2,3,6,12"},
      {"perturb_seeds", "0,1,2"},
      // experiments
      {"replicates", "3"},
      {"p_grid", "0,0.5,1"},
      {"pool_ratio_grid", "0.01,0.1,0.5,1"},
      {"fraction_grid", "0.25,0.5,1"},
      {"within_song_ts_grid", "1323,22050,inf"},
      {"separator", "oracle"},
      {"oracle", "irm_alpha2"},
      {"eval_set", "test"},
      {"eval_random_mixes", "50"},
      // evaluation
      {"metric", "global"},
      {"eval_chunk_len", "0"},
      {"bsseval_window", "44100"},
      {"bsseval_hop", "44100"},
      {"bsseval_filter_len", "512"},
      // output
      {"out", "out"},
      {"jobs", "1"},
  };
  return table;
}

/// Raw key/value store with strict key checking.
class Config {
 public:
  Config() = default;

  static Config parse(std::string_view text, std::string_view origin = "config") {
    Config cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto body = csv::trim(line);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      const std::string where = std::string(origin) + ":" + std::to_string(lineno);
      if (eq == std::string_view::npos) throw Error(ErrorCode::invalid_argument, where + ": expected 'key = value'");
      const std::string key(csv::trim(body.substr(0, eq)));
      if (cfg.explicit_.count(key)) throw Error(ErrorCode::invalid_argument, where + ": duplicate key '" + key + "'");
      cfg.set(key, std::string(csv::trim(body.substr(eq + 1))));
    }
    return cfg;
  }

  static Config load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
  }

  void set(const std::string& key, std::string value) {
    if (!config_defaults().count(key)) throw Error(ErrorCode::unknown_key, "unknown config key '" + key + "'");
    explicit_[key] = std::move(value);
  }

  bool has(std::string_view key) const { return !raw(key).empty(); }
  bool is_explicit(std::string_view key) const { return explicit_.find(key) != explicit_.end(); }

  const std::string& raw(std::string_view key) const {
    if (auto it = explicit_.find(key); it != explicit_.end()) return it->second;
    auto it = config_defaults().find(key);
    if (it == config_defaults().end()) throw Error(ErrorCode::unknown_key, "unknown config key '" + std::string(key) + "'");
    return it->second;
  }

  template <typename T>
  T get(std::string_view key) const {
    if constexpr (std::is_same_v<T, std::string>) {
      return raw(key);
    } else {
      if (!has(key)) throw Error(ErrorCode::invalid_argument, "config key '" + std::string(key) + "' is not set");
      return csv::parse_number<T>(raw(key), key);
    }
  }

  template <typename T>
  std::optional<T> get_optional(std::string_view key) const {
    if (!has(key)) return std::nullopt;
    return get<T>(key);
  }

  template <typename T>
  std::vector<T> get_list(std::string_view key) const {
    std::vector<T> out;
    if (!has(key)) return out;
    for (const auto& item : csv::split(raw(key))) {
      if constexpr (std::is_same_v<T, std::string>) out.emplace_back(csv::trim(item));
      else out.push_back(csv::parse_number<T>(item, key));
    }
    return out;
  }

 private:
  std::map<std::string, std::string, std::less<>> explicit_;
};

/// Sample counts that may be written "inf".
inline std::optional<std::size_t> parse_spread(std::string_view text, std::string_view what) {
  text = csv::trim(text);
  if (text == "inf") return kUnboundedSpread;
  return csv::parse_number<std::size_t>(text, what);
}

inline std::string spread_name(std::optional<std::size_t> ts) { return ts ? std::to_string(*ts) : "inf"; }

/// Typed view of a Config, validated as a whole.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  fs::path train_root, test_root, train_index, test_index;
  std::size_t synth_train_songs = 8, synth_test_songs = 8;
  SynthRanges synth;

  double p = 0.0;
  std::optional<double> pool_ratio;
  std::size_t chunk_len = kDefaultChunkLen;
  std::optional<std::size_t> within_song_ts;
  bool within_song = false;
  std::uint64_t n_examples = 2000;
  std::size_t n_mixes = 100;
  std::optional<double> loudness_target = kDefaultLoudnessTarget;
  StftConfig stft;
  int pitch_train_smax = 3;

  PerturbKind perturb_kind = PerturbKind::timing;
  PerturbMode pitch_mode = PerturbMode::inconsistent;
  std::vector<std::int64_t> ts_grid, smax_grid;
  std::vector<std::uint64_t> perturb_seeds;

  std::size_t replicates = 3;
  std::vector<double> p_grid, pool_ratio_grid, fraction_grid;
  std::vector<std::optional<std::size_t>> within_song_ts_grid;
  std::string separator = "oracle";
  OracleKind oracle = OracleKind::irm_alpha2;
  std::string eval_set = "test";
  std::size_t eval_random_mixes = 50;

  EvalConfig eval;
  fs::path out = "out";
  std::size_t jobs = 1;

  static ExperimentConfig from(const Config& c) {
    ExperimentConfig e;
    e.seed = c.get<std::uint64_t>("seed");
    e.train_root = c.get<std::string>("train_root");
    e.test_root = c.get<std::string>("test_root");
    e.train_index = c.get<std::string>("train_index");
    e.test_index = c.get<std::string>("test_index");
    e.synth_train_songs = c.get<std::size_t>("synth_train_songs");
    e.synth_test_songs = c.get<std::size_t>("synth_test_songs");
    e.synth.correlation_lo = e.synth.correlation_hi = c.get<double>("synth_correlation");
    e.synth.bpm_lo = c.get<double>("synth_bpm_min");
    e.synth.bpm_hi = c.get<double>("synth_bpm_max");
    e.synth.duration_lo = c.get<double>("synth_duration_min");
    e.synth.duration_hi = c.get<double>("synth_duration_max");

    e.p = c.get<double>("p");
    e.pool_ratio = c.get_optional<double>("pool_ratio");
    e.chunk_len = c.get<std::size_t>("chunk_len");
    e.within_song = c.has("within_song_ts");
    if (e.within_song) e.within_song_ts = parse_spread(c.raw("within_song_ts"), "within_song_ts");
    e.n_examples = c.get<std::uint64_t>("n_examples");
    e.n_mixes = c.get<std::size_t>("n_mixes");
    if (c.raw("loudness_target") == "none") e.loudness_target.reset();
    else e.loudness_target = c.get<double>("loudness_target");
    e.stft.fft_size = c.get<std::size_t>("fft_size");
    e.stft.hop_size = c.get<std::size_t>("hop_size");
    e.pitch_train_smax = c.get<int>("pitch_train_smax");

    const auto kind = c.get<std::string>("perturb_kind");
    if (kind == "timing") e.perturb_kind = PerturbKind::timing;
    else if (kind == "pitch") e.perturb_kind = PerturbKind::pitch;
    else throw Error(ErrorCode::invalid_argument, "perturb_kind must be timing or pitch");
    e.pitch_mode = parse_mode(c.get<std::string>("pitch_mode"));
    e.ts_grid = c.get_list<std::int64_t>("ts_grid");
    e.smax_grid = c.get_list<std::int64_t>("smax_grid");
    e.perturb_seeds = c.get_list<std::uint64_t>("perturb_seeds");

    e.replicates = c.get<std::size_t>("replicates");
    e.p_grid = c.get_list<double>("p_grid");
    e.pool_ratio_grid = c.get_list<double>("pool_ratio_grid");
    e.fraction_grid = c.get_list<double>("fraction_grid");
    for (const auto& v : c.get_list<std::string>("within_song_ts_grid"))
      e.within_song_ts_grid.push_back(parse_spread(v, "within_song_ts_grid"));
    e.separator = c.get<std::string>("separator");
    e.oracle = parse_oracle(c.get<std::string>("oracle"));
    e.eval_set = c.get<std::string>("eval_set");
    e.eval_random_mixes = c.get<std::size_t>("eval_random_mixes");

    e.eval.metric = parse_metric(c.get<std::string>("metric"));
    e.eval.chunk_len = c.get<std::size_t>("eval_chunk_len");
    e.eval.bsseval.window = c.get<std::size_t>("bsseval_window");
    e.eval.bsseval.hop = c.get<std::size_t>("bsseval_hop");
    e.eval.bsseval.filter_len = c.get<std::size_t>("bsseval_filter_len");
    e.out = c.get<std::string>("out");
    e.jobs = c.get<std::size_t>("jobs");
    e.validate();
    return e;
  }

  void validate() const {
    const auto bad = [](const std::string& msg) { throw Error(ErrorCode::invalid_argument, msg); };
    const auto conflict = [](const std::string& msg) { throw Error(ErrorCode::config_conflict, msg); };
    if (!(p >= 0.0 && p <= 1.0)) bad("p must lie in [0, 1]");
    if (chunk_len == 0) bad("chunk_len must be positive");
    if (n_mixes == 0) bad("n_mixes must be positive");
    if (replicates == 0) bad("replicates must be positive");
    if (jobs == 0) bad("jobs must be positive");
    if (synth_train_songs == 0 || synth_test_songs == 0) bad("synthetic song counts must be positive");
    synth.validate();
    stft.validate();
    eval.bsseval.validate();
    if (pitch_train_smax < 0 || pitch_train_smax > 12) bad("pitch_train_smax must lie in [0, 12]");
    if (pool_ratio) {
      if (!(*pool_ratio > 0.0)) bad("pool_ratio must be positive");
      if (p != 0.0) conflict("pool_ratio draws random mixes only and requires p = 0");
      if (within_song) conflict("pool_ratio and within_song_ts are mutually exclusive");
    }
    if (within_song && p != 0.0) conflict("within_song_ts requires p = 0");
    for (double v : p_grid)
      if (!(v >= 0.0 && v <= 1.0)) bad("p_grid values must lie in [0, 1]");
    for (double v : pool_ratio_grid)
      if (!(v > 0.0)) bad("pool_ratio_grid values must be positive");
    for (double v : fraction_grid)
      if (!(v > 0.0 && v <= 1.0)) bad("fraction_grid values must lie in (0, 1]");
    for (auto v : ts_grid)
      if (v < 0) bad("ts_grid values must be non-negative");
    for (auto v : smax_grid)
      if (v < 0 || v > 12) bad("smax_grid values must lie in [0, 12]");
    if (separator != "oracle" && separator != "linear") bad("separator must be oracle or linear");
    if (eval_set != "test" && eval_set != "random") bad("eval_set must be test or random");
    if (!train_root.empty() && !train_index.empty()) conflict("set train_root or train_index, not both");
    if (!test_root.empty() && !test_index.empty()) conflict("set test_root or test_index, not both");
  }

  /// Pool size R = round(ratio * budget).
  static std::size_t pool_size(double ratio, std::uint64_t budget) {
    const auto r = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(budget)));
    if (r == 0) throw Error(ErrorCode::config_conflict, "pool_ratio yields an empty pool");
    return r;
  }

  /// Fails with an I/O error before any work if a configured input is missing.
  void check_paths() const {
    for (const auto* p : {&train_root, &test_root})
      if (!p->empty() && !fs::is_directory(*p)) throw Error(ErrorCode::io, "no such dataset directory: " + p->string());
    for (const auto* p : {&train_index, &test_index})
      if (!p->empty() && !fs::is_regular_file(*p)) throw Error(ErrorCode::io, "no such index file: " + p->string());
  }
};

}  // namespace mixaug
