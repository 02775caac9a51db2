#pragma once

// Seeded experiment sweeps. Each (cell, replicate) owns the sub-seed
// hash64(master, experiment, cell_index, replicate) and is computed from
// (experiment, parameter, sub-seed) plus the configuration alone.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mixaug/config.hpp"
#include "mixaug/dataset.hpp"
#include "mixaug/log.hpp"
#include "mixaug/metrics.hpp"
#include "mixaug/perturb.hpp"
#include "mixaug/rng.hpp"
#include "mixaug/sampling.hpp"
#include "mixaug/separators.hpp"
#include "mixaug/synth.hpp"

namespace mixaug {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "p_sweep",          "pool_sweep",        "reduced_data_sweep", "timing_testset",
      "pitch_testset",    "within_song_train", "consistent_vs_inconsistent_pitch_train",
      "song_level_remix"};
  return names;
}

inline std::uint64_t sub_seed(std::uint64_t master, std::string_view experiment, std::size_t cell, std::size_t replicate) {
  return hash64({master, experiment, static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(replicate)});
}

/// Libraries shared by every cell of a run.
struct ExperimentData {
  StemLibrary train;
  StemLibrary test;
  StemLibrary eval;  // the set separators are scored on (test songs or held-out random mixes)
};

inline StemLibrary load_library(const fs::path& root, const fs::path& index, Split split) {
  if (!root.empty()) return StemLibrary::load(index_dataset(root, split));
  return StemLibrary::load(read_index_csv(index, split));
}

/// Loads the configured datasets, or synthesizes them from the master seed.
inline ExperimentData prepare_data(const ExperimentConfig& cfg) {
  cfg.check_paths();
  ExperimentData d;
  if (!cfg.train_root.empty() || !cfg.train_index.empty()) {
    d.train = load_library(cfg.train_root, cfg.train_index, Split::train);
  } else {
    Rng rng(cfg.seed, "synth_train");
    d.train = synth_library(cfg.synth_train_songs, rng, cfg.synth, Split::train);
  }
  if (!cfg.test_root.empty() || !cfg.test_index.empty()) {
    d.test = load_library(cfg.test_root, cfg.test_index, Split::test);
  } else {
    Rng rng(cfg.seed, "synth_test");
    d.test = synth_library(cfg.synth_test_songs, rng, cfg.synth, Split::test);
  }
  if (cfg.eval_set == "random") {
    Rng rng(cfg.seed, "eval_mixes");
    SamplerConfig sc;
    sc.chunk_len = cfg.chunk_len;
    const DatasetIndex idx = d.test.index();
    std::vector<MixSpec> specs;
    for (std::size_t i = 0; i < cfg.eval_random_mixes; ++i) {
      specs.push_back(sample_random_mix(idx, rng, sc));
      specs.back().mix_id = i;
    }
    d.eval = realized_library(d.test, specs, cfg.chunk_len, cfg.loudness_target);
  } else {
    d.eval = d.test;
  }
  return d;
}

/// Streams `cfg.n_examples` realized mixes from `lib` into a linear mask.
inline MaskModel train_linear(const StemLibrary& lib, const StreamConfig& scfg, const ExperimentConfig& cfg) {
  MixStream stream(lib.index(), scfg);
  return fit_linear_mask(lib, stream, scfg, cfg.stft, cfg.n_examples, cfg.loudness_target);
}

inline StreamConfig base_stream(const ExperimentConfig& cfg, std::uint64_t seed, double p) {
  StreamConfig s;
  s.sampler.p = p;
  s.sampler.chunk_len = cfg.chunk_len;
  s.sampler.seed = seed;
  return s;
}

/// Default separator for the test-set experiments: the oracle, or a linear
/// mask trained with the configured sampler.
inline Separator testset_separator(const ExperimentData& data, const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.separator == "oracle") return oracle_separator(cfg.oracle, cfg.stft);
  StreamConfig s = base_stream(cfg, hash64({seed, "model"}), cfg.p);
  if (cfg.pool_ratio) {
    s.mode = StreamMode::pool;
    s.pool_size = ExperimentConfig::pool_size(*cfg.pool_ratio, cfg.n_examples);
  } else if (cfg.within_song) {
    s.mode = StreamMode::within_song;
    s.sampler.within_song_ts = cfg.within_song_ts;
  }
  return mask_separator(std::make_shared<MaskModel>(train_linear(data.train, s, cfg)));
}

inline std::string param_name(double v) { return csv::format_exact(v); }

/// Cell parameters of an experiment, in canonical order.
inline std::vector<std::string> experiment_cells(std::string_view name, const ExperimentConfig& cfg) {
  std::vector<std::string> out;
  if (name == "p_sweep") {
    for (double v : cfg.p_grid) out.push_back(param_name(v));
  } else if (name == "pool_sweep") {
    for (double v : cfg.pool_ratio_grid) out.push_back(param_name(v));
  } else if (name == "reduced_data_sweep") {
    for (double v : cfg.fraction_grid) out.push_back(param_name(v));
  } else if (name == "timing_testset") {
    for (auto v : cfg.ts_grid) out.push_back(std::to_string(v));
  } else if (name == "pitch_testset") {
    for (auto v : cfg.smax_grid) out.push_back(std::to_string(v));
  } else if (name == "within_song_train") {
    for (auto v : cfg.within_song_ts_grid) out.push_back(spread_name(v));
  } else if (name == "consistent_vs_inconsistent_pitch_train") {
    out = {"consistent", "inconsistent"};
  } else if (name == "song_level_remix") {
    out = {"original", "remix"};
  } else {
    throw Error(ErrorCode::invalid_argument, "unknown experiment '" + std::string(name) + "'");
  }
  if (out.empty()) throw Error(ErrorCode::invalid_argument, "experiment '" + std::string(name) + "' has an empty grid");
  return out;
}

/// Runs one cell. Depends only on (name, parameter, seed), the config and the data.
inline SdrReport run_cell(std::string_view name, const std::string& parameter, std::uint64_t seed, const ExperimentData& data,
                          const ExperimentConfig& cfg) {
  const auto num = [&](std::string_view what) { return csv::parse_number<double>(parameter, what); };
  if (name == "p_sweep") {
    const auto model = train_linear(data.train, base_stream(cfg, seed, num("p")), cfg);
    return evaluate_separator(mask_separator(std::make_shared<MaskModel>(model)), data.eval, cfg.eval);
  }
  if (name == "pool_sweep") {
    StreamConfig s = base_stream(cfg, seed, 0.0);
    s.mode = StreamMode::pool;
    s.pool_size = ExperimentConfig::pool_size(num("pool_ratio"), cfg.n_examples);
    const auto model = train_linear(data.train, s, cfg);
    return evaluate_separator(mask_separator(std::make_shared<MaskModel>(model)), data.eval, cfg.eval);
  }
  if (name == "reduced_data_sweep") {
    Rng rng(seed, "reduce");
    const StemLibrary lib = subset_library(data.train, reduce_dataset(data.train.index(), num("fraction"), rng));
    const auto model = train_linear(lib, base_stream(cfg, seed, cfg.p), cfg);
    return evaluate_separator(mask_separator(std::make_shared<MaskModel>(model)), data.eval, cfg.eval);
  }
  if (name == "timing_testset" || name == "pitch_testset") {
    GridCell cell;
    cell.kind = name == "timing_testset" ? PerturbKind::timing : PerturbKind::pitch;
    cell.parameter = csv::parse_number<std::int64_t>(parameter, "grid value");
    cell.mode = cfg.pitch_mode;
    const StemLibrary perturbed = perturb_library(data.test, cell, seed);
    return evaluate_separator(testset_separator(data, cfg, seed), perturbed, cfg.eval);
  }
  if (name == "within_song_train") {
    StreamConfig s = base_stream(cfg, seed, 0.0);
    s.mode = StreamMode::within_song;
    s.sampler.within_song_ts = parse_spread(parameter, "within_song_ts");
    const auto model = train_linear(data.train, s, cfg);
    return evaluate_separator(mask_separator(std::make_shared<MaskModel>(model)), data.eval, cfg.eval);
  }
  if (name == "consistent_vs_inconsistent_pitch_train") {
    StreamConfig s = base_stream(cfg, seed, cfg.p);
    s.pitch_smax = cfg.pitch_train_smax;
    s.pitch_mode = parse_mode(parameter);
    const auto model = train_linear(data.train, s, cfg);
    return evaluate_separator(mask_separator(std::make_shared<MaskModel>(model)), data.eval, cfg.eval);
  }
  if (name == "song_level_remix") {
    StemLibrary lib = data.train;
    if (parameter == "remix") {
      Rng rng(seed, "remix");
      lib = materialize_remix(data.train, plan_song_level_remix(data.train.index(), rng));
    } else if (parameter != "original") {
      throw Error(ErrorCode::invalid_argument, "song_level_remix cell must be original or remix");
    }
    const auto model = train_linear(lib, base_stream(cfg, seed, 1.0), cfg);
    return evaluate_separator(mask_separator(std::make_shared<MaskModel>(model)), data.eval, cfg.eval);
  }
  throw Error(ErrorCode::invalid_argument, "unknown experiment '" + std::string(name) + "'");
}

struct ResultRecord {
  std::string experiment;
  std::string parameter;
  std::uint64_t seed = 0;
  SdrReport report;
};

inline constexpr std::string_view kResultsHeader = "experiment,parameter,seed,source,median_sdr_db,global_sdr_db";

/// Five lines per record: the four sources, then "avg".
inline std::string results_to_csv(const std::vector<ResultRecord>& records) {
  std::ostringstream out;
  out << kResultsHeader << '\n';
  for (const auto& r : records) {
    const std::string prefix = r.experiment + ',' + r.parameter + ',' + std::to_string(r.seed) + ',';
    for (std::size_t s = 0; s < kNumSources; ++s)
      out << prefix << kSourceNames[s] << ',' << csv::format_db(r.report.source_median[s]) << ','
          << csv::format_db(r.report.source_global[s]) << '\n';
    out << prefix << "avg," << csv::format_db(r.report.avg_median) << ',' << csv::format_db(r.report.avg_global) << '\n';
  }
  return out.str();
}

/// Runs `tasks` on `jobs` threads; results keep the task order. The first
/// failure in task order is rethrown after all workers stop.
template <typename T>
std::vector<T> run_parallel(const std::vector<std::function<T()>>& tasks, std::size_t jobs) {
  std::vector<T> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        results[i] = tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

/// All cells x replicates of one experiment, in canonical (cell, replicate) order.
inline std::vector<ResultRecord> run_experiment(std::string_view name, const ExperimentConfig& cfg, const ExperimentData& data) {
  const auto cells = experiment_cells(name, cfg);
  std::vector<std::function<ResultRecord()>> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (std::size_t r = 0; r < cfg.replicates; ++r)
      tasks.emplace_back([&, c, r] {
        const std::uint64_t seed = sub_seed(cfg.seed, name, c, r);
        log_info(std::string(name) + ": cell " + cells[c] + " seed " + std::to_string(seed));
        return ResultRecord{std::string(name), cells[c], seed, run_cell(name, cells[c], seed, data, cfg)};
      });
  return run_parallel(tasks, cfg.jobs);
}

inline std::vector<ResultRecord> run_experiment(std::string_view name, const ExperimentConfig& cfg) {
  experiment_cells(name, cfg);  // reject unknown names before loading data
  return run_experiment(name, cfg, prepare_data(cfg));
}

}  // namespace mixaug
