#pragma once

// Command-line front end. Exit codes: 0 success, 2 configuration error,
// 3 data error, 4 numeric failure.

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixaug/config.hpp"
#include "mixaug/dataset.hpp"
#include "mixaug/error.hpp"
#include "mixaug/experiment.hpp"
#include "mixaug/log.hpp"
#include "mixaug/perturb.hpp"
#include "mixaug/sampling.hpp"
#include "mixaug/separators.hpp"
#include "mixaug/synth.hpp"

namespace mixaug::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

inline int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config: return kExitConfig;
    case ErrorCategory::data: return kExitData;
    case ErrorCategory::numeric: return kExitNumeric;
  }
  return kExitNumeric;
}

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::optional<std::string> out;
  std::optional<std::size_t> jobs;
  bool verbose = false;
};

/// Dataset selected by --root or --index.
struct DataArgs {
  std::string root;
  std::string index;
};

inline void add_data_args(CLI::App* cmd, DataArgs& d) {
  auto* root = cmd->add_option("--root", d.root, "dataset directory (one subdirectory per song)");
  auto* index = cmd->add_option("--index", d.index, "index CSV written by `index`");
  root->excludes(index);
}

inline DatasetIndex resolve_index(const DataArgs& d, Split split) {
  if (!d.root.empty()) {
    if (!fs::is_directory(d.root)) throw Error(ErrorCode::io, "no such dataset directory: " + d.root);
    return index_dataset(d.root, split);
  }
  if (!d.index.empty()) {
    if (!fs::is_regular_file(d.index)) throw Error(ErrorCode::io, "no such index file: " + d.index);
    return read_index_csv(d.index, split);
  }
  throw Error(ErrorCode::invalid_argument, "one of --root or --index is required");
}

inline void check_input(const DataArgs& d) {
  if (!d.root.empty() && !fs::is_directory(d.root)) throw Error(ErrorCode::io, "no such dataset directory: " + d.root);
  if (!d.index.empty() && !fs::is_regular_file(d.index)) throw Error(ErrorCode::io, "no such index file: " + d.index);
  if (d.root.empty() && d.index.empty()) throw Error(ErrorCode::invalid_argument, "one of --root or --index is required");
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  throw Error(ErrorCode::invalid_argument, "split must be train, valid or test");
}

/// Stream settings from the sampler keys: pool, within-song, or the p scheduler.
inline StreamConfig stream_from(const ExperimentConfig& cfg, std::uint64_t budget) {
  StreamConfig s;
  s.sampler.p = cfg.p;
  s.sampler.chunk_len = cfg.chunk_len;
  s.sampler.seed = cfg.seed;
  if (cfg.pool_ratio) {
    s.mode = StreamMode::pool;
    s.pool_size = ExperimentConfig::pool_size(*cfg.pool_ratio, budget);
  } else if (cfg.within_song) {
    s.mode = StreamMode::within_song;
    s.sampler.within_song_ts = cfg.within_song_ts;
  }
  return s;
}

inline void print_summary(std::ostream& out, const DatasetIndex& idx) {
  char hours[32];
  std::snprintf(hours, sizeof(hours), "%.6f", idx.hours());
  out << "songs: " << idx.songs.size() << "\nhours: " << hours << '\n';
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Random-mix data augmentation and evaluation toolkit for music source separation"};
  app.name("mixaug");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--config", g.config, "flat key = value configuration file");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", g.verbose, "log progress to stderr");
  app.fallthrough();

  std::string split_name = "train";

  auto* index_cmd = app.add_subcommand("index", "index a dataset directory and write index.csv");
  std::string index_root;
  index_cmd->add_option("--root", index_root, "dataset directory")->required();
  index_cmd->add_option("--split", split_name, "train, valid or test");

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset with params.csv and index.csv");
  std::optional<std::size_t> synth_songs;
  synth_cmd->add_option("--songs", synth_songs, "number of songs")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--split", split_name, "train, valid or test");

  auto* mix_cmd = app.add_subcommand("mix", "draw training MixSpecs into mixspecs.csv");
  DataArgs mix_data;
  add_data_args(mix_cmd, mix_data);
  std::optional<std::size_t> mix_n;
  bool materialize = false;
  mix_cmd->add_option("--n", mix_n, "number of mixes");
  mix_cmd->add_flag("--materialize", materialize, "also write the realized mixes as audio");

  auto* perturb_cmd = app.add_subcommand("perturb", "build perturbed test sets and manifest.csv");
  DataArgs perturb_data;
  add_data_args(perturb_cmd, perturb_data);

  auto* fit_cmd = app.add_subcommand("fit", "fit a linear mask on realized training mixes");
  DataArgs fit_data;
  add_data_args(fit_cmd, fit_data);
  std::optional<std::uint64_t> fit_n;
  std::string model_name = "model.mmdl";
  fit_cmd->add_option("--n", fit_n, "number of training examples");
  fit_cmd->add_option("--model-name", model_name, "model file name inside the output directory");

  auto* eval_cmd = app.add_subcommand("eval", "score a model or the oracle against ground truth");
  DataArgs eval_data;
  add_data_args(eval_cmd, eval_data);
  std::string eval_model, eval_manifest, eval_metric;
  std::optional<std::string> eval_oracle;
  std::optional<std::size_t> eval_chunk;
  auto* model_opt = eval_cmd->add_option("--model", eval_model, "mask model file");
  auto* oracle_opt = eval_cmd->add_option("--oracle", eval_oracle, "oracle kind (irm_alpha2 or irm_alpha1)")->expected(0, 1);
  model_opt->excludes(oracle_opt);
  eval_cmd->add_option("--manifest", eval_manifest, "manifest.csv from `perturb`");
  eval_cmd->add_option("--metric", eval_metric, "global, bsseval or both");
  eval_cmd->add_option("--chunk-len", eval_chunk, "evaluate non-overlapping chunks of this many samples (0: whole tracks)");
  eval_cmd->add_option("--split", split_name, "train, valid or test");

  auto* exp_cmd = app.add_subcommand("experiment", "run an experiment sweep into results.csv");
  std::string exp_name;
  std::optional<std::string> exp_parameter;
  std::optional<std::uint64_t> exp_cell_seed;
  exp_cmd->add_option("name", exp_name, "experiment name")->required();
  auto* param_opt = exp_cmd->add_option("--parameter", exp_parameter, "run a single cell with this parameter");
  auto* cell_seed_opt = exp_cmd->add_option("--cell-seed", exp_cell_seed, "sub-seed of the single cell");
  param_opt->needs(cell_seed_opt);
  cell_seed_opt->needs(param_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const auto fail = [&](ErrorCategory cat, const std::string& what) {
    const char* names[] = {"config", "data", "numeric"};
    err << "mixaug: " << names[static_cast<int>(cat)] << " error: " << what << '\n';
    return exit_code(cat);
  };

  try {
    if (g.verbose) log_threshold().store(LogLevel::info);
    Config raw = g.config.empty() ? Config() : Config::load(g.config);
    if (g.seed) raw.set("seed", std::to_string(*g.seed));
    if (g.out) raw.set("out", *g.out);
    if (g.jobs) raw.set("jobs", std::to_string(*g.jobs));
    if (synth_songs) raw.set("synth_train_songs", std::to_string(*synth_songs));
    if (mix_n) raw.set("n_mixes", std::to_string(*mix_n));
    if (fit_n) raw.set("n_examples", std::to_string(*fit_n));
    if (!eval_metric.empty()) raw.set("metric", eval_metric);
    if (eval_chunk) raw.set("eval_chunk_len", std::to_string(*eval_chunk));
    if (eval_oracle && !eval_oracle->empty()) raw.set("oracle", *eval_oracle);
    const ExperimentConfig cfg = ExperimentConfig::from(raw);
    const Split split = parse_split(split_name);
    const fs::path outdir = cfg.out;

    if (*index_cmd) {
      if (!fs::is_directory(index_root)) throw Error(ErrorCode::io, "no such dataset directory: " + index_root);
      const DatasetIndex idx = index_dataset(index_root, split);
      csv::write_text(outdir / "index.csv", index_to_csv(idx));
      print_summary(out, idx);
    } else if (*synth_cmd) {
      Rng rng(cfg.seed, "synth_dataset");
      const DatasetIndex idx = synth_dataset(cfg.synth_train_songs, rng, cfg.synth, outdir, split);
      csv::write_text(outdir / "index.csv", index_to_csv(idx));
      print_summary(out, idx);
    } else if (*mix_cmd) {
      check_input(mix_data);
      const DatasetIndex idx = resolve_index(mix_data, Split::train);
      warn_short_songs(idx, cfg.chunk_len);
      MixStream stream(idx, stream_from(cfg, cfg.n_mixes));
      std::vector<MixSpec> specs;
      for (std::size_t i = 0; i < cfg.n_mixes; ++i) specs.push_back(stream.next());
      csv::write_text(outdir / "mixspecs.csv", mixspecs_to_csv(specs));
      if (materialize) {
        const StemLibrary lib = StemLibrary::load(idx);
        write_library(realized_library(lib, specs, cfg.chunk_len, cfg.loudness_target), outdir / "mixes");
      }
      out << "mixes: " << specs.size() << '\n';
    } else if (*perturb_cmd) {
      check_input(perturb_data);
      std::vector<GridCell> grid;
      const auto& values = cfg.perturb_kind == PerturbKind::timing ? cfg.ts_grid : cfg.smax_grid;
      for (auto v : values) grid.push_back(GridCell{cfg.perturb_kind, v, cfg.pitch_mode});
      if (grid.empty() || cfg.perturb_seeds.empty()) throw Error(ErrorCode::invalid_argument, "empty perturbation grid");
      const auto rows = build_modified_testset(resolve_index(perturb_data, Split::test), grid, cfg.perturb_seeds, outdir);
      out << "manifest rows: " << rows.size() << '\n';
    } else if (*fit_cmd) {
      check_input(fit_data);
      if (cfg.n_examples == 0) throw Error(ErrorCode::invalid_argument, "n_examples must be at least 1");
      const DatasetIndex idx = resolve_index(fit_data, Split::train);
      warn_short_songs(idx, cfg.chunk_len);
      const StemLibrary lib = StemLibrary::load(idx);
      const StreamConfig s = stream_from(cfg, cfg.n_examples);
      MixStream stream(idx, s);
      const MaskModel model = fit_linear_mask(lib, stream, s, cfg.stft, cfg.n_examples, cfg.loudness_target);
      save_model(model, outdir / model_name);
      out << "model: " << (outdir / model_name).string() << '\n';
    } else if (*eval_cmd) {
      if (eval_model.empty() && !eval_oracle) throw Error(ErrorCode::invalid_argument, "eval needs --model or --oracle");
      if (!eval_model.empty() && !fs::is_regular_file(eval_model)) throw Error(ErrorCode::io, "no such model file: " + eval_model);
      if (eval_manifest.empty()) check_input(eval_data);
      else if (!fs::is_regular_file(eval_manifest)) throw Error(ErrorCode::io, "no such manifest: " + eval_manifest);
      const Separator sep = eval_model.empty() ? oracle_separator(cfg.oracle, cfg.stft)
                                               : mask_separator(std::make_shared<MaskModel>(load_model(eval_model)));
      const auto load_truth = [&](const DatasetIndex& idx) {
        try {
          return StemLibrary::load(idx);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::missing_stem) throw Error(ErrorCode::missing_ground_truth, e.what());
          throw;
        }
      };
      const auto index_truth = [&](const fs::path& root) {
        try {
          return index_dataset(root, Split::test);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::missing_stem) throw Error(ErrorCode::missing_ground_truth, e.what());
          throw;
        }
      };
      if (eval_manifest.empty()) {
        const DatasetIndex idx = eval_data.root.empty() ? resolve_index(eval_data, split) : index_truth(eval_data.root);
        const SdrReport rep = evaluate_separator(sep, load_truth(idx), cfg.eval);
        csv::write_text(outdir / "report.csv", report_to_csv(rep));
        csv::write_text(outdir / "summary.csv", summary_to_csv(rep));
        out << summary_to_csv(rep);
      } else {
        // One cell per manifest cell_id, in manifest order.
        std::vector<std::string> order;
        std::map<std::string, fs::path> dirs;
        for (const auto& row : read_manifest_csv(eval_manifest))
          if (dirs.emplace(row.cell_id, row.out_dir).second) order.push_back(row.cell_id);
        std::vector<SourceScore> all;
        for (const auto& id : order) {
          SdrReport rep = evaluate_separator(sep, load_truth(index_truth(dirs[id])), cfg.eval);
          csv::write_text(outdir / ("summary_" + id + ".csv"), summary_to_csv(rep));
          for (auto& r : rep.rows) {
            r.track = id + "/" + r.track;
            all.push_back(std::move(r));
          }
        }
        const SdrReport rep = aggregate(std::move(all));
        csv::write_text(outdir / "report.csv", report_to_csv(rep));
        csv::write_text(outdir / "summary.csv", summary_to_csv(rep));
        out << "cells: " << order.size() << '\n';
      }
    } else if (*exp_cmd) {
      const auto cells = experiment_cells(exp_name, cfg);
      std::vector<ResultRecord> records;
      if (exp_parameter) {
        if (std::find(cells.begin(), cells.end(), *exp_parameter) == cells.end())
          throw Error(ErrorCode::invalid_argument, "parameter '" + *exp_parameter + "' is not a cell of " + exp_name);
        const ExperimentData data = prepare_data(cfg);
        records.push_back({exp_name, *exp_parameter, *exp_cell_seed, run_cell(exp_name, *exp_parameter, *exp_cell_seed, data, cfg)});
      } else {
        records = run_experiment(exp_name, cfg);
      }
      csv::write_text(outdir / "results.csv", results_to_csv(records));
      out << "results: " << (outdir / "results.csv").string() << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    return fail(e.category(), e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(ErrorCategory::data, e.what());
  } catch (const std::exception& e) {
    return fail(ErrorCategory::numeric, e.what());
  }
}

}  // namespace mixaug::cli
