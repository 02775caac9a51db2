#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "mixaug/cli.hpp"
#include "oracles.hpp"

using namespace mixaug;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mixaug");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

constexpr const char* kFastConfig =
    "# small sizes for tests\n"
    "synth_train_songs = 4\n"
    "synth_test_songs = 2\n"
    "chunk_len = 44100\n"
    "n_examples = 4\n"
    "n_mixes = 20\n"
    "fft_size = 2048\n"
    "hop_size = 512\n";

fs::path write_config(const fs::path& dir, const std::string& extra = "") {
  const auto p = dir / "fast.cfg";
  csv::write_text(p, std::string(kFastConfig) + extra);
  return p;
}

/// Two short noise songs in dataset layout.
fs::path tiny_dataset(const fs::path& root, std::size_t n = 66150) {
  for (int s = 0; s < 2; ++s) {
    StemSet set;
    set.song_id = "tiny" + std::to_string(s);
    for (std::uint32_t i = 0; i < kNumSources; ++i) set.stems[i] = oracle::noise(n, 40 + s * 4 + i, 0.1);
    write_song(set, root);
  }
  return root;
}

class CliData : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    base_ = new fs::path(oracle::temp_dir("cli_data"));
    const auto r = run_cli({"--out", (*base_ / "train").string(), "--seed", "3", "synth", "--songs", "4"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() {
    delete base_;
    base_ = nullptr;
  }
  static fs::path train() { return *base_ / "train"; }
  static fs::path base() { return *base_; }

 private:
  static inline fs::path* base_ = nullptr;
};

}  // namespace

// ---------------------------------------------------------------------------
// Config

TEST(Config, ParsesCommentsAndLists) {
  const auto c = Config::parse("# header\np = 0.5  # trailing\n\nts_grid = 0, 10 ,20\n");
  EXPECT_EQ(c.get<double>("p"), 0.5);
  EXPECT_EQ(c.get_list<std::int64_t>("ts_grid"), (std::vector<std::int64_t>{0, 10, 20}));
  EXPECT_EQ(c.get<std::size_t>("chunk_len"), 264600u);
}

TEST(Config, RejectsUnknownAndDuplicateKeys) {
  try {
    Config::parse("learning_rate = 3\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_key);
  }
  EXPECT_THROW(Config::parse("p = 1\np = 0\n"), Error);
  EXPECT_THROW(Config::parse("just words\n"), Error);
}

TEST(Config, PoolRatioConflicts) {
  Config c;
  c.set("pool_ratio", "0.1");
  EXPECT_NO_THROW(ExperimentConfig::from(c));
  c.set("p", "1");
  try {
    ExperimentConfig::from(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config_conflict);
  }
  Config w;
  w.set("pool_ratio", "0.1");
  w.set("within_song_ts", "inf");
  EXPECT_THROW(ExperimentConfig::from(w), Error);
  EXPECT_EQ(ExperimentConfig::pool_size(0.1, 2000), 200u);
  EXPECT_EQ(ExperimentConfig::pool_size(0.01, 150), 2u);
  EXPECT_THROW(ExperimentConfig::pool_size(0.001, 100), Error);
}

TEST(Config, SpreadsAndDefaults) {
  EXPECT_EQ(parse_spread("inf", "x"), kUnboundedSpread);
  EXPECT_EQ(parse_spread("1323", "x"), std::optional<std::size_t>(1323));
  EXPECT_EQ(spread_name(std::nullopt), "inf");
  const auto e = ExperimentConfig::from(Config());
  EXPECT_EQ(e.p_grid, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(e.replicates, 3u);
  ASSERT_TRUE(e.loudness_target.has_value());
  EXPECT_EQ(*e.loudness_target, -17.0);
  Config none;
  none.set("loudness_target", "none");
  EXPECT_FALSE(ExperimentConfig::from(none).loudness_target.has_value());
  Config bad;
  bad.set("p", "1.5");
  EXPECT_THROW(ExperimentConfig::from(bad), Error);
}

// ---------------------------------------------------------------------------
// Experiment plumbing

TEST(Experiment, SubSeedsAreDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t r = 0; r < 3; ++r) seen.insert(sub_seed(1, "p_sweep", c, r));
  EXPECT_EQ(seen.size(), 12u);
  EXPECT_EQ(sub_seed(1, "p_sweep", 2, 1), hash64({1, "p_sweep", 2, 1}));
  EXPECT_NE(sub_seed(1, "p_sweep", 0, 0), sub_seed(1, "pool_sweep", 0, 0));
}

TEST(Experiment, RunParallelKeepsOrderAndRethrowsFirstError) {
  std::vector<std::function<int()>> tasks;
  for (int i = 0; i < 20; ++i) tasks.emplace_back([i] { return i * i; });
  const auto out = run_parallel(tasks, 4);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(out[static_cast<std::size_t>(i)], i * i);
  tasks[3] = [] () -> int { throw Error(ErrorCode::numeric, "third"); };
  tasks[7] = [] () -> int { throw Error(ErrorCode::io, "seventh"); };
  try {
    run_parallel(tasks, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::numeric);
  }
}

TEST(Experiment, CellsInCanonicalOrder) {
  const auto cfg = ExperimentConfig::from(Config());
  EXPECT_EQ(experiment_cells("within_song_train", cfg), (std::vector<std::string>{"1323", "22050", "inf"}));
  EXPECT_EQ(experiment_cells("song_level_remix", cfg), (std::vector<std::string>{"original", "remix"}));
  EXPECT_EQ(experiment_cells("p_sweep", cfg).size(), 3u);
  EXPECT_THROW(experiment_cells("nope", cfg), Error);
  EXPECT_EQ(experiment_names().size(), 8u);
}

TEST(Experiment, ZeroTimingSpreadEqualsBaseline) {
  Config raw = Config::parse(kFastConfig);
  raw.set("seed", "2");
  const auto cfg = ExperimentConfig::from(raw);
  const auto data = prepare_data(cfg);
  const auto base = evaluate_separator(oracle_separator(cfg.oracle, cfg.stft), data.test, cfg.eval);
  const auto cell = run_cell("timing_testset", "0", 99, data, cfg);
  EXPECT_EQ(cell.avg_global, base.avg_global);
  EXPECT_EQ(cell.source_global, base.source_global);
  const auto pitch = run_cell("pitch_testset", "0", 5, data, cfg);
  EXPECT_EQ(pitch.avg_global, base.avg_global);
}

// ---------------------------------------------------------------------------
// CLI verbs

TEST_F(CliData, SynthThenIndexAgree) {
  const auto out2 = base() / "reindex";
  const auto r = run_cli({"--out", out2.string(), "index", "--root", train().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(oracle::read_file(out2 / "index.csv"), oracle::read_file(train() / "index.csv"));
  const auto idx = read_index_csv(train() / "index.csv");
  EXPECT_EQ(idx.songs.size(), 4u);
  char hours[32];
  std::snprintf(hours, sizeof(hours), "%.6f", idx.hours());
  EXPECT_NE(r.out.find(std::string("hours: ") + hours), std::string::npos);
  EXPECT_NE(r.out.find("songs: 4"), std::string::npos);
  EXPECT_EQ(csv::read_rows(train() / "params.csv", kSynthParamsHeader).size(), 4u);
}

TEST_F(CliData, MissingRootIsDataError) {
  const auto r = run_cli({"--out", (base() / "x").string(), "index", "--root", "/nonexistent/dir"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("data error"), std::string::npos);
}

TEST_F(CliData, UsageErrorsAreConfigErrors) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"mix", "--root", "a", "--index", "b"}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST_F(CliData, MixWithPOneGivesOriginalRows) {
  const auto cfg = write_config(base(), "p = 1\n");
  const auto out = base() / "mix_p1";
  const auto r = run_cli({"--config", cfg.string(), "--out", out.string(), "mix", "--root", train().string(), "--n", "15"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto specs = read_mixspecs_csv(out / "mixspecs.csv");
  ASSERT_EQ(specs.size(), 15u);
  for (const auto& s : specs) EXPECT_EQ(s.kind, MixKind::original);
}

TEST_F(CliData, PoolWithPOneIsRejected) {
  const auto cfg = write_config(base(), "p = 1\npool_ratio = 0.1\n");
  const auto r = run_cli({"--config", cfg.string(), "--out", (base() / "bad").string(), "mix", "--root", train().string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("config error"), std::string::npos);
}

TEST_F(CliData, PoolMixHasRDistinctSpecsAndStableBytes) {
  const auto cfg = write_config(base(), "pool_ratio = 0.1\n");
  const auto a = base() / "pool_a", b = base() / "pool_b";
  for (const auto& out : {a, b}) {
    const auto r = run_cli({"--config", cfg.string(), "--seed", "4", "--out", out.string(), "mix", "--index", (train() / "index.csv").string(), "--n", "100"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(oracle::read_file(a / "mixspecs.csv"), oracle::read_file(b / "mixspecs.csv"));
  std::set<std::string> distinct;
  for (auto s : read_mixspecs_csv(a / "mixspecs.csv")) {
    EXPECT_EQ(s.kind, MixKind::pooled);
    s.mix_id = 0;
    distinct.insert(mixspecs_to_csv({s}));
  }
  EXPECT_EQ(distinct.size(), 10u);
}

TEST_F(CliData, MaterializedMixesAreStemSums) {
  const auto cfg = write_config(base(), "loudness_target = none\n");
  const auto out = base() / "mat";
  const auto r = run_cli({"--config", cfg.string(), "--out", out.string(), "mix", "--root", train().string(), "--n", "2", "--materialize"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto idx = index_dataset(out / "mixes");
  ASSERT_EQ(idx.songs.size(), 2u);
  const auto song = load_song(idx.songs[1]);
  EXPECT_EQ(song.size(), 44100u);
  EXPECT_EQ(load_wav(out / "mixes" / idx.songs[1].song_id / "mixture.wav"), mixture_of(song));
}

TEST(Cli, PerturbManifestIdentityAndIdempotence) {
  const auto dir = oracle::temp_dir("cli_perturb");
  const auto data = tiny_dataset(dir / "test");
  const auto out = dir / "cells";
  const auto cfg = write_config(dir);
  const auto r = run_cli({"--config", cfg.string(), "--out", out.string(), "perturb", "--root", data.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_manifest_csv(out / "manifest.csv");
  EXPECT_EQ(rows.size(), 18u * 2);
  for (const char* stem : {"vocals.wav", "other.wav"})
    EXPECT_EQ(oracle::read_file(out / "timing_0_s2" / "tiny1" / stem), oracle::read_file(data / "tiny1" / stem));
  EXPECT_NE(oracle::read_file(out / "timing_44100_s0" / "tiny0" / "bass.wav"), oracle::read_file(data / "tiny0" / "bass.wav"));

  const auto before = oracle::read_file(out / "timing_1323_s1" / "tiny0" / "drums.wav");
  const auto r2 = run_cli({"--config", cfg.string(), "--out", out.string(), "perturb", "--root", data.string()});
  ASSERT_EQ(r2.code, 0) << r2.err;
  EXPECT_EQ(oracle::read_file(out / "timing_1323_s1" / "tiny0" / "drums.wav"), before);
  EXPECT_EQ(read_manifest_csv(out / "manifest.csv").size(), rows.size());

  // the manifest drives a per-cell evaluation
  const auto ev = run_cli({"--config", cfg.string(), "--out", (dir / "ev").string(), "eval", "--oracle", "--manifest",
                           (out / "manifest.csv").string()});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_TRUE(fs::exists(dir / "ev" / "summary_timing_0_s0.csv"));
  EXPECT_EQ(csv::read_rows(dir / "ev" / "report.csv", kReportHeader).size(), 18u * 2 * 4);
  fs::remove_all(dir);
}

TEST_F(CliData, FitRejectsZeroExamplesAndDependsOnP) {
  const auto cfg = write_config(base());
  EXPECT_EQ(run_cli({"--config", cfg.string(), "--out", (base() / "f0").string(), "fit", "--root", train().string(), "--n", "0"}).code, 2);
  for (const char* p : {"0", "1"}) {
    const auto cfgp = write_config(base(), std::string("p = ") + p + "\n");
    const auto r = run_cli({"--config", cfgp.string(), "--out", (base() / ("fit_p" + std::string(p))).string(), "fit", "--root",
                            train().string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const auto m0 = load_model(base() / "fit_p0" / "model.mmdl"), m1 = load_model(base() / "fit_p1" / "model.mmdl");
  EXPECT_EQ(m0.p, 0.0);
  EXPECT_EQ(m1.p, 1.0);
  EXPECT_EQ(m0.n_examples, 4u);
  EXPECT_NE(m0.gains, m1.gains);
}

TEST_F(CliData, EvalIsDeterministicAndNeedsGroundTruth) {
  const auto cfg = write_config(base(), "metric = both\n");
  const auto fit = run_cli({"--config", cfg.string(), "--out", (base() / "ev_model").string(), "fit", "--root", train().string()});
  ASSERT_EQ(fit.code, 0) << fit.err;
  const auto model = (base() / "ev_model" / "model.mmdl").string();
  for (const char* name : {"ev_a", "ev_b"}) {
    const auto r = run_cli({"--config", cfg.string(), "--out", (base() / name).string(), "eval", "--model", model, "--root", train().string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(oracle::read_file(base() / "ev_a" / "report.csv"), oracle::read_file(base() / "ev_b" / "report.csv"));
  EXPECT_EQ(csv::read_rows(base() / "ev_a" / "summary.csv", kSummaryHeader).size(), 5u);

  const auto broken = tiny_dataset(base() / "broken");
  fs::remove(broken / "tiny1" / "other.wav");
  const auto r = run_cli({"--config", cfg.string(), "--out", (base() / "ev_c").string(), "eval", "--model", model, "--root", broken.string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("missing ground truth"), std::string::npos);
  EXPECT_EQ(run_cli({"--out", (base() / "ev_d").string(), "eval", "--root", train().string()}).code, 2);
}

TEST(Cli, ExperimentResultsShapeAndSingleCell) {
  const auto dir = oracle::temp_dir("cli_exp");
  const auto cfg = write_config(dir);
  const auto r = run_cli({"--config", cfg.string(), "--seed", "5", "--jobs", "2", "--out", (dir / "a").string(), "experiment", "p_sweep"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv::read_rows(dir / "a" / "results.csv", kResultsHeader);
  ASSERT_EQ(rows.size(), 9u * 5);
  EXPECT_EQ(rows[4][3], "avg");
  EXPECT_EQ(rows[0][1], "0");
  EXPECT_EQ(rows[44][1], "1");

  // one (parameter, seed) pair reproduces its records alone
  const auto single = run_cli({"--config", cfg.string(), "--seed", "5", "--out", (dir / "b").string(), "experiment", "p_sweep",
                               "--parameter", rows[20][1], "--cell-seed", rows[20][2]});
  ASSERT_EQ(single.code, 0) << single.err;
  const auto one = csv::read_rows(dir / "b" / "results.csv", kResultsHeader);
  ASSERT_EQ(one.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(one[i], rows[20 + i]);

  EXPECT_EQ(run_cli({"--config", cfg.string(), "--out", (dir / "c").string(), "experiment", "q_sweep"}).code, 2);
  EXPECT_EQ(run_cli({"--config", cfg.string(), "--out", (dir / "c").string(), "experiment", "p_sweep", "--parameter", "0.7",
                     "--cell-seed", "1"}).code, 2);
  const auto bad = dir / "bad.cfg";
  csv::write_text(bad, "learning_rate = 0.1\n");
  EXPECT_EQ(run_cli({"--config", bad.string(), "--out", (dir / "c").string(), "experiment", "p_sweep"}).code, 2);
  fs::remove_all(dir);
}
