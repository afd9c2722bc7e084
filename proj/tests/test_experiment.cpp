#include <gtest/gtest.h>

#include <fstream>

#include "adrf/experiment.hpp"

using namespace adrf;

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

ExperimentConfig base(const std::filesystem::path& out) {
  ExperimentConfig cfg;
  cfg.sim.users = 4;
  cfg.sim.epochs = 5;
  cfg.out = out;
  cfg.threads = 2;
  return cfg;
}

}  // namespace

// --- config -----------------------------------------------------------------

TEST(ExperimentConfig, ParsesRangesAndSweeps) {
  EXPECT_EQ(parse_range("1:10"), (std::pair<std::uint64_t, std::uint64_t>{1, 10}));
  EXPECT_THROW(parse_range("1-10"), ConfigError);
  EXPECT_THROW(parse_range("a:3"), ConfigError);
  EXPECT_THROW(parse_range("1:3x"), ConfigError);
  EXPECT_EQ(parse_sweep("2,5,10"), (std::vector<std::size_t>{2, 5, 10}));
  EXPECT_THROW(parse_sweep("2,,5"), ConfigError);
}

TEST(ExperimentConfig, RejectsInvertedDemandRange) {
  ExperimentConfig cfg;
  std::tie(cfg.sim.demand_low, cfg.sim.demand_high) = parse_range("5:1");
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ExperimentConfig, RejectsBadSweepsAndTrials) {
  ExperimentConfig cfg;
  cfg.sweep = {2, 2};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.sweep = {0};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.sweep = {};
  cfg.trials = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ExperimentConfig, JsonMirrorsFlags) {
  ExperimentConfig cfg;
  apply_json(cfg, nlohmann::json::parse(R"({"users": 7, "resources": 3, "epochs": 9, "demand_range": "2:4",
      "per_user_reserve": 90, "seed": 5, "trials": 4, "sweep": [2, 5], "out": "elsewhere",
      "reserve_range": [10, 20], "costs": {"branch_cost": 12}, "threads": 3})"));
  EXPECT_EQ(cfg.sim.users, 7u);
  EXPECT_EQ(cfg.sim.resources, 3u);
  EXPECT_EQ(cfg.sim.epochs, 9u);
  EXPECT_EQ(cfg.sim.demand_low, 2u);
  EXPECT_EQ(cfg.sim.demand_high, 4u);
  EXPECT_EQ(cfg.sim.per_user_reserve, 90u);
  EXPECT_EQ(cfg.sim.seed, 5u);
  EXPECT_EQ(cfg.trials, 4u);
  EXPECT_EQ(cfg.sweep, (std::vector<std::size_t>{2, 5}));
  EXPECT_EQ(cfg.out, "elsewhere");
  EXPECT_EQ(cfg.reserve_low, 10u);
  EXPECT_EQ(cfg.reserve_high, 20u);
  EXPECT_EQ(cfg.costs.branch_cost, 12u);
  EXPECT_EQ(cfg.costs.claim, (AffineCost{15'130, 36'486}));
  EXPECT_EQ(cfg.threads, 3u);
  EXPECT_THROW(apply_json(cfg, nlohmann::json::parse(R"({"users": "many"})")), ConfigError);
}

TEST(ExperimentConfig, MissingFileIsConfigError) {
  EXPECT_THROW(load_experiment_config("/nonexistent/adrf.json"), ConfigError);
}

// --- run --------------------------------------------------------------------

TEST(CmdRun, DefaultsWriteOneTraceAndOneCsv) {
  TempDir tmp("adrf_run_default");
  ExperimentConfig cfg;
  cfg.out = tmp.path;
  const auto report = cmd_run(cfg);
  EXPECT_EQ(report.status, ExitCode::ok);
  ASSERT_EQ(report.traces.size(), 1u);
  EXPECT_EQ(report.traces[0].filename(), "trace_m2_s0.trace");
  EXPECT_TRUE(std::filesystem::exists(report.cost_csv));
  EXPECT_EQ(report.calls, 2u * 10u * 11u);
  EXPECT_EQ(report.clamp_events, 0u);
}

TEST(CmdRun, SweepTimesTrialsTraces) {
  TempDir tmp("adrf_run_sweep");
  ExperimentConfig cfg = base(tmp.path);
  cfg.sweep = {2, 5, 10};
  cfg.trials = 3;
  const auto report = cmd_run(cfg);
  EXPECT_EQ(report.status, ExitCode::ok);
  EXPECT_EQ(report.traces.size(), 9u);
  for (const auto& t : report.traces) EXPECT_TRUE(std::filesystem::exists(t));
  std::size_t csv_files = 0;
  for (const auto& e : std::filesystem::directory_iterator(tmp.path))
    if (e.path().extension() == ".csv") ++csv_files;
  EXPECT_EQ(csv_files, 1u);
}

TEST(CmdRun, UnwritableOutputIsConfigError) {
  ExperimentConfig cfg;
  cfg.out = "/proc/adrf-cannot-write";
  EXPECT_THROW(cmd_run(cfg), ConfigError);
}

// --- costfit ----------------------------------------------------------------

TEST(CmdCostfit, RecoversCostModelFromRunOutput) {
  TempDir tmp("adrf_costfit");
  ExperimentConfig cfg = base(tmp.path);
  cfg.sweep = {1, 3, 8};
  cmd_run(cfg);
  const auto report = cmd_costfit(tmp.path / "costs.csv");
  ASSERT_EQ(report.fits.size(), 3u);
  const CostModel defaults;
  for (const auto& kf : report.fits) {
    SCOPED_TRACE(to_string(kf.kind));
    const AffineCost want = defaults.affine(kf.kind);
    EXPECT_EQ(kf.per_call.slope, Rational(want.slope));
    EXPECT_EQ(kf.per_call.intercept, Rational(want.intercept));
    EXPECT_EQ(kf.per_call.r_squared, Rational(1));
    EXPECT_EQ(kf.per_m_mean.slope, Rational(want.slope));
    EXPECT_EQ(kf.max_abs_residual, Rational(0));
  }
}

TEST(CmdCostfit, ExcludesWarmupCalls) {
  TempDir tmp("adrf_costfit_warm");
  ExperimentConfig cfg = base(tmp.path);
  cfg.sweep = {2, 4};
  cfg.costs.demand_warmup = {100, 20'000};
  cfg.costs.claim_warmup = {50, 9'000};
  cmd_run(cfg);
  const auto report = cmd_costfit(tmp.path / "costs.csv");
  for (const auto& kf : report.fits) {
    EXPECT_EQ(kf.per_call.slope, Rational(cfg.costs.affine(kf.kind).slope));
    if (kf.kind != CostKind::update_state) {
      EXPECT_GT(kf.excluded_warmup, 0u);
    }
  }
}

TEST(CmdCostfit, SingleResourceCountIsConfigError) {
  TempDir tmp("adrf_costfit_single");
  ExperimentConfig cfg = base(tmp.path);
  cmd_run(cfg);
  EXPECT_THROW(cmd_costfit(tmp.path / "costs.csv"), ConfigError);
  EXPECT_THROW(cmd_costfit(tmp.path / "missing.csv"), ConfigError);
}

TEST(CmdCostfit, BundledClaimTable) {
  const auto report = cmd_costfit_fixture("paper-table2-claim");
  ASSERT_TRUE(report.fixture_fit.has_value());
  EXPECT_NEAR(to_double(report.fixture_fit->slope), 15'130.0, 151.3);
  EXPECT_THROW(cmd_costfit_fixture("drf-classic"), ConfigError);
}

// --- crosscheck -------------------------------------------------------------

TEST(CmdCrosscheck, MachineMatchesReferenceEverywhere) {
  TempDir tmp("adrf_crosscheck");
  ExperimentConfig cfg = base(tmp.path);
  cfg.sweep = {1, 2, 5};
  cfg.trials = 3;
  const auto report = cmd_crosscheck(cfg);
  EXPECT_EQ(report.status, ExitCode::ok);
  EXPECT_EQ(report.runs, 9u);
  EXPECT_EQ(report.claims, 9u * 4u * 4u);
  EXPECT_EQ(report.match_rate(), 1.0);
  EXPECT_LE(report.max_abs_rational_delta, 1);
  EXPECT_TRUE(std::filesystem::exists(tmp.path / "crosscheck.json"));
}

TEST(CmdCrosscheck, SingleUserGetsEverything) {
  ExperimentConfig cfg;
  cfg.sim.users = 1;
  cfg.sim.resources = 1;
  cfg.sim.demand_low = cfg.sim.demand_high = 1;
  cfg.sim.epochs = 3;
  const Trace t = run_simulation(cfg.sim);
  const auto report = crosscheck_trace(t);
  EXPECT_EQ(report.match_rate(), 1.0);
  EXPECT_EQ(report.claims, 2u);
  EXPECT_EQ(report.nonzero_rational_deltas, 0u);
}

TEST(CmdCrosscheck, TamperedClaimIsReported) {
  ExperimentConfig cfg = base("unused");
  Trace t = run_simulation(cfg.sim);
  for (auto& r : t.records)
    if (r.tx.call == CallKind::claim) {
      r.task_count += 1;
      break;
    }
  const auto report = crosscheck_trace(t);
  EXPECT_EQ(report.status, ExitCode::violation);
  EXPECT_TRUE(report.first_mismatch.has_value());
}

// --- stats ------------------------------------------------------------------

TEST(CmdStats, ExactCycleInstancesHaveNoDifferences) {
  for (std::uint64_t reserve : {10, 20, 70}) {
    ExperimentConfig cfg;
    cfg.sim.users = 10;
    cfg.sim.resources = 3;
    cfg.sim.demand_low = cfg.sim.demand_high = 1;
    cfg.reserve_low = cfg.reserve_high = reserve;
    cfg.trials = 20;
    const auto r = cmd_stats(cfg, false);
    EXPECT_EQ(r.status, ExitCode::ok);
    EXPECT_EQ(r.user_samples, 200u);
    EXPECT_EQ(r.underallocation().value(), 0.0);
    EXPECT_EQ(r.overallocation().value(), 0.0);
    EXPECT_EQ(r.pdrf_tasks, r.drf_tasks);
  }
}

TEST(CmdStats, IndependentOfThreadCount) {
  ExperimentConfig cfg;
  cfg.sim.resources = 4;
  cfg.trials = 300;
  cfg.threads = 1;
  const auto one = cmd_stats(cfg, false);
  cfg.threads = 4;
  const auto four = cmd_stats(cfg, false);
  EXPECT_EQ(to_json(one), to_json(four));
  EXPECT_EQ(one.beyond_one, 0u);
}

TEST(CmdStats, TrialInstancesAreSeedStable) {
  ExperimentConfig cfg;
  cfg.sim.resources = 4;
  const auto a = stats_instance(cfg, 4, 17);
  const auto b = stats_instance(cfg, 4, 17);
  EXPECT_EQ(a.second, b.second);
  EXPECT_EQ(a.first[3].demand, b.first[3].demand);
  EXPECT_NE(stats_instance(cfg, 4, 18).second, a.second);
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_GE(a.second[r], cfg.reserve_low);
    EXPECT_LE(a.second[r], cfg.reserve_high);
  }
}

TEST(Proportion, WilsonInterval) {
  const Proportion p{50, 100};
  const auto [lo, hi] = p.ci95();
  EXPECT_NEAR(lo, 0.4038, 1e-3);
  EXPECT_NEAR(hi, 0.5962, 1e-3);
  EXPECT_EQ(Proportion{}.ci95(), (std::pair<double, double>{0.0, 0.0}));
}
