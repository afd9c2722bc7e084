// adrf: run simulations, cross-check machine claims against reference
// allocators, collect PDRF-vs-DRF statistics and fit cost regressions.
//
// Exit codes: 0 success, 1 usage/config error, 2 invariant violation.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "adrf/experiment.hpp"

namespace {

struct Flags {
  std::optional<std::string> config;
  std::optional<std::size_t> users;
  std::optional<std::size_t> resources;
  std::optional<std::uint64_t> epochs;
  std::optional<std::string> demand_range;
  std::optional<std::string> reserve_range;
  std::optional<std::uint64_t> per_user_reserve;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<std::string> sweep;
  std::optional<std::string> out;
  std::optional<std::uint64_t> branch_cost;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file; flags override its values");
  cmd->add_option("--users", f.users, "number of users n");
  cmd->add_option("--resources", f.resources, "number of resource types m");
  cmd->add_option("--epochs", f.epochs, "epochs per simulation");
  cmd->add_option("--demand-range", f.demand_range, "inclusive demand bounds LO:HI");
  cmd->add_option("--per-user-reserve", f.per_user_reserve, "replenishment per user per epoch");
  cmd->add_option("--seed", f.seed, "base seed; trial t uses seed+t");
  cmd->add_option("--trials", f.trials, "trials per sweep value (instances for stats)");
  cmd->add_option("--sweep", f.sweep, "comma-separated resource counts m1,m2,...");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--reserve-range", f.reserve_range, "stats: reserve bounds LO:HI");
  cmd->add_option("--branch-cost", f.branch_cost, "cost units per ds' update in demand");
  cmd->add_option("--threads", f.threads, "worker threads for stats (0 = all cores)");
}

adrf::ExperimentConfig resolve(const Flags& f) {
  adrf::ExperimentConfig cfg = f.config ? adrf::load_experiment_config(*f.config) : adrf::ExperimentConfig{};
  if (f.users) cfg.sim.users = *f.users;
  if (f.resources) cfg.sim.resources = *f.resources;
  if (f.epochs) cfg.sim.epochs = *f.epochs;
  if (f.demand_range) std::tie(cfg.sim.demand_low, cfg.sim.demand_high) = adrf::parse_range(*f.demand_range);
  if (f.reserve_range) std::tie(cfg.reserve_low, cfg.reserve_high) = adrf::parse_range(*f.reserve_range);
  if (f.per_user_reserve) cfg.sim.per_user_reserve = *f.per_user_reserve;
  if (f.seed) cfg.sim.seed = *f.seed;
  if (f.trials) cfg.trials = *f.trials;
  if (f.sweep) cfg.sweep = adrf::parse_sweep(*f.sweep);
  if (f.out) cfg.out = *f.out;
  if (f.branch_cost) cfg.costs.branch_cost = *f.branch_cost;
  if (f.threads) cfg.threads = *f.threads;
  cfg.validate();
  return cfg;
}

void print_fit(const char* label, const adrf::RegressionFit& fit) {
  std::printf("  %-12s slope %.3f  intercept %.3f  R^2 %.9f\n", label, adrf::to_double(fit.slope),
              adrf::to_double(fit.intercept), adrf::to_double(fit.r_squared));
}

int run(const Flags& f) {
  const auto report = adrf::cmd_run(resolve(f));
  std::printf("runs %zu  calls %zu  traces %zu  clamp events %zu\n", report.runs, report.calls,
              report.traces.size(), report.clamp_events);
  std::printf("cost csv: %s\n", report.cost_csv.string().c_str());
  for (const auto& v : report.violations) std::fprintf(stderr, "violation: %s\n", v.c_str());
  return static_cast<int>(report.status);
}

int crosscheck(const Flags& f) {
  const auto cfg = resolve(f);
  const auto report = adrf::cmd_crosscheck(cfg);
  std::printf("runs %zu  epochs %zu  claims %zu  matches %zu  match rate %.6f\n", report.runs,
              report.epochs_checked, report.claims, report.matches, report.match_rate());
  std::printf("fixed vs exact-rational: %zu of %zu differ, max |delta| %lld\n", report.nonzero_rational_deltas,
              report.rational_compared, static_cast<long long>(report.max_abs_rational_delta));
  for (const auto& [delta, count] : report.rational_deltas)
    std::printf("  delta %+lld: %zu\n", static_cast<long long>(delta), count);
  if (report.first_mismatch) std::fprintf(stderr, "first mismatch: %s\n", report.first_mismatch->c_str());
  std::printf("summary: %s\n", (cfg.out / "crosscheck.json").string().c_str());
  return static_cast<int>(report.status);
}

int stats(const Flags& f) {
  const auto cfg = resolve(f);
  const auto report = adrf::cmd_stats(cfg);
  auto line = [](const char* label, const adrf::Proportion& p) {
    const auto [lo, hi] = p.ci95();
    std::printf("%-26s %.4f  (95%% CI %.4f..%.4f, %llu of %llu)\n", label, p.value(), lo, hi,
                static_cast<unsigned long long>(p.hits), static_cast<unsigned long long>(p.total));
  };
  std::printf("instances %llu  users %llu\n", static_cast<unsigned long long>(report.instances),
              static_cast<unsigned long long>(report.user_samples));
  line("underallocated by 1", report.underallocation());
  line("overallocated", report.overallocation());
  line("overallocated task share", report.overallocated_task_share());
  std::printf("underallocated by >1       %llu\n", static_cast<unsigned long long>(report.beyond_one));
  std::printf("summary: %s\n", (cfg.out / "stats.json").string().c_str());
  return static_cast<int>(report.status);
}

int costfit(const std::optional<std::string>& csv, const std::optional<std::string>& fixture,
            const std::optional<std::string>& out) {
  if (csv.has_value() == fixture.has_value()) throw adrf::ConfigError("costfit takes a CSV path or --fixture NAME");
  const auto report = fixture ? adrf::cmd_costfit_fixture(*fixture) : adrf::cmd_costfit(*csv);
  std::printf("source: %s\n", report.source.c_str());
  if (report.fixture_fit) print_fit("table", *report.fixture_fit);
  for (const auto& kf : report.fits) {
    std::printf("%s: %zu points (%zu warm-up excluded), max |residual| %.3f\n", adrf::to_string(kf.kind),
                kf.points, kf.excluded_warmup, adrf::to_double(kf.max_abs_residual));
    print_fit("per call", kf.per_call);
    print_fit("per-m mean", kf.per_m_mean);
  }
  if (out) {
    adrf::detail::ensure_out_dir(*out);
    adrf::detail::open_out(std::filesystem::path(*out) / "costfit.json") << adrf::to_json(report).dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Autonomous DRF allocation engine and simulated-chain harness"};
  app.require_subcommand(1);

  Flags run_flags, check_flags, stats_flags;
  auto* run_cmd = app.add_subcommand("run", "simulate and write traces plus a cost CSV");
  add_common(run_cmd, run_flags);
  auto* check_cmd = app.add_subcommand("crosscheck", "compare machine claims with reference PDRF");
  add_common(check_cmd, check_flags);
  auto* stats_cmd = app.add_subcommand("stats", "Monte-Carlo PDRF vs DRF statistics");
  add_common(stats_cmd, stats_flags);

  std::optional<std::string> csv_path, fixture, costfit_out;
  auto* fit_cmd = app.add_subcommand("costfit", "fit cost = slope*m + intercept per call kind");
  fit_cmd->add_option("csv", csv_path, "cost CSV written by `adrf run`");
  fit_cmd->add_option("--fixture", fixture, "bundled cost table, e.g. paper-table2-claim");
  fit_cmd->add_option("--out", costfit_out, "directory for costfit.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : static_cast<int>(adrf::ExitCode::usage);
  }

  try {
    if (*run_cmd) return run(run_flags);
    if (*check_cmd) return crosscheck(check_flags);
    if (*stats_cmd) return stats(stats_flags);
    if (*fit_cmd) return costfit(csv_path, fixture, costfit_out);
  } catch (const adrf::ConfigError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return static_cast<int>(adrf::ExitCode::usage);
  } catch (const adrf::FixtureError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return static_cast<int>(adrf::ExitCode::usage);
  } catch (const std::exception& err) {
    std::fprintf(stderr, "invariant violation: %s\n", err.what());
    return static_cast<int>(adrf::ExitCode::violation);
  }
  return static_cast<int>(adrf::ExitCode::usage);
}
