#pragma once

// Subcommand implementations behind the adrf CLI: run, crosscheck, stats,
// costfit. Each returns a report with an exit status; file output goes under
// ExperimentConfig::out.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "adrf/alloc.hpp"
#include "adrf/fixtures.hpp"
#include "adrf/reference.hpp"
#include "adrf/regression.hpp"
#include "adrf/sim.hpp"
#include "adrf/trace_io.hpp"

namespace adrf {

enum class ExitCode : int { ok = 0, usage = 1, violation = 2 };

struct ExperimentConfig {
  SimConfig sim;
  std::vector<std::size_t> sweep;  // resource counts; empty means {sim.resources}
  std::uint64_t trials = 1;
  std::filesystem::path out = "out";
  CostModel costs;
  std::uint64_t reserve_low = 100;  // stats: reserve draw range
  std::uint64_t reserve_high = 1000;
  unsigned threads = 0;  // 0: hardware concurrency

  std::vector<std::size_t> resource_counts() const {
    return sweep.empty() ? std::vector<std::size_t>{sim.resources} : sweep;
  }

  void validate() const {
    sim.validate();
    std::set<std::size_t> seen;
    for (std::size_t m : sweep) {
      if (m == 0) throw ConfigError("sweep values must be >= 1");
      if (!seen.insert(m).second) throw ConfigError("sweep value " + std::to_string(m) + " repeated");
    }
    if (trials == 0) throw ConfigError("trials must be >= 1");
    if (reserve_low == 0 || reserve_high < reserve_low) throw ConfigError("invalid reserve range");
  }
};

// "LO:HI"
inline std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("range must look like LO:HI, got '" + text + "'");
  try {
    std::size_t used = 0;
    const std::uint64_t lo = std::stoull(text.substr(0, colon), &used);
    if (used != colon) throw ConfigError("bad range '" + text + "'");
    const std::string hi_text = text.substr(colon + 1);
    const std::uint64_t hi = std::stoull(hi_text, &used);
    if (used != hi_text.size()) throw ConfigError("bad range '" + text + "'");
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw ConfigError("bad range '" + text + "'");
  }
}

inline std::vector<std::size_t> parse_sweep(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw ConfigError("bad sweep value '" + item + "'");
    } catch (const std::logic_error&) {
      throw ConfigError("bad sweep value '" + item + "'");
    }
  }
  return out;
}

inline void apply_json(ExperimentConfig& cfg, const nlohmann::json& j) {
  try {
    cfg.sim = j.get<SimConfig>();
    if (j.contains("demand_range")) {
      const auto& r = j.at("demand_range");
      std::tie(cfg.sim.demand_low, cfg.sim.demand_high) =
          r.is_string() ? parse_range(r.get<std::string>())
                        : std::pair{r.at(0).get<std::uint64_t>(), r.at(1).get<std::uint64_t>()};
    }
    if (j.contains("reserve_range")) {
      const auto& r = j.at("reserve_range");
      std::tie(cfg.reserve_low, cfg.reserve_high) =
          r.is_string() ? parse_range(r.get<std::string>())
                        : std::pair{r.at(0).get<std::uint64_t>(), r.at(1).get<std::uint64_t>()};
    }
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      cfg.sweep = s.is_string() ? parse_sweep(s.get<std::string>()) : s.get<std::vector<std::size_t>>();
    }
    cfg.trials = j.value("trials", cfg.trials);
    if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
    if (j.contains("costs")) cfg.costs = j.at("costs").get<CostModel>();
    cfg.threads = j.value("threads", cfg.threads);
  } catch (const nlohmann::json::exception& err) {
    throw ConfigError(std::string("config: ") + err.what());
  }
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  ExperimentConfig cfg;
  try {
    apply_json(cfg, nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& err) {
    throw ConfigError("config " + path.string() + ": " + err.what());
  }
  return cfg;
}

namespace detail {

inline void ensure_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw ConfigError("cannot create output directory " + dir.string());
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

inline SimConfig trial_config(const ExperimentConfig& cfg, std::size_t m, std::uint64_t trial) {
  SimConfig sim = cfg.sim;
  sim.resources = m;
  sim.seed = cfg.sim.seed + trial;
  return sim;
}

inline unsigned worker_count(unsigned requested, std::uint64_t jobs) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::uint64_t>(n, std::max<std::uint64_t>(jobs, 1)));
}

// Runs fn(i) for i in [0, jobs) on a small pool; callers store results by index.
template <typename Fn>
void parallel_for(std::uint64_t jobs, unsigned threads, Fn fn) {
  std::atomic<std::uint64_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::uint64_t i = next++; i < jobs; i = next++) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
        next = jobs;
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// run

struct RunReport {
  ExitCode status = ExitCode::ok;
  std::vector<std::filesystem::path> traces;
  std::filesystem::path cost_csv;
  std::size_t runs = 0;
  std::size_t calls = 0;
  std::size_t clamp_events = 0;
  std::vector<std::string> violations;
};

inline RunReport cmd_run(const ExperimentConfig& cfg) {
  cfg.validate();
  detail::ensure_out_dir(cfg.out);
  RunReport report;
  report.cost_csv = cfg.out / "costs.csv";
  std::ofstream csv = detail::open_out(report.cost_csv);
  write_cost_csv_header(csv);

  for (std::size_t m : cfg.resource_counts()) {
    for (std::uint64_t t = 0; t < cfg.trials; ++t) {
      const SimConfig sim = detail::trial_config(cfg, m, t);
      SimulationRun run = simulate(sim, cfg.costs);
      const auto path = cfg.out / ("trace_m" + std::to_string(m) + "_s" + std::to_string(sim.seed) + ".trace");
      {
        std::ofstream out = detail::open_out(path);
        write_trace(out, run.trace);
      }
      write_cost_rows(csv, cost_records(run.trace));
      report.traces.push_back(path);
      ++report.runs;
      report.calls += run.trace.records.size();
      report.clamp_events += run.machine.clamp_events();

      const std::string where = path.filename().string();
      if (!run.machine.accounting_holds()) report.violations.push_back(where + ": accounting identity broken");
      if (run.machine.clamp_events() != 0)
        report.violations.push_back(where + ": " + std::to_string(run.machine.clamp_events()) + " clamped claims");
      std::ifstream back(path);
      if (auto r = replay(read_trace(back)); !r)
        report.violations.push_back(where + ": replay diverged at block " +
                                    std::to_string(r.divergence_block.value_or(0)) + " (" + r.reason + ")");
    }
  }
  if (!report.violations.empty()) report.status = ExitCode::violation;
  return report;
}

// ---------------------------------------------------------------------------
// crosscheck

struct CrosscheckReport {
  ExitCode status = ExitCode::ok;
  std::size_t runs = 0;
  std::size_t epochs_checked = 0;
  std::size_t claims = 0;
  std::size_t matches = 0;
  std::size_t rational_compared = 0;
  std::size_t nonzero_rational_deltas = 0;
  std::int64_t max_abs_rational_delta = 0;
  std::map<std::int64_t, std::size_t> rational_deltas;  // fixed - exact rational
  std::optional<std::string> first_mismatch;

  double match_rate() const { return claims ? static_cast<double>(matches) / claims : 1.0; }
};

namespace detail {

struct EpochDemands {
  std::vector<DemandSet::Entry> entries;
  AmountVector pool;
  bool pool_consistent = true;
};

inline void crosscheck_trace(const Trace& trace, const std::string& label, CrosscheckReport& report) {
  std::map<std::uint64_t, EpochDemands> demands;
  std::map<std::uint64_t, std::map<UserId, Amount>> claims;
  for (const auto& rec : trace.records) {
    if (rec.tx.call == CallKind::demand) {
      auto& ed = demands[rec.epoch];
      const AmountVector& pool = rec.pools[(rec.epoch + 1) % 2];
      if (ed.entries.empty()) ed.pool = pool;
      else if (ed.pool != pool) ed.pool_consistent = false;
      ed.entries.push_back({rec.tx.user, rec.tx.demand});
    } else if (rec.tx.call == CallKind::claim) {
      claims[rec.epoch][rec.tx.user] = rec.task_count;
    }
  }

  auto mismatch = [&](const std::string& what) {
    if (!report.first_mismatch) report.first_mismatch = label + ": " + what;
  };

  for (const auto& [epoch, claimed] : claims) {
    auto it = demands.find(epoch - 1);
    if (it == demands.end()) {
      mismatch("claims in epoch " + std::to_string(epoch) + " without recorded demands");
      continue;
    }
    const EpochDemands& ed = it->second;
    if (!ed.pool_consistent) mismatch("demand pool changed during epoch " + std::to_string(epoch - 1));
    std::vector<DemandSet::Entry> entries = ed.entries;
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.user < b.user; });
    const DemandSet set(entries);
    const FixedPointPdrf fixed = fixed_point_pdrf(set, ed.pool, trace.machine.precision);

    std::optional<AllocationResult> exact;
    if (std::all_of(ed.pool.begin(), ed.pool.end(), [](Amount v) { return v != 0; })) {
      std::vector<std::uint64_t> pool;
      for (Amount v : ed.pool) pool.push_back(narrow_u64(v));
      exact = pdrf_allocate(set, ResourceVector(std::move(pool)));
    }

    ++report.epochs_checked;
    for (std::size_t i = 0; i < set.size(); ++i) {
      const UserId user = set[i].user;
      auto c = claimed.find(user);
      if (c == claimed.end()) continue;  // demanded but never claimed
      ++report.claims;
      const std::uint64_t machine_tasks = narrow_u64(c->second);
      if (BigInt(machine_tasks) == fixed.task_counts[i]) {
        ++report.matches;
      } else {
        mismatch("epoch " + std::to_string(epoch) + " user " + std::to_string(user) + ": machine " +
                 std::to_string(machine_tasks) + " tasks, reference " + fixed.task_counts[i].str());
      }
      if (exact) {
        const auto delta = static_cast<std::int64_t>(machine_tasks) -
                           static_cast<std::int64_t>(exact->task_counts[i]);
        ++report.rational_compared;
        ++report.rational_deltas[delta];
        if (delta != 0) ++report.nonzero_rational_deltas;
        report.max_abs_rational_delta = std::max(report.max_abs_rational_delta, delta < 0 ? -delta : delta);
      }
    }
    for (const auto& [user, tasks] : claimed)
      if (std::none_of(set.begin(), set.end(), [&](const auto& e) { return e.user == user; }))
        mismatch("user " + std::to_string(user) + " claimed without a demand");
  }
}

}  // namespace detail

inline CrosscheckReport crosscheck_trace(const Trace& trace, const std::string& label = "trace") {
  CrosscheckReport report;
  report.runs = 1;
  detail::crosscheck_trace(trace, label, report);
  if (report.first_mismatch || report.max_abs_rational_delta > 1) report.status = ExitCode::violation;
  return report;
}

inline nlohmann::json to_json(const CrosscheckReport& r) {
  nlohmann::json deltas = nlohmann::json::object();
  for (const auto& [d, count] : r.rational_deltas) deltas[std::to_string(d)] = count;
  return {{"runs", r.runs},
          {"epochs_checked", r.epochs_checked},
          {"claims", r.claims},
          {"matches", r.matches},
          {"match_rate", r.match_rate()},
          {"rational_compared", r.rational_compared},
          {"nonzero_rational_deltas", r.nonzero_rational_deltas},
          {"max_abs_rational_delta", r.max_abs_rational_delta},
          {"rational_deltas", deltas},
          {"first_mismatch", r.first_mismatch ? nlohmann::json(*r.first_mismatch) : nlohmann::json()}};
}

inline CrosscheckReport cmd_crosscheck(const ExperimentConfig& cfg, bool write_summary = true) {
  cfg.validate();
  CrosscheckReport report;
  for (std::size_t m : cfg.resource_counts()) {
    for (std::uint64_t t = 0; t < cfg.trials; ++t) {
      const SimConfig sim = detail::trial_config(cfg, m, t);
      const Trace trace = run_simulation(sim, cfg.costs);
      detail::crosscheck_trace(trace, "m=" + std::to_string(m) + " seed=" + std::to_string(sim.seed), report);
      ++report.runs;
    }
  }
  if (report.first_mismatch || report.max_abs_rational_delta > 1) report.status = ExitCode::violation;
  if (write_summary) {
    detail::ensure_out_dir(cfg.out);
    detail::open_out(cfg.out / "crosscheck.json") << to_json(report).dump(2) << '\n';
  }
  return report;
}

// ---------------------------------------------------------------------------
// stats

struct Proportion {
  std::uint64_t hits = 0;
  std::uint64_t total = 0;

  double value() const { return total ? static_cast<double>(hits) / total : 0.0; }

  // Wilson score interval at 95%.
  std::pair<double, double> ci95() const {
    if (total == 0) return {0.0, 0.0};
    const double z = 1.959963984540054;
    const double n = static_cast<double>(total);
    const double p = value();
    const double denom = 1 + z * z / n;
    const double centre = (p + z * z / (2 * n)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
  }
};

struct StatsReport {
  ExitCode status = ExitCode::ok;
  std::uint64_t instances = 0;
  std::uint64_t user_samples = 0;
  std::uint64_t exact = 0;
  std::uint64_t underallocated = 0;  // DRF gave exactly one task more
  std::uint64_t beyond_one = 0;      // DRF gave two or more tasks more
  std::uint64_t overallocated = 0;   // PDRF gave more than DRF
  std::uint64_t overallocated_tasks = 0;
  std::uint64_t pdrf_tasks = 0;
  std::uint64_t drf_tasks = 0;

  Proportion underallocation() const { return {underallocated, user_samples}; }
  Proportion overallocation() const { return {overallocated, user_samples}; }
  Proportion overallocated_task_share() const { return {overallocated_tasks, pdrf_tasks}; }
};

// Random instance t of a stats run; seeded from (seed, t) so trials are independent.
inline std::pair<DemandSet, ResourceVector> stats_instance(const ExperimentConfig& cfg, std::size_t m,
                                                           std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.sim.seed), static_cast<std::uint32_t>(cfg.sim.seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  const std::uint64_t derived = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  DemandGenerator demand_gen(derived, cfg.sim.demand_low, cfg.sim.demand_high);
  DemandGenerator reserve_gen(~derived, cfg.reserve_low, cfg.reserve_high);
  auto demands = demand_gen.draw(cfg.sim.users, m);
  ResourceVector reserves = reserve_gen.draw(1, m).front();
  return {DemandSet::from_vectors(std::move(demands)), std::move(reserves)};
}

inline nlohmann::json to_json(const StatsReport& r) {
  auto prop = [](const Proportion& p) {
    const auto [lo, hi] = p.ci95();
    return nlohmann::json{{"count", p.hits}, {"of", p.total}, {"fraction", p.value()}, {"ci95", {lo, hi}}};
  };
  return {{"instances", r.instances},
          {"user_samples", r.user_samples},
          {"exact", r.exact},
          {"beyond_one", r.beyond_one},
          {"underallocation", prop(r.underallocation())},
          {"overallocation", prop(r.overallocation())},
          {"overallocated_task_share", prop(r.overallocated_task_share())},
          {"drf_tasks", r.drf_tasks},
          {"pdrf_tasks", r.pdrf_tasks}};
}

inline StatsReport cmd_stats(const ExperimentConfig& cfg, bool write_summary = true) {
  cfg.validate();
  const std::size_t m = cfg.sim.resources;
  std::vector<DiffStats> results(cfg.trials);
  detail::parallel_for(cfg.trials, detail::worker_count(cfg.threads, cfg.trials), [&](std::uint64_t t) {
    auto [demands, reserves] = stats_instance(cfg, m, t);
    results[t] = compare_pdrf_drf(demands, reserves);
  });

  StatsReport report;
  for (const DiffStats& s : results) {  // ordered reduction
    ++report.instances;
    report.user_samples += s.deltas.size();
    report.exact += s.exact;
    report.underallocated += s.underallocated;
    report.beyond_one += s.beyond_one;
    report.overallocated += s.overallocated;
    report.overallocated_tasks += s.overallocated_tasks;
    report.pdrf_tasks += s.pdrf_tasks;
    report.drf_tasks += s.drf_tasks;
  }
  if (report.beyond_one != 0) report.status = ExitCode::violation;
  if (write_summary) {
    detail::ensure_out_dir(cfg.out);
    detail::open_out(cfg.out / "stats.json") << to_json(report).dump(2) << '\n';
  }
  return report;
}

// ---------------------------------------------------------------------------
// costfit

struct KindFit {
  CostKind kind = CostKind::demand;
  std::size_t points = 0;
  std::size_t excluded_warmup = 0;
  RegressionFit per_call;
  RegressionFit per_m_mean;
  Rational max_abs_residual = 0;
};

struct CostfitReport {
  ExitCode status = ExitCode::ok;
  std::vector<KindFit> fits;
  std::optional<RegressionFit> fixture_fit;  // set when fitting a bundled table
  std::string source;
};

// First two demand calls and the first claim of each user carry one-time
// initialisation cost; in the fixed schedule those are exactly epochs 1-2.
inline bool is_warmup(const CostRecord& r) {
  return (r.kind == CostKind::demand || r.kind == CostKind::claim) && r.epoch <= 2;
}

inline CostfitReport costfit_records(const std::vector<CostRecord>& records) {
  CostfitReport report;
  for (CostKind kind : {CostKind::demand, CostKind::claim, CostKind::update_state}) {
    KindFit kf;
    kf.kind = kind;
    std::vector<RegressionPoint> pts;
    std::map<std::size_t, std::pair<Rational, std::int64_t>> sums;
    for (const auto& r : records) {
      if (r.kind != kind) continue;
      if (is_warmup(r)) {
        ++kf.excluded_warmup;
        continue;
      }
      pts.push_back({static_cast<std::int64_t>(r.m), Rational(BigInt(r.cost_units))});
      auto& [sum, count] = sums[r.m];
      sum += BigInt(r.cost_units);
      ++count;
    }
    if (pts.empty() && kf.excluded_warmup == 0) continue;  // kind absent from the file
    if (sums.size() < 2)
      throw ConfigError(std::string("costfit: ") + to_string(kind) + " has fewer than two distinct m values");
    kf.points = pts.size();
    kf.per_call = fit_linear(pts);
    std::vector<RegressionPoint> means;
    for (const auto& [m, acc] : sums) means.push_back({static_cast<std::int64_t>(m), acc.first / acc.second});
    kf.per_m_mean = fit_linear(means);
    for (const auto& p : pts) {
      Rational res = p.y - kf.per_call.predict(p.x);
      if (res < 0) res = -res;
      kf.max_abs_residual = std::max(kf.max_abs_residual, res);
    }
    report.fits.push_back(std::move(kf));
  }
  if (report.fits.empty()) throw ConfigError("costfit: no cost records");
  return report;
}

inline CostfitReport cmd_costfit(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot read " + csv_path.string());
  std::vector<CostRecord> records;
  try {
    records = read_cost_csv(in);
  } catch (const std::runtime_error& err) {
    throw ConfigError(err.what());
  }
  CostfitReport report = costfit_records(records);
  report.source = csv_path.string();
  return report;
}

inline CostfitReport cmd_costfit_fixture(const std::string& name) {
  const GoldenCase fx = load_fixture(name);
  if (fx.kind != "cost-table") throw ConfigError("fixture '" + name + "' is not a cost table");
  CostfitReport report;
  report.fixture_fit = fit_linear(fx.points);
  report.source = fx.source.string();
  return report;
}

inline nlohmann::json to_json(const RegressionFit& f) {
  return {{"slope", to_double(f.slope)},
          {"intercept", to_double(f.intercept)},
          {"r_squared", to_double(f.r_squared)},
          {"slope_exact", to_string(f.slope)},
          {"intercept_exact", to_string(f.intercept)},
          {"r_squared_exact", to_string(f.r_squared)}};
}

inline nlohmann::json to_json(const CostfitReport& r) {
  nlohmann::json j = {{"source", r.source}};
  if (r.fixture_fit) j["fit"] = to_json(*r.fixture_fit);
  for (const auto& kf : r.fits)
    j["fits"][to_string(kf.kind)] = {{"points", kf.points},
                                     {"excluded_warmup", kf.excluded_warmup},
                                     {"per_call", to_json(kf.per_call)},
                                     {"per_m_mean", to_json(kf.per_m_mean)},
                                     {"max_abs_residual", to_double(kf.max_abs_residual)}};
  return j;
}

}  // namespace adrf
