#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "adrf/experiment.hpp"
#include "adrf/fixtures.hpp"
#include "adrf/machine.hpp"
#include "adrf/reference.hpp"

using namespace adrf;

namespace {

std::vector<std::vector<std::uint64_t>> rows(const std::vector<ResourceVector>& vs) {
  std::vector<std::vector<std::uint64_t>> out;
  for (const auto& v : vs) out.emplace_back(v.begin(), v.end());
  return out;
}

Rational rel_err(const Rational& got, const Rational& want) {
  const Rational d = (got - want) / want;
  return d < 0 ? Rational(-d) : d;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void check_allocation(const GoldenCase& fx) {
  const auto set = fx.demand_set();
  const auto drf = drf_allocate(set, fx.reserves);
  const auto pdrf = pdrf_allocate(set, fx.reserves);
  EXPECT_EQ(drf.task_counts, fx.expected_counts("drf_tasks"));
  EXPECT_EQ(pdrf.task_counts, fx.expected_counts("pdrf_tasks"));
  if (fx.expected.contains("k")) {
    EXPECT_EQ(pdrf.cycles, fx.expected_rational("k"));
  }
  if (fx.expected.contains("allocations")) {
    EXPECT_EQ(rows(pdrf.allocations), fx.expected.at("allocations").get<std::vector<std::vector<std::uint64_t>>>());
  }
  if (fx.expected.contains("remaining")) {
    EXPECT_EQ(pdrf.remaining, ResourceVector(fx.expected_counts("remaining")));
  }
}

void check_machine_epoch(const GoldenCase& fx) {
  const std::uint64_t p = fx.config.value("precision", kDefaultPrecision);
  const std::size_t n = fx.demands.size(), m = fx.reserves.size();
  Machine mc(MachineConfig{m, 2 * n, 1, fx.reserves, p, n});
  for (std::size_t u = 0; u < n; ++u) mc.register_user(u);
  std::uint64_t block = 1;
  for (std::size_t u = 0; u < n; ++u) mc.demand(u, fx.demands[u], block++);
  block = 1 + 2 * n;

  const auto ref = fixed_point_pdrf(fx.demand_set(), to_amounts(fx.reserves), p);
  auto big_list = [](const std::vector<BigInt>& v) {
    std::vector<std::uint64_t> out;
    for (const auto& x : v) out.push_back(to_u64(x));
    return out;
  };
  EXPECT_EQ(big_list(ref.recip_ds), fx.expected_counts("recip_ds"));
  EXPECT_EQ(to_u64(ref.min_recip_ds), fx.expected.at("min_recip_ds").get<std::uint64_t>());
  EXPECT_EQ(big_list(ref.scaled_demand_sums), fx.expected_counts("scaled_demand_sums"));
  EXPECT_EQ(to_u64(ref.k_prime), fx.expected.at("k_prime").get<std::uint64_t>());
  EXPECT_EQ(big_list(ref.ratios), fx.expected_counts("ratios"));
  EXPECT_EQ(big_list(ref.task_counts), fx.expected_counts("task_counts"));

  const auto shares = fx.expected.at("shares").get<std::vector<std::vector<std::uint64_t>>>();
  for (std::size_t u = 0; u < n; ++u) {
    EXPECT_EQ(mc.recip_ds(u, 0), Amount(fx.expected_counts("recip_ds")[u]));
    const auto receipt = mc.claim(u, block++);
    EXPECT_EQ(narrow_u64(receipt.task_count), fx.expected_counts("task_counts")[u]);
    std::vector<std::uint64_t> share;
    for (Amount a : receipt.share) share.push_back(narrow_u64(a));
    EXPECT_EQ(share, shares[u]);
  }
  EXPECT_EQ(narrow_u64(mc.k_prime()), fx.expected.at("k_prime").get<std::uint64_t>());
  // the exact rational allocator agrees on this instance
  EXPECT_EQ(pdrf_allocate(fx.demand_set(), fx.reserves).task_counts, fx.expected_counts("task_counts"));
}

void check_cost_table(const GoldenCase& fx) {
  const auto fit = fit_linear(fx.points);
  EXPECT_LE(rel_err(fit.slope, fx.expected_rational("slope")), fx.expected_rational("slope_tolerance"));
  if (fx.expected.contains("intercept_tolerance")) {
    EXPECT_LE(rel_err(fit.intercept, fx.expected_rational("intercept")), fx.expected_rational("intercept_tolerance"));
  }
  if (fx.expected.contains("min_r_squared")) {
    EXPECT_GE(fit.r_squared, fx.expected_rational("min_r_squared"));
  }
  const auto sweep = fx.config.at("sweep").get<std::vector<std::int64_t>>();
  ASSERT_EQ(sweep.size(), fx.points.size());
  for (std::size_t i = 0; i < sweep.size(); ++i) EXPECT_EQ(fx.points[i].x, sweep[i]);
}

void check_trace(const GoldenCase& fx) {
  ExperimentConfig cfg;
  apply_json(cfg, fx.config);
  std::ostringstream now;
  write_trace(now, run_simulation(cfg.sim));
  const auto path = fx.source.parent_path() / fx.expected.at("trace_file").get<std::string>();
  EXPECT_EQ(now.str(), slurp(path)) << "simulator output drifted from " << path;
  std::ifstream in(path);
  EXPECT_TRUE(replay(read_trace(in)));
}

}  // namespace

TEST(Fixtures, EveryBundledFixtureRevalidates) {
  const auto names = list_fixtures();
  ASSERT_GE(names.size(), 8u);
  for (const auto& name : names) {
    SCOPED_TRACE(name);
    const GoldenCase fx = load_fixture(name);
    if (fx.kind == "allocation") check_allocation(fx);
    else if (fx.kind == "machine-epoch") check_machine_epoch(fx);
    else if (fx.kind == "cost-table") check_cost_table(fx);
    else if (fx.kind == "trace") check_trace(fx);
    else ADD_FAILURE() << "unhandled kind " << fx.kind;
  }
}

TEST(Fixtures, ClaimTableHasEightPoints) {
  const auto fx = load_fixture("paper-table2-claim");
  ASSERT_EQ(fx.points.size(), 8u);
  EXPECT_EQ(fx.points.front().x, 2);
  EXPECT_EQ(fx.points.front().y, Rational(66665));
  EXPECT_EQ(fx.points.back().x, 100);
  EXPECT_EQ(fx.points.back().y, Rational(1549405));
}

TEST(Fixtures, DemandTableKeepsDecimalMeans) {
  const auto fx = load_fixture("paper-table1-demand");
  EXPECT_EQ(fx.points.front().y, make_rational(73092667, 1000));
}

TEST(Fixtures, UnknownNameIsAnError) {
  EXPECT_THROW(load_fixture("no-such-fixture"), FixtureError);
}

TEST(Fixtures, MalformedFilesAreErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "adrf_fixture_test";
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream(dir / (name + ".json")) << body;
  };
  write("broken", "{ not json");
  write("no-provenance", R"({"name":"no-provenance","kind":"allocation","demands":[[1]],"reserves":[3],
                             "expected":{"drf_tasks":[3]}})");
  write("bad-kind", R"({"name":"bad-kind","kind":"poem","expected":{}})");
  write("wrong-name", R"({"name":"other","kind":"allocation","demands":[[1]],"reserves":[3],"expected":{}})");
  write("ragged", R"({"name":"ragged","kind":"allocation","demands":[[1,2]],"reserves":[3],"expected":{}})");
  for (const char* name : {"broken", "no-provenance", "bad-kind", "wrong-name", "ragged"})
    EXPECT_THROW(load_fixture(name, dir), FixtureError) << name;
  std::filesystem::remove_all(dir);
}
