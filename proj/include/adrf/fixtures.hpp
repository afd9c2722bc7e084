#pragma once

// Golden cases stored as hand-auditable JSON under fixtures/. A fixture uses
// the experiment config keys plus "demands", "reserves", "points" and an
// "expected" block; "provenance" says where each expected value comes from.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "adrf/alloc.hpp"
#include "adrf/regression.hpp"
#include "adrf/trace_io.hpp"

#ifndef ADRF_DEFAULT_FIXTURE_DIR
#define ADRF_DEFAULT_FIXTURE_DIR "fixtures"
#endif

namespace adrf {

class FixtureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GoldenCase {
  std::string name;
  std::string kind;  // allocation | machine-epoch | cost-table | trace
  nlohmann::json config = nlohmann::json::object();
  std::vector<ResourceVector> demands;
  ResourceVector reserves;
  std::vector<RegressionPoint> points;
  nlohmann::json expected = nlohmann::json::object();
  nlohmann::json provenance = nlohmann::json::object();
  std::filesystem::path source;

  DemandSet demand_set() const { return DemandSet::from_vectors(demands); }

  std::vector<std::uint64_t> expected_counts(const std::string& key) const {
    return expected.at(key).get<std::vector<std::uint64_t>>();
  }
  Rational expected_rational(const std::string& key) const {
    const auto& v = expected.at(key);
    return v.is_string() ? parse_rational(v.get<std::string>()) : Rational(v.get<std::int64_t>());
  }
};

inline std::filesystem::path default_fixture_dir() {
  if (const char* env = std::getenv("ADRF_FIXTURE_DIR"); env && *env) return env;
  return ADRF_DEFAULT_FIXTURE_DIR;
}

inline GoldenCase parse_fixture(const nlohmann::json& j, const std::string& name) {
  static const std::set<std::string> kinds = {"allocation", "machine-epoch", "cost-table", "trace"};
  GoldenCase fx;
  fx.name = j.at("name").get<std::string>();
  if (fx.name != name) throw FixtureError("fixture '" + name + "' declares name '" + fx.name + "'");
  fx.kind = j.at("kind").get<std::string>();
  if (!kinds.contains(fx.kind)) throw FixtureError("fixture '" + name + "': unknown kind '" + fx.kind + "'");
  fx.config = j.value("config", nlohmann::json::object());
  fx.expected = j.at("expected");
  fx.provenance = j.value("provenance", nlohmann::json::object());
  for (auto it = fx.expected.begin(); it != fx.expected.end(); ++it)
    if (!fx.provenance.contains(it.key()))
      throw FixtureError("fixture '" + name + "': expected '" + it.key() + "' has no provenance");

  if (j.contains("demands"))
    for (const auto& d : j.at("demands")) fx.demands.push_back(d.get<ResourceVector>());
  if (j.contains("reserves")) fx.reserves = j.at("reserves").get<ResourceVector>();
  for (const auto& d : fx.demands)
    if (d.size() != fx.reserves.size())
      throw FixtureError("fixture '" + name + "': demand length differs from reserves");
  if (j.contains("points")) {
    for (const auto& p : j.at("points")) {
      const auto& y = p.at(1);
      fx.points.push_back({p.at(0).get<std::int64_t>(),
                           y.is_string() ? parse_rational(y.get<std::string>())
                                         : Rational(y.get<std::int64_t>())});
    }
  }
  if ((fx.kind == "allocation" || fx.kind == "machine-epoch") && fx.demands.empty())
    throw FixtureError("fixture '" + name + "': no demands");
  if (fx.kind == "cost-table" && fx.points.size() < 2)
    throw FixtureError("fixture '" + name + "': cost table needs at least two points");
  return fx;
}

inline GoldenCase load_fixture(const std::string& name,
                               const std::filesystem::path& dir = default_fixture_dir()) {
  const auto path = dir / (name + ".json");
  std::ifstream in(path);
  if (!in) throw FixtureError("unknown fixture '" + name + "' (looked in " + dir.string() + ")");
  try {
    GoldenCase fx = parse_fixture(nlohmann::json::parse(in), name);
    fx.source = path;
    return fx;
  } catch (const FixtureError&) {
    throw;
  } catch (const std::exception& err) {
    throw FixtureError("malformed fixture '" + name + "': " + err.what());
  }
}

inline std::vector<std::string> list_fixtures(const std::filesystem::path& dir = default_fixture_dir()) {
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace adrf
