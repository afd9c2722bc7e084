#pragma once

// Trace file: a "# {json}" header carrying the simulation config, cost
// coefficients and machine parameters, a "# column names" line, then one
// tab-separated record per block. Vectors are comma-separated integers, "-"
// when empty.
//
// Cost CSV: call_kind,m,epoch,user,cost_units

#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "adrf/sim.hpp"

namespace adrf {

inline void to_json(nlohmann::json& j, const ResourceVector& v) {
  j = std::vector<std::uint64_t>(v.begin(), v.end());
}
inline void from_json(const nlohmann::json& j, ResourceVector& v) {
  v = ResourceVector(j.get<std::vector<std::uint64_t>>());
}

inline void to_json(nlohmann::json& j, const AffineCost& c) {
  j = {{"slope", c.slope}, {"intercept", c.intercept}};
}
inline void from_json(const nlohmann::json& j, AffineCost& c) {
  c.slope = j.value("slope", c.slope);
  c.intercept = j.value("intercept", c.intercept);
}

inline void to_json(nlohmann::json& j, const CostModel& c) {
  j = {{"demand", c.demand},           {"claim", c.claim},
       {"update_state", c.update_state}, {"branch_cost", c.branch_cost},
       {"demand_warmup", c.demand_warmup}, {"claim_warmup", c.claim_warmup}};
}
// Missing keys keep their defaults so config files may override a subset.
inline void from_json(const nlohmann::json& j, CostModel& c) {
  if (j.contains("demand")) c.demand = j.at("demand").get<AffineCost>();
  if (j.contains("claim")) c.claim = j.at("claim").get<AffineCost>();
  if (j.contains("update_state")) c.update_state = j.at("update_state").get<AffineCost>();
  c.branch_cost = j.value("branch_cost", c.branch_cost);
  if (j.contains("demand_warmup")) c.demand_warmup = j.at("demand_warmup").get<AffineCost>();
  if (j.contains("claim_warmup")) c.claim_warmup = j.at("claim_warmup").get<AffineCost>();
}

inline void to_json(nlohmann::json& j, const SimConfig& c) {
  j = {{"users", c.users},
       {"resources", c.resources},
       {"epochs", c.epochs},
       {"demand_low", c.demand_low},
       {"demand_high", c.demand_high},
       {"per_user_reserve", c.per_user_reserve},
       {"seed", c.seed},
       {"precision", c.precision}};
}
inline void from_json(const nlohmann::json& j, SimConfig& c) {
  c.users = j.value("users", c.users);
  c.resources = j.value("resources", c.resources);
  c.epochs = j.value("epochs", c.epochs);
  c.demand_low = j.value("demand_low", c.demand_low);
  c.demand_high = j.value("demand_high", c.demand_high);
  c.per_user_reserve = j.value("per_user_reserve", c.per_user_reserve);
  c.seed = j.value("seed", c.seed);
  c.precision = j.value("precision", c.precision);
}

inline void to_json(nlohmann::json& j, const MachineConfig& c) {
  j = {{"resources", c.resources},   {"epoch_span", c.epoch_span},
       {"offset", c.offset},         {"epoch_reserve", c.epoch_reserve},
       {"precision", c.precision},   {"user_capacity", c.user_capacity}};
}
inline void from_json(const nlohmann::json& j, MachineConfig& c) {
  c.resources = j.at("resources").get<std::size_t>();
  c.epoch_span = j.at("epoch_span").get<std::uint64_t>();
  c.offset = j.at("offset").get<std::uint64_t>();
  c.epoch_reserve = j.at("epoch_reserve").get<ResourceVector>();
  c.precision = j.at("precision").get<std::uint64_t>();
  c.user_capacity = j.value("user_capacity", std::size_t{0});
}

class TraceFormatError : public std::runtime_error {
 public:
  TraceFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("trace line " + std::to_string(line) + ": " + what) {}
};

namespace detail {

inline std::string join_amounts(const AmountVector& v) {
  if (v.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(',');
    out += to_string(v[i]);
  }
  return out;
}

inline AmountVector split_amounts(std::string_view text) {
  AmountVector out;
  if (text == "-") return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    out.push_back(parse_amount(text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::uint64_t parse_u64(std::string_view text) { return narrow_u64(parse_amount(text)); }

}  // namespace detail

inline constexpr std::string_view kTraceFormat = "adrf-trace/1";
inline constexpr std::string_view kTraceColumns =
    "block\tepoch\tcall\tuser\tvector\tcost_units\tclamped\ttask_count\tupdate_cost\t"
    "transitioned\tbranch_events\tpool0\tpool1\tk_prime\tdigest";

inline void write_trace(std::ostream& out, const Trace& trace) {
  const nlohmann::json header = {{"format", kTraceFormat},
                                 {"rng", trace.rng},
                                 {"config", trace.config},
                                 {"costs", trace.costs},
                                 {"machine", trace.machine}};
  out << "# " << header.dump() << '\n' << "# " << kTraceColumns << '\n';
  char digest[17];
  for (const auto& rec : trace.records) {
    std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(rec.digest));
    out << rec.tx.block << '\t' << rec.epoch << '\t' << to_string(rec.tx.call) << '\t' << rec.tx.user
        << '\t' << detail::join_amounts(rec.vector) << '\t' << rec.cost_units << '\t'
        << (rec.clamped ? 1 : 0) << '\t' << to_string(rec.task_count) << '\t' << rec.update_cost
        << '\t' << (rec.transitioned ? 1 : 0) << '\t' << rec.branch_events << '\t'
        << detail::join_amounts(rec.pools[0]) << '\t' << detail::join_amounts(rec.pools[1]) << '\t'
        << to_string(rec.k_prime) << '\t' << digest << '\n';
  }
}

inline Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.starts_with("# {")) {
      if (have_header) throw TraceFormatError(lineno, "duplicate header");
      try {
        const auto header = nlohmann::json::parse(line.substr(2));
        if (header.at("format").get<std::string>() != kTraceFormat)
          throw TraceFormatError(lineno, "unsupported format");
        trace.rng = header.at("rng").get<std::string>();
        trace.config = header.at("config").get<SimConfig>();
        trace.costs = header.at("costs").get<CostModel>();
        trace.machine = header.at("machine").get<MachineConfig>();
      } catch (const nlohmann::json::exception& err) {
        throw TraceFormatError(lineno, err.what());
      }
      have_header = true;
      continue;
    }
    if (line.starts_with('#')) continue;
    if (!have_header) throw TraceFormatError(lineno, "record before header");

    const auto f = detail::split(line, '\t');
    if (f.size() != 15) throw TraceFormatError(lineno, "expected 15 fields, got " + std::to_string(f.size()));
    try {
      TraceRecord rec;
      rec.tx.block = detail::parse_u64(f[0]);
      rec.epoch = detail::parse_u64(f[1]);
      rec.tx.call = parse_call_kind(f[2]);
      rec.tx.user = detail::parse_u64(f[3]);
      rec.vector = detail::split_amounts(f[4]);
      if (rec.tx.call == CallKind::demand) {
        std::vector<std::uint64_t> d;
        for (Amount v : rec.vector) d.push_back(narrow_u64(v));
        rec.tx.demand = ResourceVector(std::move(d));
      }
      rec.cost_units = detail::parse_u64(f[5]);
      rec.clamped = f[6] == "1";
      rec.task_count = parse_amount(f[7]);
      rec.update_cost = detail::parse_u64(f[8]);
      rec.transitioned = f[9] == "1";
      rec.branch_events = detail::parse_u64(f[10]);
      rec.pools[0] = detail::split_amounts(f[11]);
      rec.pools[1] = detail::split_amounts(f[12]);
      rec.k_prime = parse_amount(f[13]);
      rec.digest = std::stoull(std::string(f[14]), nullptr, 16);
      trace.records.push_back(std::move(rec));
    } catch (const TraceFormatError&) {
      throw;
    } catch (const std::exception& err) {
      throw TraceFormatError(lineno, err.what());
    }
  }
  if (!have_header) throw TraceFormatError(lineno, "missing header");
  return trace;
}

inline constexpr std::string_view kCostCsvHeader = "call_kind,m,epoch,user,cost_units";

inline void write_cost_csv_header(std::ostream& out) { out << kCostCsvHeader << '\n'; }

inline void write_cost_rows(std::ostream& out, const std::vector<CostRecord>& records) {
  for (const auto& r : records)
    out << to_string(r.kind) << ',' << r.m << ',' << r.epoch << ',' << r.user << ',' << r.cost_units << '\n';
}

inline void write_cost_csv(std::ostream& out, const std::vector<CostRecord>& records) {
  write_cost_csv_header(out);
  write_cost_rows(out, records);
}

inline std::vector<CostRecord> read_cost_csv(std::istream& in) {
  std::vector<CostRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == kCostCsvHeader) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 5)
      throw std::runtime_error("cost csv line " + std::to_string(lineno) + ": expected 5 columns");
    try {
      out.push_back({parse_cost_kind(f[0]), static_cast<std::size_t>(detail::parse_u64(f[1])),
                     detail::parse_u64(f[4]), detail::parse_u64(f[2]), detail::parse_u64(f[3])});
    } catch (const std::exception& err) {
      throw std::runtime_error("cost csv line " + std::to_string(lineno) + ": " + err.what());
    }
  }
  return out;
}

}  // namespace adrf
