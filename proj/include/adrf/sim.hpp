#pragma once

// Deterministic simulated chain: one machine call per block, epoch span 2n.
// Epoch 1 is n registrations followed by n demands; every later epoch is n
// claims followed by n demands (fresh vectors each epoch).

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "adrf/cost_model.hpp"
#include "adrf/machine.hpp"
#include "adrf/resource_vector.hpp"

namespace adrf {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(std::uint64_t block, const std::string& what)
      : std::runtime_error("block " + std::to_string(block) + ": " + what), block_(block) {}
  std::uint64_t block() const noexcept { return block_; }

 private:
  std::uint64_t block_;
};

struct SimConfig {
  std::size_t users = 10;
  std::size_t resources = 2;
  std::uint64_t epochs = 11;  // 10 demand/claim rounds
  std::uint64_t demand_low = 1;
  std::uint64_t demand_high = 10;
  std::uint64_t per_user_reserve = 150;
  std::uint64_t seed = 0;
  std::uint64_t precision = kDefaultPrecision;

  void validate() const {
    if (users == 0) throw ConfigError("users must be >= 1");
    if (resources == 0) throw ConfigError("resources must be >= 1");
    if (epochs == 0) throw ConfigError("epochs must be >= 1");
    if (demand_low == 0) throw ConfigError("demand range lower bound must be >= 1");
    if (demand_high < demand_low)
      throw ConfigError("demand range upper bound " + std::to_string(demand_high) +
                        " is below lower bound " + std::to_string(demand_low));
    if (precision == 0) throw ConfigError("precision must be >= 1");
  }

  bool operator==(const SimConfig&) const = default;
};

inline constexpr std::uint64_t kDeploymentBlock = 1;

inline MachineConfig machine_config_for(const SimConfig& config) {
  return MachineConfig{
      .resources = config.resources,
      .epoch_span = 2 * config.users,
      .offset = kDeploymentBlock,
      .epoch_reserve = ResourceVector(config.resources, checked_mul<std::uint64_t>(config.users, config.per_user_reserve)),
      .precision = config.precision,
      .user_capacity = config.users,
  };
}

// Seeded mt19937_64 with rejection sampling onto [low, high]; both pieces are
// fully specified, so draws are identical across standard libraries.
class DemandGenerator {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/rejection-v1";

  DemandGenerator(std::uint64_t seed, std::uint64_t low, std::uint64_t high)
      : engine_(seed), low_(low), high_(high) {
    if (low > high) throw ConfigError("generator bounds: low > high");
  }

  std::uint64_t draw() {
    const std::uint64_t span = high_ - low_;
    if (span == std::numeric_limits<std::uint64_t>::max()) return engine_();
    const std::uint64_t range = span + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / range * range;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return low_ + x % range;
  }

  std::vector<ResourceVector> draw(std::size_t n, std::size_t m) {
    std::vector<ResourceVector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      ResourceVector v(m);
      for (std::size_t r = 0; r < m; ++r) v[r] = draw();
      out.push_back(std::move(v));
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t low_;
  std::uint64_t high_;
};

inline std::vector<ResourceVector> gen_demands(std::size_t n, std::size_t m, std::uint64_t low,
                                               std::uint64_t high, std::uint64_t seed) {
  return DemandGenerator(seed, low, high).draw(n, m);
}

enum class CallKind { register_user, demand, claim, noop };

inline const char* to_string(CallKind kind) {
  switch (kind) {
    case CallKind::register_user: return "register";
    case CallKind::demand: return "demand";
    case CallKind::claim: return "claim";
    case CallKind::noop: return "noop";
  }
  return "unknown";
}

inline CallKind parse_call_kind(std::string_view text) {
  if (text == "register") return CallKind::register_user;
  if (text == "demand") return CallKind::demand;
  if (text == "claim") return CallKind::claim;
  if (text == "noop") return CallKind::noop;
  throw std::invalid_argument("unknown call '" + std::string(text) + "'");
}

struct BlockTx {
  std::uint64_t block = 0;
  CallKind call = CallKind::noop;
  UserId user = 0;
  ResourceVector demand;  // demand calls only
  bool operator==(const BlockTx&) const = default;
};

inline std::vector<BlockTx> build_schedule(const SimConfig& config) {
  config.validate();
  DemandGenerator gen(config.seed, config.demand_low, config.demand_high);
  std::vector<BlockTx> schedule;
  schedule.reserve(2 * config.users * config.epochs);
  std::uint64_t block = kDeploymentBlock;
  for (std::uint64_t e = 1; e <= config.epochs; ++e) {
    for (std::size_t u = 0; u < config.users; ++u)
      schedule.push_back({block++, e == 1 ? CallKind::register_user : CallKind::claim, u, {}});
    auto demands = gen.draw(config.users, config.resources);
    for (std::size_t u = 0; u < config.users; ++u)
      schedule.push_back({block++, CallKind::demand, u, std::move(demands[u])});
  }
  return schedule;
}

struct TraceRecord {
  BlockTx tx;
  std::uint64_t epoch = 0;
  AmountVector vector;  // demand echo or claimed share
  Amount task_count = 0;
  std::uint64_t cost_units = 0;   // the public call
  std::uint64_t update_cost = 0;  // nonzero only when the call crossed an epoch
  bool transitioned = false;
  bool clamped = false;
  std::size_t branch_events = 0;
  std::array<AmountVector, 2> pools;
  Amount k_prime = 0;
  std::uint64_t digest = 0;

  bool operator==(const TraceRecord&) const = default;
};

struct Trace {
  std::string rng = DemandGenerator::kAlgorithm;
  SimConfig config;
  CostModel costs;
  MachineConfig machine;
  std::vector<TraceRecord> records;

  bool operator==(const Trace&) const = default;
};

namespace detail {

struct StepOutcome {
  std::uint64_t epoch = 0;
  AmountVector vector;
  Amount task_count = 0;
  bool transitioned = false;
  bool clamped = false;
  std::size_t branch_events = 0;
};

inline StepOutcome apply(Machine& machine, const BlockTx& tx) {
  StepOutcome out;
  switch (tx.call) {
    case CallKind::register_user:
      machine.register_user(tx.user);
      out.epoch = machine.epoch_at(tx.block);
      break;
    case CallKind::demand: {
      const std::uint64_t before = machine.epoch();
      auto receipt = machine.demand(tx.user, tx.demand, tx.block);
      out.epoch = receipt.epoch;
      out.vector = to_amounts(tx.demand);
      out.branch_events = receipt.branch_events;
      out.transitioned = machine.epoch() != before;
      break;
    }
    case CallKind::claim: {
      const std::uint64_t before = machine.epoch();
      auto receipt = machine.claim(tx.user, tx.block);
      out.epoch = receipt.epoch;
      out.vector = std::move(receipt.share);
      out.task_count = receipt.task_count;
      out.clamped = receipt.clamped;
      out.transitioned = machine.epoch() != before;
      break;
    }
    case CallKind::noop:
      out.epoch = machine.epoch_at(tx.block);
      break;
  }
  return out;
}

inline void fill_state(TraceRecord& rec, const Machine& machine) {
  const MachineSnapshot snap = machine.snapshot();
  rec.pools = snap.reserves;
  rec.k_prime = snap.k_prime;
  rec.digest = snap.digest();
}

}  // namespace detail

struct SimulationRun {
  Trace trace;
  Machine machine;
};

inline SimulationRun simulate(const SimConfig& config, const CostModel& costs = {}) {
  config.validate();
  SimulationRun run{Trace{DemandGenerator::kAlgorithm, config, costs, machine_config_for(config), {}},
                    Machine(machine_config_for(config))};
  const std::size_t m = config.resources;
  std::vector<std::uint64_t> demand_calls(config.users, 0);
  std::vector<std::uint64_t> claim_calls(config.users, 0);

  for (BlockTx& tx : build_schedule(config)) {
    TraceRecord rec;
    detail::StepOutcome step;
    try {
      step = detail::apply(run.machine, tx);
    } catch (const std::exception& err) {
      throw SimulationError(tx.block, err.what());
    }
    rec.epoch = step.epoch;
    rec.vector = std::move(step.vector);
    rec.task_count = step.task_count;
    rec.transitioned = step.transitioned;
    rec.clamped = step.clamped;
    rec.branch_events = step.branch_events;

    if (tx.call == CallKind::demand) {
      rec.cost_units = cost_of_call(CostKind::demand, m, step.branch_events, costs);
      if (++demand_calls[tx.user] <= 2) rec.cost_units += costs.demand_warmup.at(m);
    } else if (tx.call == CallKind::claim) {
      rec.cost_units = cost_of_call(CostKind::claim, m, 0, costs);
      if (++claim_calls[tx.user] == 1) rec.cost_units += costs.claim_warmup.at(m);
    }
    if (step.transitioned) rec.update_cost = cost_of_call(CostKind::update_state, m, 0, costs);

    detail::fill_state(rec, run.machine);
    rec.tx = std::move(tx);
    run.trace.records.push_back(std::move(rec));
  }
  return run;
}

inline Trace run_simulation(const SimConfig& config, const CostModel& costs = {}) {
  return simulate(config, costs).trace;
}

// Cost records in block order: the update_state record (if any) precedes the
// public call that triggered it.
inline std::vector<CostRecord> cost_records(const Trace& trace) {
  std::vector<CostRecord> out;
  const std::size_t m = trace.config.resources;
  for (const auto& rec : trace.records) {
    if (rec.transitioned)
      out.push_back({CostKind::update_state, m, rec.update_cost, rec.epoch, rec.tx.user});
    if (rec.tx.call == CallKind::demand)
      out.push_back({CostKind::demand, m, rec.cost_units, rec.epoch, rec.tx.user});
    else if (rec.tx.call == CallKind::claim)
      out.push_back({CostKind::claim, m, rec.cost_units, rec.epoch, rec.tx.user});
  }
  return out;
}

struct ReplayResult {
  bool ok = true;
  std::optional<std::uint64_t> divergence_block;
  std::string reason;
  explicit operator bool() const noexcept { return ok; }
};

// Re-executes the recorded calls from a fresh machine and compares every
// state-bearing field. Costs are annotations and are not compared.
inline ReplayResult replay(const Trace& trace) {
  auto diverged = [](std::uint64_t block, std::string why) {
    return ReplayResult{false, block, std::move(why)};
  };
  std::optional<Machine> machine;
  try {
    machine.emplace(trace.machine);
  } catch (const std::exception& err) {
    return diverged(0, err.what());
  }
  for (const auto& rec : trace.records) {
    detail::StepOutcome step;
    try {
      step = detail::apply(*machine, rec.tx);
    } catch (const std::exception& err) {
      return diverged(rec.tx.block, err.what());
    }
    TraceRecord expect;
    detail::fill_state(expect, *machine);
    if (step.epoch != rec.epoch) return diverged(rec.tx.block, "epoch");
    if (step.vector != rec.vector) return diverged(rec.tx.block, "vector");
    if (step.task_count != rec.task_count) return diverged(rec.tx.block, "task count");
    if (step.clamped != rec.clamped) return diverged(rec.tx.block, "clamp flag");
    if (step.transitioned != rec.transitioned) return diverged(rec.tx.block, "epoch transition");
    if (expect.pools != rec.pools) return diverged(rec.tx.block, "reserve pools");
    if (expect.k_prime != rec.k_prime) return diverged(rec.tx.block, "k'");
    if (expect.digest != rec.digest) return diverged(rec.tx.block, "state digest");
  }
  return {};
}

}  // namespace adrf
