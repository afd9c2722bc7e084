#pragma once

// Epoch-based autonomous DRF machine. Users demand in epoch e against the pool
// of parity (e+1) mod 2 and claim in epoch e+1 from the pool of parity
// (e+1) mod 2 again, which is now the claim pool. All quotients are floored
// integer divisions scaled by a precision factor p.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "adrf/fixed_point.hpp"
#include "adrf/resource_vector.hpp"

namespace adrf {

struct MachineConfig {
  std::size_t resources = 1;
  std::uint64_t epoch_span = 1;
  std::uint64_t offset = 0;  // deployment block
  ResourceVector epoch_reserve = ResourceVector(1);
  std::uint64_t precision = kDefaultPrecision;
  std::size_t user_capacity = 0;  // expected users, only used for warning()

  void validate() const;

  // Non-empty when the epoch span leaves no room for one demand and one claim
  // per expected user.
  std::optional<std::string> warning() const {
    if (user_capacity != 0 && epoch_span < 2 * user_capacity)
      return "epoch span " + std::to_string(epoch_span) + " is shorter than 2 x " +
             std::to_string(user_capacity) + " users";
    return std::nullopt;
  }

  bool operator==(const MachineConfig&) const = default;
};

enum class MachineErrc {
  invalid_config,
  block_before_offset,
  duplicate_user,
  unregistered_user,
  dimension_mismatch,
  zero_demand,
  zero_reserve,
  demand_exceeds_precision,
  double_demand,
  double_claim,
  no_prior_demand,
};

inline const char* to_string(MachineErrc code) {
  switch (code) {
    case MachineErrc::invalid_config: return "invalid_config";
    case MachineErrc::block_before_offset: return "block_before_offset";
    case MachineErrc::duplicate_user: return "duplicate_user";
    case MachineErrc::unregistered_user: return "unregistered_user";
    case MachineErrc::dimension_mismatch: return "dimension_mismatch";
    case MachineErrc::zero_demand: return "zero_demand";
    case MachineErrc::zero_reserve: return "zero_reserve";
    case MachineErrc::demand_exceeds_precision: return "demand_exceeds_precision";
    case MachineErrc::double_demand: return "double_demand";
    case MachineErrc::double_claim: return "double_claim";
    case MachineErrc::no_prior_demand: return "no_prior_demand";
  }
  return "unknown";
}

class MachineError : public std::runtime_error {
 public:
  MachineError(MachineErrc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  MachineErrc code() const noexcept { return code_; }

 private:
  MachineErrc code_;
};

inline void MachineConfig::validate() const {
  if (resources == 0) throw MachineError(MachineErrc::invalid_config, "resource count is zero");
  if (epoch_span == 0) throw MachineError(MachineErrc::invalid_config, "epoch span is zero");
  if (precision == 0) throw MachineError(MachineErrc::invalid_config, "precision is zero");
  if (epoch_reserve.size() != resources)
    throw MachineError(MachineErrc::invalid_config, "epoch reserve length differs from resource count");
}

struct DemandReceipt {
  UserId user = 0;
  std::uint64_t epoch = 0;
  Amount recip_ds = 0;
  std::size_t branch_events = 0;  // times the running ds' minimum moved
};

struct ClaimReceipt {
  UserId user = 0;
  std::uint64_t epoch = 0;
  Amount task_count = 0;
  AmountVector share;
  bool clamped = false;
};

// Read-only export taken at a call boundary.
struct MachineSnapshot {
  std::uint64_t epoch = 0;
  std::array<AmountVector, 2> reserves;
  Amount k_prime = 0;
  std::vector<std::pair<UserId, AmountVector>> balances;

  bool operator==(const MachineSnapshot&) const = default;

  // FNV-1a over the canonical field order; stable across platforms.
  std::uint64_t digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](Amount v) {
      for (int byte = 0; byte < 16; ++byte) {
        h ^= static_cast<std::uint8_t>(v >> (8 * byte));
        h *= 0x100000001b3ULL;
      }
    };
    mix(epoch);
    for (const auto& pool : reserves)
      for (Amount v : pool) mix(v);
    mix(k_prime);
    for (const auto& [user, balance] : balances) {
      mix(user);
      for (Amount v : balance) mix(v);
    }
    return h;
  }
};

class Machine {
 public:
  explicit Machine(MachineConfig config) : config_(std::move(config)) {
    config_.validate();
    const std::size_t m = config_.resources;
    for (int s = 0; s < 2; ++s) {
      reserves_[s].assign(m, 0);
      scaled_demand_sums_[s].assign(m, 0);
    }
    // Epoch 1 demands target parity (1+1) mod 2 = 0.
    reserves_[0] = to_amounts(config_.epoch_reserve);
    injected_ = reserves_[0];
  }

  const MachineConfig& config() const noexcept { return config_; }
  std::uint64_t epoch() const noexcept { return epoch_; }
  std::uint64_t reset_epoch() const noexcept { return reset_epoch_; }
  Amount k_prime() const noexcept { return k_prime_; }
  const AmountVector& reserves(int parity) const { return reserves_.at(parity); }
  const AmountVector& scaled_demand_sums(int parity) const { return scaled_demand_sums_.at(parity); }
  Amount max_recip_ds(int parity) const { return max_recip_ds_.at(parity); }
  const AmountVector& injected() const noexcept { return injected_; }
  std::size_t clamp_events() const noexcept { return clamp_events_; }
  std::size_t user_count() const noexcept { return users_.size(); }
  bool is_registered(UserId u) const { return users_.contains(u); }

  const AmountVector& balance(UserId u) const { return slot(u).balance; }
  const ResourceVector& registered_demand(UserId u, int parity) const { return slot(u).demand.at(parity); }
  Amount recip_ds(UserId u, int parity) const { return slot(u).recip_ds.at(parity); }
  std::uint64_t last_demand_epoch(UserId u) const { return slot(u).last_demand_epoch; }
  std::uint64_t last_claim_epoch(UserId u) const { return slot(u).last_claim_epoch; }

  // e = (b - o) / es + 1
  std::uint64_t epoch_at(std::uint64_t block) const {
    if (block < config_.offset)
      throw MachineError(MachineErrc::block_before_offset,
                         "block " + std::to_string(block) + " precedes offset " +
                             std::to_string(config_.offset));
    return (block - config_.offset) / config_.epoch_span + 1;
  }

  // Returns true when an epoch transition happened (the full, costed path).
  bool update_state(std::uint64_t block) {
    const std::uint64_t e = epoch_at(block);
    if (e <= epoch_) return false;
    epoch_ = e;
    const int s = static_cast<int>(e % 2);

    // Replenish the pool that this epoch's demands register against.
    for (std::size_t r = 0; r < config_.resources; ++r) {
      reserves_[1 - s][r] = checked_add<Amount>(reserves_[1 - s][r], config_.epoch_reserve[r]);
      injected_[r] = checked_add<Amount>(injected_[r], config_.epoch_reserve[r]);
    }

    // Accumulators of parity s are only meaningful if they were written last epoch.
    if (reset_epoch_ + 1 != e) {
      scaled_demand_sums_[s].assign(config_.resources, 0);
      max_recip_ds_[s] = 0;
    }

    const Amount p = config_.precision;
    bool have = false;
    Amount k = 0;
    for (std::size_t r = 0; r < config_.resources; ++r) {
      const Amount sds = scaled_demand_sums_[s][r];
      if (sds == 0) continue;
      const Amount num = checked_mul(checked_mul(max_recip_ds_[s], reserves_[s][r]), p);
      const Amount candidate = fixed_floor_div(num, sds);
      if (!have || candidate < k) {
        k = candidate;
        have = true;
      }
    }
    k_prime_ = have ? k : 0;
    return true;
  }

  void register_user(UserId u) {
    if (users_.contains(u))
      throw MachineError(MachineErrc::duplicate_user, "user " + std::to_string(u));
    UserSlot slot;
    for (auto& d : slot.demand) d = ResourceVector(config_.resources);
    slot.balance.assign(config_.resources, 0);
    users_.emplace(u, std::move(slot));
  }

  DemandReceipt demand(UserId u, const ResourceVector& d, std::uint64_t block) {
    UserSlot& user = slot(u);
    if (d.size() != config_.resources)
      throw MachineError(MachineErrc::dimension_mismatch,
                         "demand has " + std::to_string(d.size()) + " components, machine has " +
                             std::to_string(config_.resources));
    if (d.is_zero()) throw MachineError(MachineErrc::zero_demand, "user " + std::to_string(u));

    // Validate against the post-transition state before mutating anything.
    const std::uint64_t e = epoch_at(block);
    if (user.last_demand_epoch == e)
      throw MachineError(MachineErrc::double_demand,
                         "user " + std::to_string(u) + " already demanded in epoch " + std::to_string(e));
    const int s = static_cast<int>((e + 1) % 2);
    const bool transition = e > epoch_;
    const Amount p = config_.precision;
    for (std::size_t r = 0; r < config_.resources; ++r) {
      if (d[r] == 0) continue;
      Amount pool = reserves_[s][r];
      if (transition) pool = checked_add<Amount>(pool, config_.epoch_reserve[r]);
      if (pool == 0)
        throw MachineError(MachineErrc::zero_reserve, "resource " + std::to_string(r) + " pool is empty");
      if (checked_mul(p, pool) < d[r])
        throw MachineError(MachineErrc::demand_exceeds_precision,
                           "demand on resource " + std::to_string(r) + " exceeds p x reserve");
    }

    update_state(block);

    // ds' = min over demanded r of floor(p * R_r / d_r)
    Amount recip = 0;
    bool have = false;
    std::size_t branches = 0;
    for (std::size_t r = 0; r < config_.resources; ++r) {
      if (d[r] == 0) continue;
      const Amount candidate = fixed_floor_div(checked_mul(p, reserves_[s][r]), d[r]);
      if (!have) {
        recip = candidate;
        have = true;
      } else if (candidate < recip) {
        recip = candidate;
        ++branches;
      }
    }

    user.demand[s] = d;
    user.recip_ds[s] = recip;
    if (reset_epoch_ < e) {
      for (std::size_t r = 0; r < config_.resources; ++r)
        scaled_demand_sums_[s][r] = checked_mul<Amount>(d[r], recip);
      max_recip_ds_[s] = recip;
      reset_epoch_ = e;
    } else {
      for (std::size_t r = 0; r < config_.resources; ++r)
        scaled_demand_sums_[s][r] =
            checked_add(scaled_demand_sums_[s][r], checked_mul<Amount>(d[r], recip));
      // Smallest reciprocal = largest dominant share.
      max_recip_ds_[s] = std::min(max_recip_ds_[s], recip);
    }
    user.last_demand_epoch = e;
    return {u, e, recip, branches};
  }

  ClaimReceipt claim(UserId u, std::uint64_t block) {
    UserSlot& user = slot(u);
    const std::uint64_t e = epoch_at(block);
    if (user.last_claim_epoch == e)
      throw MachineError(MachineErrc::double_claim,
                         "user " + std::to_string(u) + " already claimed in epoch " + std::to_string(e));
    if (e < 2 || user.last_demand_epoch != e - 1)
      throw MachineError(MachineErrc::no_prior_demand,
                         "user " + std::to_string(u) + " did not demand in epoch " + std::to_string(e - 1));

    update_state(block);
    const int s = static_cast<int>(e % 2);
    const Amount p = config_.precision;

    const Amount ratio = fixed_floor_div(checked_mul(user.recip_ds[s], p), max_recip_ds_[s]);
    const Amount tasks = fixed_floor_div(checked_mul(ratio, k_prime_), checked_mul(p, p));

    ClaimReceipt receipt{u, e, tasks, AmountVector(config_.resources, 0), false};
    for (std::size_t r = 0; r < config_.resources; ++r) {
      Amount share = checked_mul<Amount>(tasks, user.demand[s][r]);
      if (share > reserves_[s][r]) {
        share = reserves_[s][r];
        receipt.clamped = true;
      }
      receipt.share[r] = share;
      user.balance[r] = checked_add(user.balance[r], share);
      reserves_[s][r] -= share;
    }
    if (receipt.clamped) ++clamp_events_;
    user.last_claim_epoch = e;
    return receipt;
  }

  MachineSnapshot snapshot() const {
    MachineSnapshot snap{epoch_, reserves_, k_prime_, {}};
    snap.balances.reserve(users_.size());
    for (const auto& [id, user] : users_) snap.balances.emplace_back(id, user.balance);
    return snap;
  }

  // injected == sum of balances + both pools, per resource
  bool accounting_holds() const {
    for (std::size_t r = 0; r < config_.resources; ++r) {
      Amount total = checked_add(reserves_[0][r], reserves_[1][r]);
      for (const auto& [id, user] : users_) total = checked_add(total, user.balance[r]);
      if (total != injected_[r]) return false;
    }
    return true;
  }

  bool operator==(const Machine&) const = default;

 private:
  struct UserSlot {
    std::array<ResourceVector, 2> demand;
    std::array<Amount, 2> recip_ds{0, 0};
    AmountVector balance;
    std::uint64_t last_demand_epoch = 0;
    std::uint64_t last_claim_epoch = 0;
    bool operator==(const UserSlot&) const = default;
  };

  template <typename Self>
  static auto& slot_of(Self& self, UserId u) {
    auto it = self.users_.find(u);
    if (it == self.users_.end())
      throw MachineError(MachineErrc::unregistered_user, "user " + std::to_string(u));
    return it->second;
  }
  UserSlot& slot(UserId u) { return slot_of(*this, u); }
  const UserSlot& slot(UserId u) const { return slot_of(*this, u); }

  MachineConfig config_;
  std::array<AmountVector, 2> reserves_;
  std::array<AmountVector, 2> scaled_demand_sums_;
  std::array<Amount, 2> max_recip_ds_{0, 0};
  Amount k_prime_ = 0;
  std::uint64_t epoch_ = 1;
  std::uint64_t reset_epoch_ = 0;
  std::map<UserId, UserSlot> users_;
  AmountVector injected_;
  std::size_t clamp_events_ = 0;
};

}  // namespace adrf
