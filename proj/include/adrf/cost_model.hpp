#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "adrf/fixed_point.hpp"
#include "adrf/resource_vector.hpp"

namespace adrf {

enum class CostKind { demand, claim, update_state };

inline const char* to_string(CostKind kind) {
  switch (kind) {
    case CostKind::demand: return "demand";
    case CostKind::claim: return "claim";
    case CostKind::update_state: return "update_state";
  }
  return "unknown";
}

inline CostKind parse_cost_kind(std::string_view text) {
  if (text == "demand") return CostKind::demand;
  if (text == "claim") return CostKind::claim;
  if (text == "update_state") return CostKind::update_state;
  throw std::invalid_argument("unknown call kind '" + std::string(text) + "'");
}

// cost = intercept + slope * m
struct AffineCost {
  std::uint64_t slope = 0;
  std::uint64_t intercept = 0;

  std::uint64_t at(std::size_t m) const {
    return checked_add(intercept, checked_mul<std::uint64_t>(slope, m));
  }
  bool operator==(const AffineCost&) const = default;
};

// Abstract per-call cost: an affine function of the resource count plus a
// per-branch term for demand calls. Defaults are the fitted gas regressions.
struct CostModel {
  AffineCost demand{13'616, 47'245};
  AffineCost claim{15'130, 36'486};
  AffineCost update_state{11'295, 23'539};
  std::uint64_t branch_cost = 0;  // per ds' minimum update in demand

  // One-time buffer initialisation surcharges, off by default: the first two
  // demand calls and the first claim call of each user.
  AffineCost demand_warmup{0, 0};
  AffineCost claim_warmup{0, 0};

  const AffineCost& affine(CostKind kind) const {
    switch (kind) {
      case CostKind::demand: return demand;
      case CostKind::claim: return claim;
      case CostKind::update_state: return update_state;
    }
    throw std::invalid_argument("unknown cost kind");
  }

  bool operator==(const CostModel&) const = default;
};

inline std::uint64_t cost_of_call(CostKind kind, std::size_t m, std::size_t branch_events,
                                  const CostModel& model = {}) {
  if (m == 0) throw std::invalid_argument("cost_of_call: resource count must be >= 1");
  std::uint64_t cost = model.affine(kind).at(m);
  if (kind == CostKind::demand)
    cost = checked_add(cost, checked_mul<std::uint64_t>(model.branch_cost, branch_events));
  return cost;
}

struct CostRecord {
  CostKind kind = CostKind::demand;
  std::size_t m = 0;
  std::uint64_t cost_units = 0;
  std::uint64_t epoch = 0;
  UserId user = 0;
  bool operator==(const CostRecord&) const = default;
};

}  // namespace adrf
