#pragma once

// Exact reference allocators: max-min fairness by progressive filling, DRF as
// an iterative loop, and precomputed DRF (PDRF) with a closed-form cycle count.
// Everything here is pure and uses exact rational arithmetic.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "adrf/rational.hpp"
#include "adrf/resource_vector.hpp"

namespace adrf {

class AllocError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unit-task demands keyed by user id. Ids are unique, every vector has the same
// length and at least one positive component.
class DemandSet {
 public:
  struct Entry {
    UserId user;
    ResourceVector demand;
    bool operator==(const Entry&) const = default;
  };

  DemandSet() = default;

  explicit DemandSet(std::vector<Entry> entries) : entries_(std::move(entries)) {
    std::set<UserId> seen;
    for (const auto& e : entries_) {
      if (!seen.insert(e.user).second)
        throw AllocError("duplicate user id " + std::to_string(e.user));
      if (e.demand.empty()) throw AllocError("demand vector with no resources");
      if (e.demand.size() != entries_.front().demand.size())
        throw AllocError("demand vectors differ in length");
      if (e.demand.is_zero())
        throw AllocError("user " + std::to_string(e.user) + " has an all-zero demand");
    }
  }

  // Users are numbered 0..n-1 in order.
  static DemandSet from_vectors(std::vector<ResourceVector> demands) {
    std::vector<Entry> entries;
    entries.reserve(demands.size());
    for (std::size_t i = 0; i < demands.size(); ++i)
      entries.push_back({static_cast<UserId>(i), std::move(demands[i])});
    return DemandSet(std::move(entries));
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t resources() const noexcept {
    return entries_.empty() ? 0 : entries_.front().demand.size();
  }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  bool operator==(const DemandSet&) const = default;

 private:
  std::vector<Entry> entries_;
};

// Positive rational weights; per resource (weighted DRF) or per user (WMF).
class WeightVector {
 public:
  WeightVector() = default;
  WeightVector(std::initializer_list<Rational> w) : WeightVector(std::vector<Rational>(w)) {}
  explicit WeightVector(std::vector<Rational> w) : w_(std::move(w)) {
    for (const auto& x : w_)
      if (x <= 0) throw AllocError("weights must be positive");
  }
  static WeightVector uniform(std::size_t len) { return WeightVector(std::vector<Rational>(len, 1)); }

  std::size_t size() const noexcept { return w_.size(); }
  const Rational& operator[](std::size_t i) const { return w_[i]; }
  auto begin() const noexcept { return w_.begin(); }
  auto end() const noexcept { return w_.end(); }

 private:
  std::vector<Rational> w_;
};

struct AllocationResult {
  std::vector<std::uint64_t> task_counts;
  std::vector<ResourceVector> allocations;
  ResourceVector remaining;
  Rational cycles = 0;  // PDRF cycle count k; zero for loop-based results

  bool operator==(const AllocationResult&) const = default;
};

struct DominantShare {
  RationalShare share;
  std::size_t index = 0;
  bool operator==(const DominantShare&) const = default;
};

// ---------------------------------------------------------------------------
// Max-min fairness (single resource, scalar maximum demands)

namespace detail {

inline void require_non_negative(std::span<const Rational> demands, const Rational& reserve) {
  if (reserve < 0) throw AllocError("reserve must be non-negative");
  for (const auto& d : demands)
    if (d < 0) throw AllocError("demands must be non-negative");
}

}  // namespace detail

// Equal-share refill: each round hands every unsatisfied user min(need, r'/n'),
// satisfied users leave and their unused share becomes the next round's reserve.
inline std::vector<Rational> progressive_filling(std::span<const Rational> demands,
                                                 const Rational& reserve) {
  detail::require_non_negative(demands, reserve);
  std::vector<Rational> alloc(demands.size(), Rational(0));
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < demands.size(); ++i)
    if (demands[i] > 0) active.push_back(i);

  Rational left = reserve;
  while (!active.empty() && left > 0) {
    const Rational share = left / static_cast<std::int64_t>(active.size());
    Rational residue = 0;
    std::vector<std::size_t> unsatisfied;
    for (std::size_t i : active) {
      const Rational need = demands[i] - alloc[i];
      if (need <= share) {
        alloc[i] += need;
        residue += share - need;
      } else {
        alloc[i] += share;
        unsatisfied.push_back(i);
      }
    }
    left = std::move(residue);
    active = std::move(unsatisfied);
  }
  return alloc;
}

// Weighted variant: the round share of user i is w_i / sum(w) of the reserve.
inline std::vector<Rational> weighted_progressive_filling(std::span<const Rational> demands,
                                                          const WeightVector& weights,
                                                          const Rational& reserve) {
  detail::require_non_negative(demands, reserve);
  if (weights.size() != demands.size())
    throw AllocError("weight count " + std::to_string(weights.size()) + " != user count " +
                     std::to_string(demands.size()));
  std::vector<Rational> alloc(demands.size(), Rational(0));
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < demands.size(); ++i)
    if (demands[i] > 0) active.push_back(i);

  Rational left = reserve;
  while (!active.empty() && left > 0) {
    Rational total_weight = 0;
    for (std::size_t i : active) total_weight += weights[i];
    Rational residue = 0;
    std::vector<std::size_t> unsatisfied;
    for (std::size_t i : active) {
      const Rational share = weights[i] / total_weight * left;
      const Rational need = demands[i] - alloc[i];
      if (need <= share) {
        alloc[i] += need;
        residue += share - need;
      } else {
        alloc[i] += share;
        unsatisfied.push_back(i);
      }
    }
    left = std::move(residue);
    active = std::move(unsatisfied);
  }
  return alloc;
}

// ---------------------------------------------------------------------------
// Dominant shares

// max_r d_r / (w_r * R_r); ties resolve to the lowest resource index.
inline DominantShare weighted_dominant_share(const ResourceVector& demand,
                                             const WeightVector& weights,
                                             const ResourceVector& reserves) {
  if (demand.size() != reserves.size() || weights.size() != reserves.size())
    throw AllocError("dominant share: length mismatch");
  if (demand.is_zero()) throw AllocError("dominant share of an all-zero demand");
  DominantShare best{Rational(-1), 0};
  for (std::size_t r = 0; r < reserves.size(); ++r) {
    if (reserves[r] == 0) throw AllocError("zero reserve for resource " + std::to_string(r));
    Rational ratio(BigInt(demand[r]), BigInt(reserves[r]));
    ratio /= weights[r];
    if (ratio > best.share) best = {std::move(ratio), r};
  }
  return best;
}

inline DominantShare dominant_share(const ResourceVector& demand, const ResourceVector& reserves) {
  if (demand.size() != reserves.size()) throw AllocError("dominant share: length mismatch");
  if (demand.is_zero()) throw AllocError("dominant share of an all-zero demand");
  DominantShare best{Rational(-1), 0};
  for (std::size_t r = 0; r < reserves.size(); ++r) {
    if (reserves[r] == 0) throw AllocError("zero reserve for resource " + std::to_string(r));
    Rational ratio(BigInt(demand[r]), BigInt(reserves[r]));
    if (ratio > best.share) best = {std::move(ratio), r};
  }
  return best;
}

// ---------------------------------------------------------------------------
// DRF and PDRF

namespace detail {

inline void require_reserves(const DemandSet& demands, const ResourceVector& reserves) {
  if (reserves.empty()) throw AllocError("no resources");
  for (std::size_t r = 0; r < reserves.size(); ++r)
    if (reserves[r] == 0) throw AllocError("zero reserve for resource " + std::to_string(r));
  if (!demands.empty() && demands.resources() != reserves.size())
    throw AllocError("demand length differs from reserve length");
}

inline AllocationResult assemble(const DemandSet& demands, const ResourceVector& reserves,
                                 std::vector<std::uint64_t> counts, Rational cycles) {
  AllocationResult out;
  out.remaining = reserves;
  for (std::size_t i = 0; i < demands.size(); ++i) {
    out.allocations.push_back(demands[i].demand.scaled(counts[i]));
    out.remaining -= out.allocations.back();
  }
  out.task_counts = std::move(counts);
  out.cycles = std::move(cycles);
  return out;
}

// Repeatedly pick the user with the least allocated dominant share (ties: lowest
// id) and give one task; stop at the first pick whose demand does not fit.
inline AllocationResult drf_loop(const DemandSet& demands, const ResourceVector& reserves,
                                 const std::vector<Rational>& shares) {
  const std::size_t n = demands.size();
  std::vector<std::uint64_t> counts(n, 0);
  std::vector<Rational> level(n, Rational(0));
  ResourceVector left = reserves;
  while (n > 0) {
    std::size_t pick = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (level[i] < level[pick] ||
          (level[i] == level[pick] && demands[i].user < demands[pick].user))
        pick = i;
    }
    const ResourceVector& d = demands[pick].demand;
    if (!d.fits_within(left)) break;
    left -= d;
    ++counts[pick];
    level[pick] += shares[pick];
  }
  return assemble(demands, reserves, std::move(counts), 0);
}

// k = min_r R_r / sum_i (ds*/ds_i) d_ir ; tasks_i = floor(k ds*/ds_i)
inline AllocationResult pdrf_closed_form(const DemandSet& demands, const ResourceVector& reserves,
                                         const std::vector<Rational>& shares) {
  const std::size_t n = demands.size();
  if (n == 0) return assemble(demands, reserves, {}, 0);
  const Rational max_share = *std::max_element(shares.begin(), shares.end());

  std::vector<Rational> ratio(n);
  for (std::size_t i = 0; i < n; ++i) ratio[i] = max_share / shares[i];

  bool have_k = false;
  Rational k = 0;
  for (std::size_t r = 0; r < reserves.size(); ++r) {
    Rational drain = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (demands[i].demand[r] != 0) drain += ratio[i] * BigInt(demands[i].demand[r]);
    if (drain == 0) continue;  // nobody wants r
    Rational cycles = Rational(BigInt(reserves[r])) / drain;
    if (!have_k || cycles < k) {
      k = std::move(cycles);
      have_k = true;
    }
  }

  std::vector<std::uint64_t> counts(n);
  for (std::size_t i = 0; i < n; ++i) counts[i] = to_u64(floor(k * ratio[i]));
  return assemble(demands, reserves, std::move(counts), std::move(k));
}

}  // namespace detail

inline AllocationResult drf_allocate(const DemandSet& demands, const ResourceVector& reserves) {
  detail::require_reserves(demands, reserves);
  std::vector<Rational> shares;
  for (const auto& e : demands) shares.push_back(dominant_share(e.demand, reserves).share);
  return detail::drf_loop(demands, reserves, shares);
}

// One weight vector (per resource) for each user, in DemandSet order.
inline AllocationResult weighted_drf_allocate(const DemandSet& demands,
                                              std::span<const WeightVector> weights,
                                              const ResourceVector& reserves) {
  detail::require_reserves(demands, reserves);
  if (weights.size() != demands.size()) throw AllocError("one weight vector per user required");
  std::vector<Rational> shares;
  for (std::size_t i = 0; i < demands.size(); ++i)
    shares.push_back(weighted_dominant_share(demands[i].demand, weights[i], reserves).share);
  return detail::drf_loop(demands, reserves, shares);
}

inline AllocationResult pdrf_allocate(const DemandSet& demands, const ResourceVector& reserves) {
  detail::require_reserves(demands, reserves);
  std::vector<Rational> shares;
  for (const auto& e : demands) shares.push_back(dominant_share(e.demand, reserves).share);
  return detail::pdrf_closed_form(demands, reserves, shares);
}

inline AllocationResult weighted_pdrf_allocate(const DemandSet& demands,
                                               std::span<const WeightVector> weights,
                                               const ResourceVector& reserves) {
  detail::require_reserves(demands, reserves);
  if (weights.size() != demands.size()) throw AllocError("one weight vector per user required");
  std::vector<Rational> shares;
  for (std::size_t i = 0; i < demands.size(); ++i)
    shares.push_back(weighted_dominant_share(demands[i].demand, weights[i], reserves).share);
  return detail::pdrf_closed_form(demands, reserves, shares);
}

// ---------------------------------------------------------------------------
// PDRF vs DRF comparison

struct DiffStats {
  std::vector<std::int64_t> deltas;  // drf tasks - pdrf tasks, per user
  std::size_t exact = 0;             // delta == 0
  std::size_t underallocated = 0;    // delta == 1
  std::size_t beyond_one = 0;        // delta > 1
  std::size_t overallocated = 0;     // delta < 0
  std::uint64_t overallocated_tasks = 0;
  std::uint64_t pdrf_tasks = 0;
  std::uint64_t drf_tasks = 0;
};

inline DiffStats compare_pdrf_drf(const DemandSet& demands, const ResourceVector& reserves) {
  const AllocationResult drf = drf_allocate(demands, reserves);
  const AllocationResult pdrf = pdrf_allocate(demands, reserves);
  DiffStats stats;
  for (std::size_t i = 0; i < demands.size(); ++i) {
    const auto a = static_cast<std::int64_t>(drf.task_counts[i]);
    const auto b = static_cast<std::int64_t>(pdrf.task_counts[i]);
    const std::int64_t delta = a - b;
    stats.deltas.push_back(delta);
    stats.drf_tasks += drf.task_counts[i];
    stats.pdrf_tasks += pdrf.task_counts[i];
    if (delta == 0) {
      ++stats.exact;
    } else if (delta == 1) {
      ++stats.underallocated;
    } else if (delta > 1) {
      ++stats.beyond_one;
    } else {
      ++stats.overallocated;
      stats.overallocated_tasks += static_cast<std::uint64_t>(-delta);
    }
  }
  return stats;
}

}  // namespace adrf
