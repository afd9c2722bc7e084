#pragma once

// Batch fixed-point PDRF: the same floored formulas the machine evaluates
// incrementally, computed in one pass over a complete demand set with
// arbitrary-precision integers. Used to cross-check machine claims.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "adrf/alloc.hpp"
#include "adrf/fixed_point.hpp"
#include "adrf/rational.hpp"

namespace adrf {

struct FixedPointPdrf {
  std::vector<BigInt> recip_ds;  // floor(p R_r / d_r), minimised over demanded r
  BigInt min_recip_ds = 0;
  std::vector<BigInt> scaled_demand_sums;
  BigInt k_prime = 0;
  std::vector<BigInt> ratios;
  std::vector<BigInt> task_counts;
};

inline FixedPointPdrf fixed_point_pdrf(const DemandSet& demands, std::span<const Amount> reserves,
                                       std::uint64_t precision = kDefaultPrecision) {
  if (precision == 0) throw std::invalid_argument("precision must be positive");
  if (!demands.empty() && demands.resources() != reserves.size())
    throw std::invalid_argument("demand length differs from reserve length");
  const BigInt p = precision;
  const std::size_t n = demands.size();
  const std::size_t m = reserves.size();

  auto big = [](Amount v) {
    BigInt out = static_cast<std::uint64_t>(v >> 64);
    out <<= 64;
    out += static_cast<std::uint64_t>(v);
    return out;
  };

  FixedPointPdrf out;
  out.scaled_demand_sums.assign(m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const ResourceVector& d = demands[i].demand;
    BigInt best = -1;
    for (std::size_t r = 0; r < m; ++r) {
      if (d[r] == 0) continue;
      BigInt candidate = p * big(reserves[r]) / d[r];
      if (best < 0 || candidate < best) best = candidate;
    }
    if (best <= 0) throw std::invalid_argument("user demand has no positive reciprocal share");
    out.recip_ds.push_back(best);
    if (i == 0 || best < out.min_recip_ds) out.min_recip_ds = best;
  }
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t i = 0; i < n; ++i) out.scaled_demand_sums[r] += out.recip_ds[i] * demands[i].demand[r];

  bool have = false;
  for (std::size_t r = 0; r < m; ++r) {
    if (out.scaled_demand_sums[r] == 0) continue;
    BigInt k = out.min_recip_ds * big(reserves[r]) * p / out.scaled_demand_sums[r];
    if (!have || k < out.k_prime) out.k_prime = k;
    have = true;
  }

  for (std::size_t i = 0; i < n; ++i) {
    BigInt ratio = out.recip_ds[i] * p / out.min_recip_ds;
    out.task_counts.push_back(ratio * out.k_prime / (p * p));
    out.ratios.push_back(std::move(ratio));
  }
  return out;
}

}  // namespace adrf
