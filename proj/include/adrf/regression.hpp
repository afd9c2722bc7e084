#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "adrf/rational.hpp"

namespace adrf {

struct RegressionPoint {
  std::int64_t x = 0;
  Rational y = 0;
};

struct RegressionFit {
  Rational slope = 0;
  Rational intercept = 0;
  Rational r_squared = 0;
  Rational ss_res = 0;

  Rational predict(std::int64_t x) const { return slope * x + intercept; }
};

// Ordinary least squares in exact arithmetic. R^2 = 1 - SSres/SStot, and 1
// when the data are constant (SStot = 0, SSres = 0).
inline RegressionFit fit_linear(std::span<const RegressionPoint> points) {
  std::set<std::int64_t> xs;
  for (const auto& p : points) xs.insert(p.x);
  if (xs.size() < 2) throw std::invalid_argument("fit_linear needs at least two distinct x values");

  const auto n = static_cast<std::int64_t>(points.size());
  Rational sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : points) {
    sx += p.x;
    sy += p.y;
    sxx += Rational(p.x) * p.x;
    sxy += p.y * p.x;
  }
  RegressionFit fit;
  fit.slope = (sxy * n - sx * sy) / (sxx * n - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;

  const Rational mean = sy / n;
  Rational ss_tot = 0;
  for (const auto& p : points) {
    const Rational res = p.y - fit.predict(p.x);
    fit.ss_res += res * res;
    ss_tot += (p.y - mean) * (p.y - mean);
  }
  fit.r_squared = ss_tot == 0 ? Rational(1) : Rational(1 - fit.ss_res / ss_tot);
  return fit;
}

inline RegressionFit fit_linear(const std::vector<RegressionPoint>& points) {
  return fit_linear(std::span<const RegressionPoint>(points));
}

}  // namespace adrf
