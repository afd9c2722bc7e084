#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adrf/fixed_point.hpp"

namespace adrf {

using UserId = std::uint64_t;

// Per-resource non-negative integer quantities (reserves, demands, shares).
class ResourceVector {
 public:
  using value_type = std::uint64_t;

  ResourceVector() = default;
  explicit ResourceVector(std::size_t m, value_type fill = 0) : q_(m, fill) {}
  ResourceVector(std::initializer_list<value_type> values) : q_(values) {}
  explicit ResourceVector(std::vector<value_type> values) : q_(std::move(values)) {}

  std::size_t size() const noexcept { return q_.size(); }
  bool empty() const noexcept { return q_.empty(); }

  value_type operator[](std::size_t r) const { return q_[r]; }
  value_type& operator[](std::size_t r) { return q_[r]; }

  auto begin() const noexcept { return q_.begin(); }
  auto end() const noexcept { return q_.end(); }

  std::span<const value_type> values() const noexcept { return q_; }

  bool is_zero() const noexcept {
    return std::all_of(q_.begin(), q_.end(), [](value_type v) { return v == 0; });
  }

  // true when every component of *this is <= the matching component of bound
  bool fits_within(const ResourceVector& bound) const {
    require_same_size(bound);
    for (std::size_t r = 0; r < q_.size(); ++r)
      if (q_[r] > bound.q_[r]) return false;
    return true;
  }

  ResourceVector scaled(value_type k) const {
    ResourceVector out(q_.size());
    for (std::size_t r = 0; r < q_.size(); ++r) out.q_[r] = checked_mul(q_[r], k);
    return out;
  }

  ResourceVector& operator+=(const ResourceVector& other) {
    require_same_size(other);
    for (std::size_t r = 0; r < q_.size(); ++r) q_[r] = checked_add(q_[r], other.q_[r]);
    return *this;
  }

  // Underflow is an error: quantities never go negative.
  ResourceVector& operator-=(const ResourceVector& other) {
    require_same_size(other);
    for (std::size_t r = 0; r < q_.size(); ++r) q_[r] = checked_sub(q_[r], other.q_[r]);
    return *this;
  }

  friend ResourceVector operator+(ResourceVector a, const ResourceVector& b) { return a += b; }
  friend ResourceVector operator-(ResourceVector a, const ResourceVector& b) { return a -= b; }

  bool operator==(const ResourceVector&) const = default;

  std::string str() const {
    std::string out;
    for (std::size_t r = 0; r < q_.size(); ++r) {
      if (r) out.push_back(',');
      out += std::to_string(q_[r]);
    }
    return out;
  }

 private:
  void require_same_size(const ResourceVector& other) const {
    if (other.size() != size())
      throw std::invalid_argument("resource vector length mismatch: " + std::to_string(size()) +
                                  " vs " + std::to_string(other.size()));
  }

  std::vector<value_type> q_;
};

inline AmountVector to_amounts(const ResourceVector& v) { return AmountVector(v.begin(), v.end()); }

}  // namespace adrf
