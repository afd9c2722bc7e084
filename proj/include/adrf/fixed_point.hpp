#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace adrf {

// Machine word: every fixed-point intermediate must be exact below 2^128.
using Amount = unsigned __int128;
using AmountVector = std::vector<Amount>;

inline constexpr std::uint64_t kDefaultPrecision = 1'000'000;

class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

template <typename T>
T checked_add(T a, T b) {
  T out;
  if (__builtin_add_overflow(a, b, &out)) throw OverflowError("addition overflow");
  return out;
}

template <typename T>
T checked_sub(T a, T b) {
  T out;
  if (__builtin_sub_overflow(a, b, &out)) throw OverflowError("subtraction underflow");
  return out;
}

template <typename T>
T checked_mul(T a, T b) {
  T out;
  if (__builtin_mul_overflow(a, b, &out)) throw OverflowError("multiplication overflow");
  return out;
}

// Integer floor division; all machine divisions go through here.
inline Amount fixed_floor_div(Amount a, Amount b) {
  if (b == 0) throw std::domain_error("fixed_floor_div: division by zero");
  return a / b;
}

inline std::string to_string(Amount v) {
  if (v == 0) return "0";
  std::string out;
  while (v != 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return {out.rbegin(), out.rend()};
}

inline Amount parse_amount(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty integer");
  Amount v = 0;
  for (char c : text) {
    if (c < '0' || c > '9')
      throw std::invalid_argument("malformed integer: '" + std::string(text) + "'");
    v = checked_add<Amount>(checked_mul<Amount>(v, 10), static_cast<Amount>(c - '0'));
  }
  return v;
}

inline std::uint64_t narrow_u64(Amount v) {
  if (v > std::numeric_limits<std::uint64_t>::max())
    throw OverflowError("amount does not fit in 64 bits");
  return static_cast<std::uint64_t>(v);
}

}  // namespace adrf
