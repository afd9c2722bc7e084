#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace adrf {

// Exact rational in canonical (lowest-terms, positive denominator) form.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Shares and dominant shares are plain rationals; the alias documents intent.
using RationalShare = Rational;

inline Rational make_rational(std::int64_t num, std::int64_t den = 1) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  return Rational(BigInt(num), BigInt(den));
}

// Floor of a rational (toward negative infinity).
inline BigInt floor(const Rational& q) {
  const BigInt& num = boost::multiprecision::numerator(q);
  const BigInt& den = boost::multiprecision::denominator(q);
  BigInt quot = num / den;
  if (num < 0 && quot * den != num) --quot;
  return quot;
}

inline std::uint64_t to_u64(const BigInt& v) {
  if (v < 0 || v > std::numeric_limits<std::uint64_t>::max())
    throw std::overflow_error("integer does not fit in 64 bits");
  return v.convert_to<std::uint64_t>();
}

// Parses "123", "-4", "73092.667" or "3/7" exactly.
inline Rational parse_rational(std::string_view text) {
  auto fail = [&] {
    throw std::invalid_argument("malformed rational: '" + std::string(text) + "'");
  };
  if (text.empty()) fail();
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num = parse_rational(text.substr(0, slash));
    Rational den = parse_rational(text.substr(slash + 1));
    if (den == 0) fail();
    return num / den;
  }
  bool negative = false;
  std::size_t i = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    ++i;
  }
  BigInt num = 0;
  BigInt den = 1;
  bool seen_digit = false;
  bool seen_point = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.' && !seen_point) {
      seen_point = true;
    } else if (c >= '0' && c <= '9') {
      num = num * 10 + (c - '0');
      if (seen_point) den *= 10;
      seen_digit = true;
    } else if (c != ',' && c != '_') {  // digit group separators
      fail();
    }
  }
  if (!seen_digit) fail();
  Rational q(num, den);
  return negative ? Rational(-q) : q;
}

inline std::string to_string(const Rational& q) { return q.str(); }

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

}  // namespace adrf
