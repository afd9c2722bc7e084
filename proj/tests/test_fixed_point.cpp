#include <gtest/gtest.h>

#include <limits>

#include "adrf/fixed_point.hpp"
#include "adrf/rational.hpp"

using namespace adrf;

TEST(FixedFloorDiv, TruncatesTowardZero) {
  EXPECT_EQ(fixed_floor_div(7, 2), Amount(3));
  EXPECT_EQ(fixed_floor_div(Amount(kDefaultPrecision) * 9, 1), Amount(9'000'000));
  EXPECT_EQ(fixed_floor_div(Amount(3'000'000) * 9'000'000, 13'500'000), Amount(2'000'000));
  EXPECT_EQ(fixed_floor_div(0, 5), Amount(0));
}

TEST(FixedFloorDiv, RejectsZeroDivisor) {
  EXPECT_THROW(fixed_floor_div(1, 0), std::domain_error);
}

TEST(CheckedArithmetic, DetectsOverflow) {
  const Amount max = ~Amount(0);
  EXPECT_THROW(checked_add<Amount>(max, 1), OverflowError);
  EXPECT_THROW(checked_mul<Amount>(max / 2 + 1, 2), OverflowError);
  EXPECT_THROW(checked_sub<Amount>(0, 1), OverflowError);
  EXPECT_EQ(checked_mul<Amount>(Amount(1) << 64, Amount(1) << 63), Amount(1) << 127);
}

TEST(AmountText, RoundTripsWideValues) {
  const Amount big = (Amount(1) << 127) + 12345;
  EXPECT_EQ(to_string(big), "170141183460469231731687303715884118073");
  EXPECT_EQ(parse_amount(to_string(big)), big);
  EXPECT_EQ(to_string(Amount(0)), "0");
  EXPECT_THROW(parse_amount("12a"), std::invalid_argument);
  EXPECT_THROW(parse_amount(""), std::invalid_argument);
  EXPECT_THROW(parse_amount("999999999999999999999999999999999999999999"), OverflowError);
}

TEST(AmountText, NarrowsOnlyWhenItFits) {
  EXPECT_EQ(narrow_u64(Amount(42)), 42u);
  EXPECT_THROW(narrow_u64(Amount(1) << 64), OverflowError);
}

TEST(RationalText, ParsesIntegersDecimalsAndFractions) {
  EXPECT_EQ(parse_rational("123"), Rational(123));
  EXPECT_EQ(parse_rational("-4"), Rational(-4));
  EXPECT_EQ(parse_rational("73092.667"), make_rational(73092667, 1000));
  EXPECT_EQ(parse_rational("3/7"), make_rational(3, 7));
  EXPECT_EQ(parse_rational("1,146,397"), Rational(1146397));
  EXPECT_THROW(parse_rational("x"), std::invalid_argument);
}

TEST(RationalFloor, FloorsTowardNegativeInfinity) {
  EXPECT_EQ(floor(make_rational(7, 2)), BigInt(3));
  EXPECT_EQ(floor(make_rational(-7, 2)), BigInt(-4));
  EXPECT_EQ(floor(Rational(5)), BigInt(5));
}
