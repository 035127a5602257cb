#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace poet {

/// Exact rational used for every energy, time and budget quantity.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parses "12", "-0.125", "1.5e-3" or "3/4" exactly. Throws Error(kParse).
Rational parse_rational(std::string_view text);

/// Exact decimal text when the denominator is of the form 2^a 5^b, "p/q"
/// otherwise. parse_rational(format_rational(x)) == x always holds.
std::string format_rational(const Rational& value);

/// True when format_rational produces a plain decimal.
bool is_terminating_decimal(const Rational& value);

/// The decimal the double prints as in shortest round-trip form, taken
/// exactly. Used when a JSON document carries a number literal.
Rational rational_from_double(double value);

double to_double(const Rational& value);

/// Least common multiple of the denominators of `values`.
template <typename Range>
BigInt common_denominator(const Range& values) {
  BigInt l = 1;
  for (const Rational& v : values) {
    const BigInt d = boost::multiprecision::denominator(v);
    l = boost::multiprecision::lcm(l, d);
  }
  return l;
}

/// Converts an integral BigInt to int64, throwing Error(kModel) on overflow.
std::int64_t to_int64_checked(const BigInt& value, std::string_view what);

}  // namespace poet
