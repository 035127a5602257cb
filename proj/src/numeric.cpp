#include "poet/numeric.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "poet/error.hpp"

namespace poet {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidSpec: return "invalid-spec";
    case ErrorKind::kInvalidGraph: return "invalid-graph";
    case ErrorKind::kInvalidProfile: return "invalid-profile";
    case ErrorKind::kCoverage: return "coverage";
    case ErrorKind::kInfeasibleBudget: return "infeasible-budget";
    case ErrorKind::kModel: return "model";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kUnsupported: return "unsupported";
    case ErrorKind::kUnknownRegime: return "unknown-regime";
    case ErrorKind::kUnverifiedSchedule: return "unverified-schedule";
    case ErrorKind::kShapeMismatch: return "shape-mismatch";
    case ErrorKind::kCapExceeded: return "cap-exceeded";
    case ErrorKind::kIo: return "io";
  }
  return "error";
}

namespace {

BigInt pow10(int e) {
  BigInt r = 1;
  for (int i = 0; i < e; ++i) r *= 10;
  return r;
}

[[noreturn]] void bad_number(std::string_view text) {
  throw Error(ErrorKind::kParse, "not a number: '" + std::string(text) + "'");
}

Rational parse_decimal(std::string_view text) {
  std::size_t p = 0;
  bool negative = false;
  if (p < text.size() && (text[p] == '+' || text[p] == '-')) {
    negative = text[p] == '-';
    ++p;
  }
  BigInt mantissa = 0;
  int frac_digits = 0;
  bool any_digit = false;
  bool seen_point = false;
  for (; p < text.size(); ++p) {
    const char c = text[p];
    if (c >= '0' && c <= '9') {
      mantissa = mantissa * 10 + (c - '0');
      any_digit = true;
      if (seen_point) ++frac_digits;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) bad_number(text);
  long exponent = 0;
  if (p < text.size() && (text[p] == 'e' || text[p] == 'E')) {
    ++p;
    const auto* first = text.data() + p;
    const auto* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, exponent);
    if (ec != std::errc() || ptr != last) bad_number(text);
    if (exponent > 4000 || exponent < -4000) bad_number(text);
    p = text.size();
  }
  if (p != text.size()) bad_number(text);
  const long scale = exponent - frac_digits;
  Rational value = scale >= 0 ? Rational(mantissa * pow10(static_cast<int>(scale)))
                              : Rational(mantissa, pow10(static_cast<int>(-scale)));
  return negative ? Rational(-value) : value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  text = trim(text);
  if (text.empty()) bad_number(text);
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const Rational num = parse_decimal(trim(text.substr(0, slash)));
    const Rational den = parse_decimal(trim(text.substr(slash + 1)));
    if (den == 0) throw Error(ErrorKind::kParse, "zero denominator: '" + std::string(text) + "'");
    return num / den;
  }
  return parse_decimal(text);
}

bool is_terminating_decimal(const Rational& value) {
  BigInt d = boost::multiprecision::denominator(value);
  while (d % 2 == 0) d /= 2;
  while (d % 5 == 0) d /= 5;
  return d == 1;
}

std::string format_rational(const Rational& value) {
  const BigInt num = boost::multiprecision::numerator(value);
  const BigInt den = boost::multiprecision::denominator(value);
  if (den == 1) return num.str();
  if (!is_terminating_decimal(value)) return num.str() + "/" + den.str();
  // Find the power of ten the denominator divides.
  int digits = 0;
  BigInt p10 = 1;
  while (p10 % den != 0) {
    p10 *= 10;
    ++digits;
  }
  const BigInt scaled = num * (p10 / den);
  const bool negative = scaled < 0;
  std::string s = (negative ? BigInt(-scaled) : scaled).str();
  if (static_cast<int>(s.size()) <= digits) s.insert(0, digits - s.size() + 1, '0');
  s.insert(s.size() - digits, ".");
  return negative ? "-" + s : s;
}

Rational rational_from_double(double value) {
  if (!std::isfinite(value)) throw Error(ErrorKind::kParse, "non-finite number");
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(ErrorKind::kParse, "unprintable number");
  return parse_decimal(std::string_view(buf, ptr - buf));
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

std::int64_t to_int64_checked(const BigInt& value, std::string_view what) {
  if (value > std::numeric_limits<std::int64_t>::max() ||
      value < std::numeric_limits<std::int64_t>::min()) {
    throw Error(ErrorKind::kModel, std::string(what) + " does not fit in 64 bits");
  }
  return value.convert_to<std::int64_t>();
}

}  // namespace poet
