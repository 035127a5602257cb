#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "poet/error.hpp"
#include "poet/numeric.hpp"

namespace poet::detail {

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

inline nlohmann::json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParse, what + ": " + e.what());
  }
}

/// Exact value of a JSON number or numeric string.
inline Rational json_rational(const nlohmann::json& v, const std::string& what) {
  if (v.is_number_integer()) {
    return v.is_number_unsigned() ? Rational(BigInt(v.get<std::uint64_t>()))
                                  : Rational(BigInt(v.get<std::int64_t>()));
  }
  if (v.is_number_float()) return rational_from_double(v.get<double>());
  if (v.is_string()) return parse_rational(v.get<std::string>());
  throw Error(ErrorKind::kParse, what + " is not a number");
}

/// Writes terminating decimals as JSON numbers when they survive a double
/// round trip, anything else as an exact string.
inline nlohmann::json rational_json(const Rational& v) {
  const BigInt den = boost::multiprecision::denominator(v);
  if (den == 1) {
    const BigInt num = boost::multiprecision::numerator(v);
    if (num >= std::numeric_limits<std::int64_t>::min() &&
        num <= std::numeric_limits<std::int64_t>::max()) {
      return num.convert_to<std::int64_t>();
    }
    return num.str();
  }
  if (is_terminating_decimal(v)) {
    const double d = to_double(v);
    if (rational_from_double(d) == v) return d;
  }
  return format_rational(v);
}

}  // namespace poet::detail
