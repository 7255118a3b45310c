#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace cbound {

/// Shortest round-trip decimal form; identical bits print identically.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) return "nan";
  return std::string(buf, res.ptr);
}

/// Quotes a CSV field when it contains a separator, quote, or newline.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace cbound
