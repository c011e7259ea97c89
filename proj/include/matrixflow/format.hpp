// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>

#include "matrixflow/sysmodel.hpp"

namespace matrixflow {

// Locale-independent number formatting for CSV output.

/// Exact decimal nanoseconds from integer picoseconds, e.g. 1162353 -> "1162.353".
inline std::string format_ns(Picos ps) {
  const bool negative = ps < 0;
  const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-ps) : static_cast<std::uint64_t>(ps);
  std::string frac = std::to_string(mag % 1000);
  frac.insert(0, 3 - frac.size(), '0');
  return (negative ? "-" : "") + std::to_string(mag / 1000) + "." + frac;
}

/// Shortest round-trip representation.
inline std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

/// Quotes a CSV field only when it needs it.
inline std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace matrixflow
