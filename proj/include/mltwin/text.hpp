#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>

namespace mltwin {

/// Shortest round-trip decimal form; "nan"/"inf" for non-finite values.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, x);
  return std::string(buffer, result.ptr);
}

/// Empty for an undefined value, so CSV readers see a missing cell.
inline std::string format_optional(const std::optional<double>& x) { return x ? format_number(*x) : std::string(); }

}  // namespace mltwin
