#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>

namespace descry {

/// num/den rounded half away from zero to one decimal, computed exactly.
inline std::string format_tenths(std::int64_t num, std::int64_t den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const bool negative = num < 0;
  const std::int64_t mag = negative ? -num : num;
  const std::int64_t tenths = (20 * mag + den) / (2 * den);
  std::string s = std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
  return (negative && tenths != 0) ? "-" + s : s;
}

/// 100·num/den with one decimal ("66.7").
inline std::string format_percent(std::int64_t num, std::int64_t den) {
  return format_tenths(100 * num, den);
}

/// x rounded half away from zero to one decimal. A 1e-9 nudge absorbs binary
/// representation error so that e.g. 0.7745 formats as 77.5 percent.
inline std::string format_one_decimal(double x) {
  const bool negative = x < 0;
  const auto tenths = static_cast<std::int64_t>(std::floor(std::fabs(x) * 10.0 + 0.5 + 1e-9));
  std::string s = std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
  return (negative && tenths != 0) ? "-" + s : s;
}

inline std::string format_percent(double fraction) { return format_one_decimal(fraction * 100.0); }

}  // namespace descry
