#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace hemoreduce::detail {

/// Shortest round-trip text for a double, locale independent; "nan" for NaN.
inline std::string number_text(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace hemoreduce::detail
