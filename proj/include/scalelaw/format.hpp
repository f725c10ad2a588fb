#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace scalelaw {

// Shortest round-trip decimal representation.
inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace scalelaw
