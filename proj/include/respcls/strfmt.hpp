#pragma once

#include <charconv>
#include <string>

namespace respcls {

// Shortest round-trip decimal form; keeps CSV and JSON output byte-stable.
inline std::string fmt_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace respcls
