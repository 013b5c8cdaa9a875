#pragma once

#include <charconv>
#include <string>

namespace teleopt::io {

// Shortest decimal form that round-trips the exact double. All CSV/JSON/SVG
// emitters use this so repeated runs produce byte-identical files.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace teleopt::io
