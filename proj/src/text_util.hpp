#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace recip {

// Shortest decimal form that round-trips; locale-independent.
inline std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string fmt_int(long long v) { return std::to_string(v); }

}  // namespace recip
