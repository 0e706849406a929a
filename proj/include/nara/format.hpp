#pragma once

#include <charconv>
#include <string>
#include <string_view>

#include "nara/tensor.hpp"

namespace nara {

/// Shortest-form-independent decimal text with `digits` significant digits;
/// 17 digits round-trips every double.
inline std::string format_double(double value, int digits = 17) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, digits);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error("malformed number '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace nara
