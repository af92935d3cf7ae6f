#include "shrinktest/text.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string>

#include "shrinktest/errors.hpp"

namespace shrinktest::text {

std::string format_double(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view s, std::string_view field) {
  const std::string_view t = trim(s);
  double v = 0.0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ValidationError(std::string(field) + ": expected a number, got '" +
                          std::string(s) + "'");
  }
  return v;
}

long parse_long(std::string_view s, std::string_view field) {
  const std::string_view t = trim(s);
  long v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    // Accept integral values written in floating form, e.g. 1e4.
    const double d = parse_double(t, field);
    if (d != std::floor(d) || std::abs(d) > 9e15) {
      throw ValidationError(std::string(field) + ": expected an integer, got '" +
                            std::string(s) + "'");
    }
    return static_cast<long>(d);
  }
  return v;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return out;
}

}  // namespace shrinktest::text
