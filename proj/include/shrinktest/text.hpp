#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace shrinktest::text {

// Shortest round-trip decimal form; "nan", "inf", "-inf" for specials.
std::string format_double(double v);

// Parses a full string as a double / integer. Throws ValidationError naming
// `field` on failure.
double parse_double(std::string_view s, std::string_view field);
long parse_long(std::string_view s, std::string_view field);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace shrinktest::text
