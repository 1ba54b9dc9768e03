#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hydrocast {

// Shortest representation that parses back to the same double.
std::string format_double(double value);

// Whole-field parse; throws Error(kParse) on trailing garbage.
double parse_double(std::string_view text);

std::vector<std::string_view> split_fields(std::string_view line, char sep);

std::string_view trim(std::string_view text);

}  // namespace hydrocast
