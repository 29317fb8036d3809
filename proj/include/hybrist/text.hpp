#pragma once

#include <string_view>
#include <vector>

#include "hybrist/common.hpp"

// Small tokenizing helpers shared by the text formats.
namespace hybrist::text {

std::vector<std::string_view> split_lines(std::string_view text);
std::vector<std::string_view> split_ws(std::string_view line);
std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view s);

/// Locale-independent number parsing; throws ParseError tagged with `line`.
double parse_double(std::string_view s, std::size_t line = 0);
long long parse_int(std::string_view s, std::size_t line = 0);

}  // namespace hybrist::text
