#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace koopctl {

// Shortest decimal representation that round-trips exactly.
std::string format_double(double value);

// Parses a full token as double; throws InputError mentioning `context`.
double parse_double(std::string_view token, std::string_view context);

// Splits one CSV line on commas, trimming surrounding blanks.
std::vector<std::string> split_csv(std::string_view line);

}  // namespace koopctl
