#pragma once

#include <string>
#include <vector>

namespace csg {

/// Shortest text that round-trips a double exactly (17 significant digits).
std::string format_double(double value);

/// Strict parse of a decimal; throws InputError on trailing garbage.
double parse_double(const std::string& text);
long long parse_int(const std::string& text);

std::vector<std::string> split(const std::string& text, char sep);
std::string trim(const std::string& text);

}  // namespace csg
