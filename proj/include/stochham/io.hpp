#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace stochham::io {

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);

std::vector<std::string> split_csv_line(std::string_view line);
double parse_double(std::string_view s);

}  // namespace stochham::io
