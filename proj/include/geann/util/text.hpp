#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace geann::util {

void strip_cr(std::string& line);
std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

bool parse_size(std::string_view s, std::size_t& out);
bool parse_int(std::string_view s, long long& out);
bool parse_double(std::string_view s, double& out);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

}  // namespace geann::util
