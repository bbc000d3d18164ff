#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace twohop::util {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Replaces every occurrence of `from` (must be non-empty) with `to`.
std::string replace_all(std::string_view s, std::string_view from, std::string_view to);

// First position of `needle` in `haystack`, or npos. Wrapper so call sites
// stay readable when both sides are std::string.
std::size_t find_sub(std::string_view haystack, std::string_view needle);

}  // namespace twohop::util
