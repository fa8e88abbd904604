#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace jointnlu::utf8 {

/// Decodes UTF-8; malformed bytes decode to U+FFFD, one per byte.
std::u32string decode(std::string_view text);

std::string encode(char32_t code_point);

/// Splits text into one UTF-8 string per code point.
std::vector<std::string> split_code_points(std::string_view text);

}  // namespace jointnlu::utf8
