#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wordasimage {

/// Decodes UTF-8; throws InvalidArgument on malformed input.
std::vector<char32_t> decode_utf8(std::string_view text);
std::string encode_utf8(char32_t cp);

}  // namespace wordasimage
