#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace hscan::utf8 {

/// Number of Unicode scalar values in `s`. Invalid bytes count as one each.
std::size_t length(std::string_view s);

/// Longest prefix of `s` holding at most `max_chars` scalar values. Never splits a sequence.
std::string_view truncate(std::string_view s, std::size_t max_chars);

/// Decodes to code points. Invalid bytes map to U+FFFD.
std::vector<char32_t> decode(std::string_view s);

void append(std::string& out, char32_t cp);

std::string_view trim(std::string_view s);

/// ASCII-only lowercase; multibyte sequences pass through untouched.
std::string ascii_lower(std::string_view s);

}  // namespace hscan::utf8
