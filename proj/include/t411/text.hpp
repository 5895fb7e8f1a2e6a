#pragma once

// Whitespace tokenizing and UTF-8 helpers shared by the gateway modules.
// Whitespace means the ASCII set " \t\n\v\f\r"; nothing else splits tokens.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace t411::text {

constexpr bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

std::string_view trim(std::string_view s) noexcept;

std::vector<std::string_view> split_ws(std::string_view s);

// Joins with a single space.
std::string join(const std::vector<std::string_view>& parts);

std::string to_lower_ascii(std::string_view s);
std::string to_upper_ascii(std::string_view s);
bool iequals_ascii(std::string_view a, std::string_view b) noexcept;

// Number of Unicode scalar values. Each byte of an ill-formed sequence
// counts as one scalar, matching what sanitize_utf8 would turn it into.
std::size_t scalar_count(std::string_view s) noexcept;

// Longest prefix of at most max_scalars scalars, cut on a scalar boundary.
std::string_view truncate_scalars(std::string_view s, std::size_t max_scalars) noexcept;

// Replaces every ill-formed byte with U+FFFD.
std::string sanitize_utf8(std::string_view s);

bool is_valid_utf8(std::string_view s) noexcept;

// Appends the UTF-8 encoding of cp (cp must be a scalar value).
void append_utf8(std::string& out, char32_t cp);

}  // namespace t411::text
