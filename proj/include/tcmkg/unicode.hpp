#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers. Offsets counted in Unicode scalar values unless noted.
namespace tcmkg::unicode {

bool is_valid_utf8(std::string_view text);

/// Number of scalar values. Throws tcmkg::Error on invalid UTF-8.
std::size_t length(std::string_view text);

/// Byte offset of every scalar value boundary: size is length(text) + 1,
/// first element 0, last element text.size().
std::vector<std::size_t> boundaries(std::string_view text);

/// Substring [start, end) measured in scalar values.
std::string substr(std::string_view text, std::size_t start, std::size_t end);

/// Canonical composition (NFC).
std::string nfc(std::string_view text);

/// Trim, then replace every run of Unicode white space with one U+0020.
std::string collapse_whitespace(std::string_view text);

/// Decode to UTF-32. Throws tcmkg::Error on invalid UTF-8.
std::u32string to_u32(std::string_view text);
std::string to_utf8(std::u32string_view text);

std::string ascii_lower(std::string_view text);

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fingerprint(std::string_view bytes);

} // namespace tcmkg::unicode
