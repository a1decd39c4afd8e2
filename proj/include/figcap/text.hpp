#pragma once

#include <string>
#include <string_view>

namespace figcap::text {

/// Lenient UTF-8 decoder; invalid bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);

// Locale-independent character classes.
bool is_letter(char32_t c);
bool is_digit(char32_t c);
bool is_punct(char32_t c);

/// Levenshtein distance over code points.
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

/// Lowercases ASCII, drops '.', and trims digits and punctuation from the
/// end ("Fig.3:" -> "fig").
std::u32string keyword_key(std::string_view word);

}  // namespace figcap::text
