#pragma once

#include <string>
#include <string_view>

namespace epu::unicode {

// Decodes one UTF-8 sequence starting at text[pos]. On malformed input returns
// U+FFFD and consumes a single byte. Advances pos past the sequence.
char32_t decode(std::string_view text, std::size_t& pos);

void append_utf8(std::string& out, char32_t cp);

// Character classes follow the C.UTF-8 locale tables (full Unicode on glibc);
// without that locale only ASCII is classified.
bool is_alnum(char32_t cp);
bool is_alpha(char32_t cp);
bool is_upper(char32_t cp);
bool is_lower(char32_t cp);
bool is_space(char32_t cp);
char32_t to_lower(char32_t cp);

/// Lowercases every code point.
std::string lowercase(std::string_view text);

}  // namespace epu::unicode
