#pragma once

#include <string>
#include <string_view>

namespace mthinker::unicode {

/// Decodes UTF-8; malformed bytes become U+FFFD.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view text);
void append(std::string& out, char32_t cp);

std::string nfc(std::string_view utf8);
/// NFC followed by full Unicode case folding.
std::string fold(std::string_view utf8);

/// Alphabetic characters and combining marks (Thai vowel signs count).
bool is_letter(char32_t cp);
bool is_space(char32_t cp);
char32_t to_lower(char32_t cp);

}  // namespace mthinker::unicode
