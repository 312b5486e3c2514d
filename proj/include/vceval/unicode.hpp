#pragma once

#include <string>
#include <string_view>

namespace vceval::unicode {

std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

/// Han ideographs and Japanese kana; these are tokenized one codepoint at a time.
bool is_cjk(char32_t cp) noexcept;

/// Letters and digits of any script. Everything else separates tokens.
bool is_word_char(char32_t cp) noexcept;

bool is_space(char32_t cp) noexcept;

/// Simple case folding for scripts with case (Latin, Greek, Cyrillic). Other codepoints pass through.
char32_t to_lower(char32_t cp) noexcept;

std::u32string to_lower(std::u32string_view text);

std::string trim(std::string_view text);

}  // namespace vceval::unicode
