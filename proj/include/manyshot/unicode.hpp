#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace manyshot::unicode {

// Invalid UTF-8 bytes decode to U+FFFD one byte at a time, so decoding never
// fails and every input byte is consumed.
std::u32string decode(std::string_view utf8);
// Decodes the code point starting at byte `pos`; `length` receives its byte size.
char32_t decode_at(std::string_view utf8, std::size_t pos, std::size_t& length);
std::string encode(std::u32string_view cps);
void append_utf8(std::string& out, char32_t cp);

bool is_space(char32_t cp);
bool is_letter(char32_t cp);
bool is_upper(char32_t cp);
bool is_digit(char32_t cp);
bool is_alnum(char32_t cp);
// Unicode general categories P* and S*.
bool is_punct_or_symbol(char32_t cp);
// General category S* only (math, currency, modifier and other symbols).
bool is_symbol(char32_t cp);
// Letters whose script is Latin; marks, digits and punctuation are script-neutral.
bool is_latin_letter(char32_t cp);
bool is_opening_quote(char32_t cp);
bool is_closing_quote_or_bracket(char32_t cp);
char32_t to_lower(char32_t cp);

std::string_view trim(std::string_view text);
// Pieces separated by runs of Unicode whitespace, as views into `text`.
std::vector<std::string_view> split_whitespace(std::string_view text);

}  // namespace manyshot::unicode
