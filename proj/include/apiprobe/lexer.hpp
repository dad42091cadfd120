#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>

namespace apiprobe {

constexpr bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

constexpr bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

constexpr bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Calls fn(token, offset) for every identifier token. Runs of word characters
// that begin with a digit (numeric literals such as 0x1f or 10ul) are skipped
// whole, so they never yield identifier fragments.
void for_each_identifier(std::string_view text, const std::function<void(std::string_view, std::size_t)>& fn);

struct LexOptions {
    bool blank_comments = true;
    // Replace the contents of string, character and raw-string literals with
    // spaces. Quote characters and prefixes stay in place.
    bool blank_literals = false;
};

struct LexResult {
    std::string text;
    bool unterminated_block_comment = false;
};

// Character-level C/C++ lexer. Blanked bytes become spaces; newlines are always
// kept, so line numbers and byte columns of surviving text are unchanged.
LexResult blank_source(std::string_view source, LexOptions options);

}  // namespace apiprobe
