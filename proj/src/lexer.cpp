#include "apiprobe/lexer.hpp"

#include <array>

namespace apiprobe {

namespace {

// Length of the preprocessing number starting at i (digits, letters, '_',
// '.', digit separators, and signs following an exponent marker).
std::size_t pp_number_length(std::string_view text, std::size_t i) {
    std::size_t j = i;
    while (j < text.size()) {
        const char c = text[j];
        if (is_ident_char(c) || c == '.') {
            ++j;
        } else if ((c == '+' || c == '-') && j > i &&
                   (text[j - 1] == 'e' || text[j - 1] == 'E' || text[j - 1] == 'p' || text[j - 1] == 'P')) {
            ++j;
        } else if (c == '\'' && j + 1 < text.size() && is_ident_char(text[j + 1])) {
            ++j;
        } else {
            break;
        }
    }
    return j - i;
}

std::string_view word_before(std::string_view text, std::size_t i) {
    std::size_t j = i;
    while (j > 0 && is_ident_char(text[j - 1])) --j;
    return text.substr(j, i - j);
}

bool is_raw_prefix(std::string_view w) {
    static constexpr std::array<std::string_view, 5> prefixes{"R", "u8R", "uR", "UR", "LR"};
    for (auto p : prefixes)
        if (w == p) return true;
    return false;
}

bool starts_with_digit(std::string_view w) { return !w.empty() && is_digit(w.front()); }

enum class State { Code, LineComment, BlockComment, Quoted, Raw };

}  // namespace

void for_each_identifier(std::string_view text, const std::function<void(std::string_view, std::size_t)>& fn) {
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const char c = text[i];
        if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(text[i + 1]))) {
            i += pp_number_length(text, i);
        } else if (is_ident_start(c)) {
            std::size_t j = i + 1;
            while (j < n && is_ident_char(text[j])) ++j;
            fn(text.substr(i, j - i), i);
            i = j;
        } else {
            ++i;
        }
    }
}

LexResult blank_source(std::string_view src, LexOptions options) {
    LexResult result;
    std::string& out = result.text;
    out.assign(src);

    const std::size_t n = src.size();
    State state = State::Code;
    char quote = 0;
    std::string raw_terminator;  // ")delim\""

    auto blank = [&](std::size_t pos, bool enabled) {
        if (enabled && out[pos] != '\n') out[pos] = ' ';
    };

    std::size_t i = 0;
    while (i < n) {
        const char c = src[i];
        switch (state) {
            case State::Code:
                if (c == '/' && i + 1 < n && src[i + 1] == '/') {
                    state = State::LineComment;
                    blank(i, options.blank_comments);
                    blank(i + 1, options.blank_comments);
                    i += 2;
                } else if (c == '/' && i + 1 < n && src[i + 1] == '*') {
                    state = State::BlockComment;
                    blank(i, options.blank_comments);
                    blank(i + 1, options.blank_comments);
                    i += 2;
                } else if (c == '"') {
                    const auto prefix = word_before(src, i);
                    if (is_raw_prefix(prefix)) {
                        // R"delim( ... )delim"
                        std::size_t j = i + 1;
                        while (j < n && j - i - 1 <= 16 && src[j] != '(' && src[j] != ')' && src[j] != '\\' &&
                               src[j] != ' ' && src[j] != '"' && src[j] != '\n')
                            ++j;
                        if (j < n && src[j] == '(' && j - i - 1 <= 16) {
                            raw_terminator = ")" + std::string(src.substr(i + 1, j - i - 1)) + "\"";
                            state = State::Raw;
                            for (std::size_t k = i + 1; k <= j; ++k) blank(k, options.blank_literals);
                            i = j + 1;
                            break;
                        }
                    }
                    state = State::Quoted;
                    quote = '"';
                    ++i;
                } else if (c == '\'') {
                    if (starts_with_digit(word_before(src, i))) {
                        ++i;  // digit separator
                    } else {
                        state = State::Quoted;
                        quote = '\'';
                        ++i;
                    }
                } else {
                    ++i;
                }
                break;

            case State::LineComment:
                if (c == '\n') {
                    state = State::Code;
                    ++i;
                } else if (c == '\\' && i + 1 < n && (src[i + 1] == '\n' || src[i + 1] == '\r')) {
                    // Backslash-newline splices the next line into the comment.
                    blank(i, options.blank_comments);
                    ++i;
                    if (src[i] == '\r') {
                        blank(i, options.blank_comments);
                        ++i;
                    }
                    if (i < n && src[i] == '\n') ++i;
                } else {
                    blank(i, options.blank_comments);
                    ++i;
                }
                break;

            case State::BlockComment:
                if (c == '*' && i + 1 < n && src[i + 1] == '/') {
                    blank(i, options.blank_comments);
                    blank(i + 1, options.blank_comments);
                    i += 2;
                    state = State::Code;
                } else {
                    blank(i, options.blank_comments);
                    ++i;
                }
                break;

            case State::Quoted:
                if (c == '\\' && i + 1 < n) {
                    blank(i, options.blank_literals);
                    blank(i + 1, options.blank_literals);
                    i += 2;
                } else if (c == quote) {
                    state = State::Code;
                    ++i;
                } else if (c == '\n') {
                    // Unterminated literal ends at end of line.
                    state = State::Code;
                    ++i;
                } else {
                    blank(i, options.blank_literals);
                    ++i;
                }
                break;

            case State::Raw:
                if (c == ')' && src.substr(i, raw_terminator.size()) == raw_terminator) {
                    for (std::size_t k = i; k + 1 < i + raw_terminator.size(); ++k) blank(k, options.blank_literals);
                    i += raw_terminator.size();
                    state = State::Code;
                } else {
                    blank(i, options.blank_literals);
                    ++i;
                }
                break;
        }
    }
    result.unterminated_block_comment = state == State::BlockComment;
    return result;
}

}  // namespace apiprobe
