#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace convgqr {

/// True for the ASCII punctuation characters that are split into
/// standalone tokens. Non-ASCII bytes are treated as word characters,
/// so UTF-8 multi-byte sequences stay intact.
inline bool is_punct_char(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u);
}

inline bool is_space_char(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return u < 0x80 && std::isspace(u);
}

/// Word-level tokenizer shared by session formatting, indexing, and
/// analysis. Lowercases ASCII letters, emits each punctuation character
/// as its own token, splits on whitespace. Deterministic; empty input
/// yields an empty list.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    };
    for (char c : text) {
        if (is_space_char(c)) {
            flush();
        } else if (is_punct_char(c)) {
            flush();
            tokens.emplace_back(1, c);
        } else {
            unsigned char u = static_cast<unsigned char>(c);
            cur.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
        }
    }
    flush();
    return tokens;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

/// True if every character of the token is punctuation (used by the
/// analysis-side normalization, which drops punctuation tokens).
inline bool is_punct_token(std::string_view tok) {
    if (tok.empty()) return true;
    for (char c : tok)
        if (!is_punct_char(c)) return false;
    return true;
}

}  // namespace convgqr
