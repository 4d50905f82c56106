#pragma once

#include <string>
#include <unordered_set>
#include <vector>

namespace rolerail {

// ASCII-only, locale-free lowercasing. Multi-byte UTF-8 sequences fall
// through untouched and act as token separators below.
inline char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + ('a' - 'A')) : c;
}

inline bool is_token_byte(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

/// Splits text into lowercase alphanumeric tokens. Every non-alphanumeric
/// byte is a separator.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char raw : text) {
        char c = ascii_lower(raw);
        if (is_token_byte(c)) {
            current.push_back(c);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

inline std::unordered_set<std::string> token_set(const std::string& text) {
    auto tokens = tokenize(text);
    return {tokens.begin(), tokens.end()};
}

}  // namespace rolerail
