#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Minimal UTF-8 helpers. A "character" everywhere in this library is one
// Unicode scalar value; malformed bytes count as one character each.

namespace gendfir::utf8 {

/// Byte length of the sequence starting at lead byte `c`, or 0 if `c` cannot start one.
constexpr std::size_t sequence_length(unsigned char c) noexcept {
    if (c < 0x80) return 1;
    if ((c & 0xE0) == 0xC0) return 2;
    if ((c & 0xF0) == 0xE0) return 3;
    if ((c & 0xF8) == 0xF0) return 4;
    return 0;
}

/// Byte offsets of each scalar in `text`, followed by text.size().
inline std::vector<std::size_t> scalar_offsets(std::string_view text) {
    std::vector<std::size_t> offsets;
    offsets.reserve(text.size() + 1);
    std::size_t i = 0;
    while (i < text.size()) {
        offsets.push_back(i);
        std::size_t len = sequence_length(static_cast<unsigned char>(text[i]));
        bool ok = len != 0 && i + len <= text.size();
        for (std::size_t k = 1; ok && k < len; ++k) {
            ok = (static_cast<unsigned char>(text[i + k]) & 0xC0) == 0x80;
        }
        i += ok ? len : 1;
    }
    offsets.push_back(text.size());
    return offsets;
}

inline std::size_t scalar_count(std::string_view text) {
    std::size_t n = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t len = sequence_length(static_cast<unsigned char>(text[i]));
        bool ok = len != 0 && i + len <= text.size();
        for (std::size_t k = 1; ok && k < len; ++k) {
            ok = (static_cast<unsigned char>(text[i + k]) & 0xC0) == 0x80;
        }
        i += ok ? len : 1;
        ++n;
    }
    return n;
}

/// Lowercases A-Z only; every other byte is copied unchanged.
inline std::string ascii_lower(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

inline bool is_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

}  // namespace gendfir::utf8
