// Whitespace/punctuation normalization with an exact per-character origin
// map back to the raw post, plus space tokenization. Everything downstream
// (tag targets, span targets, predicted offsets) goes through this map, so
// normalization must never lose or reorder characters.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "toxspan/unicode.hpp"

namespace toxspan {

// Sorted ascending, unique code point indices into some original text.
using OffsetSet = std::vector<int32_t>;

struct RawPost {
    std::string text;  // UTF-8
    OffsetSet gold;    // toxic character offsets, may be empty
};

inline constexpr int32_t kNoOrigin = -1;

struct NormalizedText {
    std::u32string text;
    // origin[j] = code point index in the original text, or kNoOrigin for
    // inserted characters (always single spaces).
    std::vector<int32_t> origin;

    std::string text_utf8() const { return encode_utf8(text); }
};

struct Token {
    std::string surface;  // UTF-8, never contains spaces
    int32_t norm_start = 0;
    int32_t norm_end = 0;  // inclusive
    int32_t orig_start = 0;
    int32_t orig_end = 0;  // inclusive
};

namespace detail {

enum class CharKind { Space, AbbrevApostrophe, PunctSymbol, Other };

// An apostrophe between two letters starts a clitic ("don 't"); it gets a
// space inserted before it but stays attached to what follows.
inline CharKind classify(const std::u32string& s, std::size_t i) {
    char32_t cp = s[i];
    if (is_space(cp)) return CharKind::Space;
    if (cp == U'\'' && i > 0 && i + 1 < s.size() && is_letter(s[i - 1]) &&
        is_letter(s[i + 1])) {
        return CharKind::AbbrevApostrophe;
    }
    if (is_punct_or_symbol(cp)) return CharKind::PunctSymbol;
    return CharKind::Other;
}

inline bool needs_split(CharKind prev, CharKind cur) {
    if (prev == CharKind::AbbrevApostrophe) return false;
    if (cur == CharKind::AbbrevApostrophe) return true;
    return prev == CharKind::PunctSymbol || cur == CharKind::PunctSymbol;
}

}  // namespace detail

inline NormalizedText normalize(const std::u32string& text) {
    using detail::CharKind;
    NormalizedText nt;
    nt.text.reserve(text.size());
    nt.origin.reserve(text.size());
    CharKind last_kind = CharKind::Space;  // as if preceded by a space
    for (std::size_t i = 0; i < text.size(); ++i) {
        CharKind kind = detail::classify(text, i);
        if (kind == CharKind::Space) {
            nt.text.push_back(U' ');
            nt.origin.push_back(static_cast<int32_t>(i));
            last_kind = CharKind::Space;
            continue;
        }
        if (!nt.text.empty() && nt.text.back() != U' ' &&
            detail::needs_split(last_kind, kind)) {
            nt.text.push_back(U' ');
            nt.origin.push_back(kNoOrigin);
        }
        nt.text.push_back(text[i]);
        nt.origin.push_back(static_cast<int32_t>(i));
        last_kind = kind;
    }
    return nt;
}

inline NormalizedText normalize_utf8(std::string_view text) {
    return normalize(decode_utf8(text));
}

inline std::vector<Token> tokenize(const NormalizedText& nt) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    const std::size_t n = nt.text.size();
    while (i < n) {
        if (nt.text[i] == U' ') {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && nt.text[j] != U' ') ++j;
        Token tok;
        tok.surface = encode_utf8(nt.text.substr(i, j - i));
        tok.norm_start = static_cast<int32_t>(i);
        tok.norm_end = static_cast<int32_t>(j - 1);
        // Non-space characters are never inserted, so origins are defined.
        tok.orig_start = nt.origin[i];
        tok.orig_end = nt.origin[j - 1];
        tokens.push_back(std::move(tok));
        i = j;
    }
    return tokens;
}

// Maps indices in normalized text back to original offsets; inserted
// characters vanish.
inline OffsetSet project_back(const NormalizedText& nt,
                              const OffsetSet& norm_indices) {
    OffsetSet out;
    out.reserve(norm_indices.size());
    for (int32_t j : norm_indices) {
        if (j < 0 || static_cast<std::size_t>(j) >= nt.text.size()) {
            throw std::out_of_range("project_back: normalized index " +
                                    std::to_string(j) + " out of range [0, " +
                                    std::to_string(nt.text.size()) + ")");
        }
        if (nt.origin[j] != kNoOrigin) out.push_back(nt.origin[j]);
    }
    return out;
}

// Whitespace-only tokenization of the raw text (the no-preprocessing
// ablation): offsets are identity, punctuation stays attached.
inline std::vector<Token> raw_tokenize(const std::u32string& text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (is_space(text[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !is_space(text[j])) ++j;
        Token tok;
        tok.surface = encode_utf8(text.substr(i, j - i));
        tok.norm_start = static_cast<int32_t>(i);
        tok.norm_end = static_cast<int32_t>(j - 1);
        tok.orig_start = static_cast<int32_t>(i);
        tok.orig_end = static_cast<int32_t>(j - 1);
        tokens.push_back(std::move(tok));
        i = j;
    }
    return tokens;
}

// Tokenization as the models consume it: the full normalize-and-split
// pipeline, or plain whitespace splitting when preprocessing is ablated.
inline std::vector<Token> tokenize_post(const std::string& text,
                                        bool use_preprocessing) {
    if (use_preprocessing) return tokenize(normalize_utf8(text));
    return raw_tokenize(decode_utf8(text));
}

}  // namespace toxspan
