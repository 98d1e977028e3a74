// Lossless conversions between gold character-offset sets, token spans,
// and IO/BIO tag sequences, in both directions.
#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "toxspan/text_prep.hpp"

namespace toxspan {

enum class TagScheme { IO, BIO };

// Tag ids are stable across schemes; B exists only under BIO.
enum Tag : int { kTagO = 0, kTagI = 1, kTagB = 2 };

inline int num_tags(TagScheme scheme) {
    return scheme == TagScheme::IO ? 2 : 3;
}

inline const char* tag_name(int tag) {
    switch (tag) {
        case kTagO: return "O";
        case kTagI: return "I";
        case kTagB: return "B";
        default: return "?";
    }
}

struct TagSequence {
    TagScheme scheme = TagScheme::IO;
    std::vector<int> tags;  // one per token
};

struct TokenSpan {
    int32_t s = 0;  // start token index
    int32_t e = 0;  // end token index, inclusive

    friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

enum class OverlapPolicy { Any, Majority };

// A token belongs to the span cover if its original character range meets
// the gold set (Any: at least one character; Majority: more than half).
// Output spans are the maximal runs of consecutive covered tokens.
inline std::vector<TokenSpan> offsets_to_token_spans(
    const OffsetSet& gold, const std::vector<Token>& tokens,
    OverlapPolicy policy = OverlapPolicy::Any,
    std::vector<std::string>* warnings = nullptr) {
    if (!tokens.empty() && !gold.empty()) {
        int32_t last_end = tokens.back().orig_end;
        for (int32_t g : gold) {
            if (g > last_end) {
                if (warnings) {
                    warnings->push_back("gold offset " + std::to_string(g) +
                                        " lies beyond the last token (end " +
                                        std::to_string(last_end) +
                                        "); ignored");
                }
                break;  // gold is sorted, one note is enough
            }
        }
    }
    std::vector<bool> covered(tokens.size(), false);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const Token& tok = tokens[t];
        auto lo = std::lower_bound(gold.begin(), gold.end(), tok.orig_start);
        auto hi = std::upper_bound(gold.begin(), gold.end(), tok.orig_end);
        auto hit = static_cast<int32_t>(hi - lo);
        int32_t width = tok.orig_end - tok.orig_start + 1;
        covered[t] = policy == OverlapPolicy::Any ? hit > 0 : 2 * hit > width;
    }
    std::vector<TokenSpan> spans;
    std::size_t t = 0;
    while (t < tokens.size()) {
        if (!covered[t]) {
            ++t;
            continue;
        }
        std::size_t u = t;
        while (u + 1 < tokens.size() && covered[u + 1]) ++u;
        spans.push_back({static_cast<int32_t>(t), static_cast<int32_t>(u)});
        t = u + 1;
    }
    return spans;
}

inline TagSequence token_spans_to_tags(const std::vector<TokenSpan>& spans,
                                       int n, TagScheme scheme) {
    TagSequence seq;
    seq.scheme = scheme;
    seq.tags.assign(static_cast<std::size_t>(n), kTagO);
    int32_t prev_end = -1;
    for (const TokenSpan& sp : spans) {
        if (sp.s < 0 || sp.e < sp.s || sp.e >= n) {
            throw std::invalid_argument("token span [" + std::to_string(sp.s) +
                                        ", " + std::to_string(sp.e) +
                                        "] out of bounds for n=" +
                                        std::to_string(n));
        }
        if (sp.s <= prev_end) {
            throw std::invalid_argument(
                "token spans must be sorted and disjoint");
        }
        prev_end = sp.e;
        for (int32_t t = sp.s; t <= sp.e; ++t) {
            seq.tags[static_cast<std::size_t>(t)] =
                (scheme == TagScheme::BIO && t == sp.s) ? kTagB : kTagI;
        }
    }
    return seq;
}

// Total decoding: under BIO an I with no preceding B or I is repaired to B,
// so arbitrary model output always decodes.
inline std::vector<TokenSpan> tags_to_token_spans(const TagSequence& seq) {
    std::vector<TokenSpan> spans;
    const auto n = static_cast<int32_t>(seq.tags.size());
    for (int32_t t = 0; t < n; ++t) {
        int tag = seq.tags[static_cast<std::size_t>(t)];
        if (tag == kTagO) continue;
        bool starts;
        if (seq.scheme == TagScheme::IO) {
            starts = spans.empty() || spans.back().e != t - 1;
        } else {
            starts = tag == kTagB || spans.empty() || spans.back().e != t - 1;
        }
        if (starts) {
            spans.push_back({t, t});
        } else {
            spans.back().e = t;
        }
    }
    return spans;
}

// include_gaps=true emits all original characters between the first and
// last token of the span, whitespace included; false emits only characters
// covered by the member tokens.
inline OffsetSet token_spans_to_offsets(const std::vector<TokenSpan>& spans,
                                        const std::vector<Token>& tokens,
                                        bool include_gaps = true) {
    OffsetSet out;
    for (const TokenSpan& sp : spans) {
        if (sp.s < 0 || sp.e < sp.s ||
            static_cast<std::size_t>(sp.e) >= tokens.size()) {
            throw std::invalid_argument("token span out of bounds");
        }
        if (include_gaps) {
            for (int32_t c = tokens[static_cast<std::size_t>(sp.s)].orig_start;
                 c <= tokens[static_cast<std::size_t>(sp.e)].orig_end; ++c) {
                out.push_back(c);
            }
        } else {
            for (int32_t t = sp.s; t <= sp.e; ++t) {
                const Token& tok = tokens[static_cast<std::size_t>(t)];
                for (int32_t c = tok.orig_start; c <= tok.orig_end; ++c) {
                    out.push_back(c);
                }
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace toxspan
