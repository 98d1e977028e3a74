// Character-offset precision/recall/F1 per post with the empty-set
// conventions, corpus aggregation, and the two result analyses: span-length
// buckets and the lexicon split.
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "toxspan/errors.hpp"
#include "toxspan/span_codec.hpp"
#include "toxspan/text_prep.hpp"

namespace toxspan {

struct PostEval {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t intersection_size = 0;
    std::int64_t pred_size = 0;
    std::int64_t gold_size = 0;
};

inline std::int64_t intersection_size(const OffsetSet& a, const OffsetSet& b) {
    std::int64_t count = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++count;
            ++i;
            ++j;
        }
    }
    return count;
}

// Conventions: both empty -> F1 = 1; exactly one empty -> F1 = 0;
// P + R = 0 with both nonempty -> F1 = 0.
inline PostEval post_f1(const OffsetSet& pred, const OffsetSet& gold) {
    PostEval ev;
    ev.pred_size = static_cast<std::int64_t>(pred.size());
    ev.gold_size = static_cast<std::int64_t>(gold.size());
    if (pred.empty() && gold.empty()) {
        ev.precision = 1.0;
        ev.recall = 1.0;
        ev.f1 = 1.0;
        return ev;
    }
    if (pred.empty() || gold.empty()) {
        ev.f1 = 0.0;
        return ev;
    }
    ev.intersection_size = intersection_size(pred, gold);
    ev.precision = static_cast<double>(ev.intersection_size) /
                   static_cast<double>(ev.pred_size);
    ev.recall = static_cast<double>(ev.intersection_size) /
                static_cast<double>(ev.gold_size);
    double denom = ev.precision + ev.recall;
    ev.f1 = denom > 0.0 ? 2.0 * ev.precision * ev.recall / denom : 0.0;
    return ev;
}

struct ScoredPost {
    OffsetSet pred;
    OffsetSet gold;
};

// Unweighted mean of per-post F1; micro=true pools the set sizes instead.
inline double corpus_f1(const std::vector<ScoredPost>& posts,
                        bool micro = false) {
    if (posts.empty()) throw std::invalid_argument("corpus_f1: empty corpus");
    if (!micro) {
        double total = 0.0;
        for (const ScoredPost& p : posts) total += post_f1(p.pred, p.gold).f1;
        return total / static_cast<double>(posts.size());
    }
    std::int64_t inter = 0, pred = 0, gold = 0;
    for (const ScoredPost& p : posts) {
        inter += intersection_size(p.pred, p.gold);
        pred += static_cast<std::int64_t>(p.pred.size());
        gold += static_cast<std::int64_t>(p.gold.size());
    }
    if (pred == 0 && gold == 0) return 1.0;
    if (pred == 0 || gold == 0) return 0.0;
    double prec = static_cast<double>(inter) / static_cast<double>(pred);
    double rec = static_cast<double>(inter) / static_cast<double>(gold);
    return prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
}

// A post with the token view needed to decompose gold into token spans.
struct AnalyzedPost {
    OffsetSet pred;
    OffsetSet gold;
    std::vector<Token> tokens;
};

inline constexpr int kNumBuckets = 3;  // word lengths 1, 2-4, >=5

inline int span_length_bucket(int token_len) {
    if (token_len <= 1) return 0;
    if (token_len <= 4) return 1;
    return 2;
}

inline const char* bucket_name(int bucket) {
    switch (bucket) {
        case 0: return "1";
        case 1: return "2-4";
        default: return ">=5";
    }
}

enum class BucketMode {
    // A post lands in the bucket of its longest gold span; whole-post F1.
    PostLongest,
    // Per bucket, restrict gold and pred to the character windows of the
    // gold spans in that length class; a post can appear in several buckets.
    PerSpan,
};

struct BucketReport {
    double f1[kNumBuckets] = {0.0, 0.0, 0.0};
    int count[kNumBuckets] = {0, 0, 0};
    int empty_gold_posts = 0;  // excluded from all buckets
    BucketMode mode = BucketMode::PostLongest;
};

inline BucketReport bucketed_f1(const std::vector<AnalyzedPost>& posts,
                                BucketMode mode = BucketMode::PostLongest) {
    BucketReport report;
    report.mode = mode;
    std::vector<ScoredPost> groups[kNumBuckets];
    for (const AnalyzedPost& post : posts) {
        if (post.gold.empty()) {
            ++report.empty_gold_posts;
            continue;
        }
        auto spans = offsets_to_token_spans(post.gold, post.tokens);
        if (spans.empty()) {
            ++report.empty_gold_posts;
            continue;
        }
        if (mode == BucketMode::PostLongest) {
            int longest = 0;
            for (const TokenSpan& sp : spans) {
                longest = std::max(longest, sp.e - sp.s + 1);
            }
            groups[span_length_bucket(longest)].push_back(
                {post.pred, post.gold});
            continue;
        }
        for (int bucket = 0; bucket < kNumBuckets; ++bucket) {
            std::vector<TokenSpan> in_class;
            for (const TokenSpan& sp : spans) {
                if (span_length_bucket(sp.e - sp.s + 1) == bucket) {
                    in_class.push_back(sp);
                }
            }
            if (in_class.empty()) continue;
            OffsetSet window =
                token_spans_to_offsets(in_class, post.tokens, true);
            ScoredPost restricted;
            restricted.gold = window;  // gold spans fill their windows
            for (int32_t c : post.pred) {
                if (std::binary_search(window.begin(), window.end(), c)) {
                    restricted.pred.push_back(c);
                }
            }
            groups[bucket].push_back(std::move(restricted));
        }
    }
    for (int bucket = 0; bucket < kNumBuckets; ++bucket) {
        report.count[bucket] = static_cast<int>(groups[bucket].size());
        if (!groups[bucket].empty()) {
            report.f1[bucket] = corpus_f1(groups[bucket]);
        }
    }
    return report;
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        c = static_cast<char>(
            std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

struct LexiconSplit {
    double f1_lexicon = 0.0;  // single-word gold spans from the lexicon
    double f1_other = 0.0;    // every other post with nonempty gold
    int count_lexicon = 0;
    int count_other = 0;
};

// Group A: gold is exactly one span, one token long, and that token's
// lowercased surface is in the lexicon. Group B: all other nonempty-gold
// posts. Empty-gold posts are excluded.
inline LexiconSplit lexicon_split_f1(const std::vector<AnalyzedPost>& posts,
                                     const std::set<std::string>& lexicon) {
    if (lexicon.empty()) {
        throw std::invalid_argument("lexicon_split_f1: empty lexicon");
    }
    std::vector<ScoredPost> in_lexicon, other;
    for (const AnalyzedPost& post : posts) {
        if (post.gold.empty()) continue;
        auto spans = offsets_to_token_spans(post.gold, post.tokens);
        bool single_lexicon_word = false;
        if (spans.size() == 1 && spans[0].s == spans[0].e) {
            const Token& tok =
                post.tokens[static_cast<std::size_t>(spans[0].s)];
            single_lexicon_word =
                lexicon.count(ascii_lower(tok.surface)) != 0;
        }
        (single_lexicon_word ? in_lexicon : other)
            .push_back({post.pred, post.gold});
    }
    LexiconSplit split;
    split.count_lexicon = static_cast<int>(in_lexicon.size());
    split.count_other = static_cast<int>(other.size());
    if (!in_lexicon.empty()) split.f1_lexicon = corpus_f1(in_lexicon);
    if (!other.empty()) split.f1_other = corpus_f1(other);
    return split;
}

// One lowercase word per line; '#' starts a comment; blank lines ignored.
inline std::set<std::string> read_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open lexicon file: " + path);
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                                 line.back() == '\t')) {
            line.pop_back();
        }
        std::size_t begin = line.find_first_not_of(" \t");
        if (begin == std::string::npos) continue;
        words.insert(ascii_lower(line.substr(begin)));
    }
    return words;
}

}  // namespace toxspan
