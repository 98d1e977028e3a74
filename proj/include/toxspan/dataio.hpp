// File formats: the task's spans/text CSV (RFC 4180), prediction output,
// versioned text checkpoints, and the seeded synthetic corpus generator
// used by the desk-scale test suites.
#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "toxspan/errors.hpp"
#include "toxspan/tensor.hpp"
#include "toxspan/text_prep.hpp"

namespace toxspan {

// ---------------------------------------------------------------------------
// CSV core.

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> row_lines;  // 1-based line where each row starts
};

// RFC 4180: quoted fields may contain commas, doubled quotes and newlines.
inline CsvTable parse_csv(const std::string& content) {
    CsvTable table;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;
    int line = 1, row_line = 1;
    auto end_field = [&]() {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&]() {
        end_field();
        if (table.header.empty()) {
            table.header = std::move(row);
        } else {
            table.rows.push_back(std::move(row));
            table.row_lines.push_back(row_line);
        }
        row.clear();
        row_started = false;
    };
    for (std::size_t i = 0; i < content.size(); ++i) {
        char c = content[i];
        if (!row_started) {
            row_started = true;
            row_line = line;
        }
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                ++line;
                end_row();
                break;
            default:
                field.push_back(c);
        }
    }
    if (in_quotes) throw DataError("csv: unterminated quoted field");
    if (row_started || !field.empty() || !row.empty()) end_row();
    return table;
}

inline std::string csv_escape(const std::string& field) {
    bool needs_quotes = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

// ---------------------------------------------------------------------------
// Task data: rows of (spans, text).

// Parses a bracketed integer list literal such as "[3, 4, 5]" or "[]".
inline OffsetSet parse_span_literal(const std::string& literal) {
    std::size_t begin = literal.find_first_not_of(" \t");
    std::size_t end = literal.find_last_not_of(" \t");
    if (begin == std::string::npos || literal[begin] != '[' ||
        literal[end] != ']') {
        throw DataError("malformed span literal: '" + literal + "'");
    }
    OffsetSet out;
    std::size_t i = begin + 1;
    while (i < end) {
        while (i < end && (literal[i] == ' ' || literal[i] == ',')) ++i;
        if (i >= end) break;
        char* after = nullptr;
        long v = std::strtol(literal.c_str() + i, &after, 10);
        if (after == literal.c_str() + i) {
            throw DataError("malformed span literal: '" + literal + "'");
        }
        out.push_back(static_cast<int32_t>(v));
        i = static_cast<std::size_t>(after - literal.c_str());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::string format_span_literal(const OffsetSet& spans) {
    std::string out = "[";
    for (std::size_t i = 0; i < spans.size(); ++i) {
        if (i > 0) out += ", ";
        out += std::to_string(spans[i]);
    }
    out += "]";
    return out;
}

struct ReadStats {
    int skipped = 0;  // lenient mode only
};

// Reads a spans/text CSV. Offsets are validated as code point indices into
// the text; strict mode aborts on the first bad record, lenient mode skips
// and counts.
inline std::vector<RawPost> read_tsd_csv(const std::string& path,
                                         bool strict = true,
                                         ReadStats* stats = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open csv file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    CsvTable table = parse_csv(buffer.str());
    int spans_col = -1, text_col = -1;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (table.header[c] == "spans") spans_col = static_cast<int>(c);
        if (table.header[c] == "text") text_col = static_cast<int>(c);
    }
    if (spans_col < 0 || text_col < 0) {
        throw DataError(path + ": header must contain 'spans' and 'text'");
    }
    std::vector<RawPost> posts;
    posts.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        auto fail = [&](const std::string& why) {
            std::string msg = path + ":" + std::to_string(table.row_lines[r]) +
                              ": " + why;
            if (strict) throw DataError(msg);
            if (stats) ++stats->skipped;
        };
        if (static_cast<int>(row.size()) <= std::max(spans_col, text_col)) {
            fail("row has too few fields");
            continue;
        }
        RawPost post;
        post.text = row[static_cast<std::size_t>(text_col)];
        try {
            post.gold = parse_span_literal(row[static_cast<std::size_t>(spans_col)]);
        } catch (const DataError& e) {
            fail(e.what());
            continue;
        }
        auto text_len = static_cast<int32_t>(decode_utf8(post.text).size());
        bool in_range = true;
        for (int32_t g : post.gold) {
            if (g < 0 || g >= text_len) {
                fail("span offset " + std::to_string(g) +
                     " out of range for text of length " +
                     std::to_string(text_len));
                in_range = false;
                break;
            }
        }
        if (!in_range) continue;
        posts.push_back(std::move(post));
    }
    return posts;
}

inline void write_tsd_rows(std::ostream& out, const std::string& text,
                           const OffsetSet& spans) {
    out << csv_escape(format_span_literal(spans)) << ","
        << csv_escape(text) << "\n";
}

inline void write_tsd_csv(const std::vector<RawPost>& posts,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write csv file: " + path);
    out << "spans,text\n";
    for (const RawPost& post : posts) write_tsd_rows(out, post.text, post.gold);
}

// Same convention as the input format, one prediction set per record.
inline void write_predictions(const std::vector<RawPost>& records,
                              const std::vector<OffsetSet>& predictions,
                              const std::string& path) {
    if (records.size() != predictions.size()) {
        throw DataError("write_predictions: " + std::to_string(records.size()) +
                        " records vs " + std::to_string(predictions.size()) +
                        " predictions");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write csv file: " + path);
    out << "spans,text\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        write_tsd_rows(out, records[i].text, predictions[i]);
    }
}

// ---------------------------------------------------------------------------
// Checkpoints: versioned, self-describing text format. Doubles are printed
// with %.17g, which round-trips IEEE 754 exactly, so save -> load -> save
// is byte-identical.

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointMagic = "TOXSPAN-CHECKPOINT";

struct Checkpoint {
    int format_version = kCheckpointVersion;
    std::map<std::string, std::string> config;
    std::vector<std::string> vocab_words;  // ids 1..N; 0 is the UNK row
    std::vector<char32_t> vocab_chars;     // ids 1..N; 0 is the UNK row
    ModelParams params;
};

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << kCheckpointMagic << " " << ckpt.format_version << "\n";
    out << "[config]\n";
    for (const auto& [k, v] : ckpt.config) out << k << " = " << v << "\n";
    out << "[vocab.words]\n" << ckpt.vocab_words.size() << "\n";
    for (const std::string& w : ckpt.vocab_words) out << w << "\n";
    out << "[vocab.chars]\n" << ckpt.vocab_chars.size() << "\n";
    for (char32_t c : ckpt.vocab_chars) {
        out << static_cast<std::uint32_t>(c) << "\n";
    }
    out << "[params]\n" << ckpt.params.all().size() << "\n";
    for (const auto& [name, t] : ckpt.params.all()) {
        out << name << " " << t.rank();
        for (int d : t.shape) out << " " << d;
        out << "\n";
        for (std::int64_t i = 0; i < t.size(); ++i) {
            if (i > 0) out << " ";
            out << format_double(t.data[static_cast<std::size_t>(i)]);
        }
        out << "\n";
    }
    out << "end\n";
}

namespace detail {

inline std::string checkpoint_line(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError(path + ": truncated checkpoint");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace detail

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    Checkpoint ckpt;
    std::string line = detail::checkpoint_line(in, path);
    {
        std::istringstream head(line);
        std::string magic;
        int version = -1;
        head >> magic >> version;
        if (magic != kCheckpointMagic) {
            throw DataError(path + ": not a checkpoint file");
        }
        if (version != kCheckpointVersion) {
            throw DataError(path + ": unsupported checkpoint version " +
                            std::to_string(version));
        }
        ckpt.format_version = version;
    }
    if (detail::checkpoint_line(in, path) != "[config]") {
        throw DataError(path + ": expected [config] section");
    }
    while (true) {
        line = detail::checkpoint_line(in, path);
        if (line == "[vocab.words]") break;
        auto eq = line.find(" = ");
        if (eq == std::string::npos) {
            throw DataError(path + ": malformed config line: " + line);
        }
        ckpt.config[line.substr(0, eq)] = line.substr(eq + 3);
    }
    std::size_t word_count = std::stoul(detail::checkpoint_line(in, path));
    ckpt.vocab_words.reserve(word_count);
    for (std::size_t i = 0; i < word_count; ++i) {
        ckpt.vocab_words.push_back(detail::checkpoint_line(in, path));
    }
    if (detail::checkpoint_line(in, path) != "[vocab.chars]") {
        throw DataError(path + ": expected [vocab.chars] section");
    }
    std::size_t char_count = std::stoul(detail::checkpoint_line(in, path));
    ckpt.vocab_chars.reserve(char_count);
    for (std::size_t i = 0; i < char_count; ++i) {
        ckpt.vocab_chars.push_back(static_cast<char32_t>(
            std::stoul(detail::checkpoint_line(in, path))));
    }
    if (detail::checkpoint_line(in, path) != "[params]") {
        throw DataError(path + ": expected [params] section");
    }
    std::size_t param_count = std::stoul(detail::checkpoint_line(in, path));
    for (std::size_t p = 0; p < param_count; ++p) {
        std::istringstream meta(detail::checkpoint_line(in, path));
        std::string name;
        int rank = 0;
        meta >> name >> rank;
        if (name.empty() || rank < 0 || rank > 8) {
            throw DataError(path + ": malformed parameter header");
        }
        std::vector<int> shape;
        for (int d = 0; d < rank; ++d) {
            int dim = 0;
            if (!(meta >> dim) || dim <= 0) {
                throw DataError(path + ": bad shape for parameter " + name);
            }
            shape.push_back(dim);
        }
        Tensor& t = ckpt.params.add(name, shape);
        std::istringstream values(detail::checkpoint_line(in, path));
        for (std::int64_t i = 0; i < t.size(); ++i) {
            if (!(values >> t.data[static_cast<std::size_t>(i)])) {
                throw DataError(path + ": parameter " + name + " expects " +
                                std::to_string(t.size()) +
                                " values, file has fewer");
            }
        }
        double extra;
        if (values >> extra) {
            throw DataError(path + ": parameter " + name +
                            " has more values than its shape admits");
        }
    }
    if (detail::checkpoint_line(in, path) != "end") {
        throw DataError(path + ": missing end marker");
    }
    return ckpt;
}

// ---------------------------------------------------------------------------
// Synthetic corpora. Toxic spans are planted at known character ranges, so
// the gold annotations are exact by construction.

struct SynthOptions {
    double empty_gold_fraction = 0.15;
    // false: multi-word spans are phrases of lexicon words (fully learnable
    // from token identity). true: a lexicon word followed by neutral words,
    // so longer spans are only partially recoverable without context.
    bool contextual_multiword = false;
    int min_tokens = 6;
    int max_tokens = 14;
    double second_span_prob = 0.25;
    double punct_prob = 0.1;
};

namespace detail {

inline std::string make_pseudo_word(Rng& rng) {
    static const char consonants[] = "bdfgklmnprstvz";
    static const char vowels[] = "aeiou";
    int syllables = 2 + static_cast<int>(rng.uniform_int(2));
    std::string w;
    for (int s = 0; s < syllables; ++s) {
        w.push_back(consonants[rng.uniform_int(sizeof(consonants) - 1)]);
        w.push_back(vowels[rng.uniform_int(sizeof(vowels) - 1)]);
    }
    return w;
}

}  // namespace detail

// span_length_mix are the probabilities of planting a span of word length
// 1, 2-4, and >=5 respectively (normalized internally).
inline std::vector<RawPost> gen_synthetic(
    std::uint64_t seed, int n_posts, int vocab_size,
    const std::vector<std::string>& lexicon,
    const std::array<double, 3>& span_length_mix,
    const SynthOptions& opt = {}) {
    if (lexicon.empty()) {
        throw std::invalid_argument("gen_synthetic: empty lexicon");
    }
    Rng rng(seed);
    std::set<std::string> taken(lexicon.begin(), lexicon.end());
    std::vector<std::string> neutral;
    while (static_cast<int>(neutral.size()) < vocab_size) {
        std::string w = detail::make_pseudo_word(rng);
        if (taken.insert(w).second) neutral.push_back(w);
    }
    double mix_total =
        span_length_mix[0] + span_length_mix[1] + span_length_mix[2];
    if (mix_total <= 0.0) {
        throw std::invalid_argument("gen_synthetic: degenerate span mix");
    }

    auto sample_class = [&]() {
        double u = rng.uniform() * mix_total;
        if (u < span_length_mix[0]) return 0;
        if (u < span_length_mix[0] + span_length_mix[1]) return 1;
        return 2;
    };
    auto sample_neutral = [&]() {
        return neutral[rng.uniform_int(neutral.size())];
    };
    auto sample_toxic = [&]() {
        return lexicon[rng.uniform_int(lexicon.size())];
    };

    std::vector<RawPost> posts;
    posts.reserve(static_cast<std::size_t>(n_posts));
    for (int p = 0; p < n_posts; ++p) {
        int n_tokens = opt.min_tokens +
                       static_cast<int>(rng.uniform_int(
                           opt.max_tokens - opt.min_tokens + 1));
        struct Planted {
            int start;
            std::vector<std::string> words;
        };
        std::vector<Planted> planted;
        if (rng.uniform() >= opt.empty_gold_fraction) {
            int want = rng.uniform() < opt.second_span_prob ? 2 : 1;
            int cursor = 0;
            for (int s = 0; s < want; ++s) {
                int cls = sample_class();
                int len = cls == 0 ? 1
                          : cls == 1
                              ? 2 + static_cast<int>(rng.uniform_int(3))
                              : 5 + static_cast<int>(rng.uniform_int(3));
                // Random slack decouples span ends from sentence ends, so
                // span length is not recoverable from sentence structure.
                int slack = static_cast<int>(rng.uniform_int(5));
                n_tokens = std::max(n_tokens, cursor + len + 1 + slack);
                int lo = cursor;
                int hi = std::max(lo, n_tokens - len);
                int start = lo + static_cast<int>(rng.uniform_int(
                                     static_cast<std::uint64_t>(hi - lo + 1)));
                Planted span;
                span.start = start;
                for (int w = 0; w < len; ++w) {
                    bool toxic_word =
                        w == 0 || !opt.contextual_multiword;
                    span.words.push_back(toxic_word ? sample_toxic()
                                                    : sample_neutral());
                }
                planted.push_back(std::move(span));
                cursor = start + len + 1;  // gap token before the next span
                if (cursor >= n_tokens - 2) break;
            }
        }

        std::vector<std::string> tokens(static_cast<std::size_t>(n_tokens));
        std::vector<bool> is_planted(static_cast<std::size_t>(n_tokens), false);
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            tokens[i] = sample_neutral();
        }
        for (const Planted& span : planted) {
            for (std::size_t w = 0; w < span.words.size(); ++w) {
                tokens[static_cast<std::size_t>(span.start) + w] =
                    span.words[w];
                is_planted[static_cast<std::size_t>(span.start) + w] = true;
            }
        }
        // Attach punctuation to some neutral words so preprocessing matters.
        static const char puncts[] = "!?.,";
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (!is_planted[i] && rng.uniform() < opt.punct_prob) {
                tokens[i].push_back(puncts[rng.uniform_int(4)]);
            }
        }

        RawPost post;
        std::vector<int32_t> starts(tokens.size()), ends(tokens.size());
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i > 0) post.text.push_back(' ');
            starts[i] = static_cast<int32_t>(post.text.size());
            post.text += tokens[i];
            ends[i] = static_cast<int32_t>(post.text.size()) - 1;
        }
        for (const Planted& span : planted) {
            int32_t from = starts[static_cast<std::size_t>(span.start)];
            int32_t to = ends[static_cast<std::size_t>(span.start) +
                              span.words.size() - 1];
            for (int32_t c = from; c <= to; ++c) post.gold.push_back(c);
        }
        std::sort(post.gold.begin(), post.gold.end());
        posts.push_back(std::move(post));
    }
    return posts;
}

// The built-in test lexicon: benign stand-ins for the task's cuss words.
inline std::vector<std::string> default_test_lexicon() {
    return {"stupid", "idiot",  "moron",  "fool",   "clown",
            "donkey", "weasel", "turnip", "gnome",  "pest",
            "goblin", "lout",   "oaf",    "dunce",  "twit"};
}

}  // namespace toxspan
