// Shared token encoder for both architectures: word lookup embeddings
// concatenated with character-BiLSTM word embeddings, optionally passed
// through a stacked sentence BiLSTM. The lookup tables are plain trainable
// parameters built from the training vocabulary.
#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "toxspan/graph.hpp"
#include "toxspan/nn.hpp"
#include "toxspan/text_prep.hpp"
#include "toxspan/unicode.hpp"

namespace toxspan {

// Ids are first-seen order starting at 1; id 0 is the reserved UNK row in
// both tables.
struct Vocab {
    std::vector<std::string> words;
    std::vector<char32_t> chars;
    std::unordered_map<std::string, int> word_ids;
    std::unordered_map<char32_t, int> char_ids;

    int word_id(const std::string& surface) const {
        auto it = word_ids.find(surface);
        return it == word_ids.end() ? 0 : it->second;
    }

    std::vector<int> char_id_seq(const std::string& surface) const {
        std::vector<int> ids;
        for (char32_t cp : decode_utf8(surface)) {
            auto it = char_ids.find(cp);
            ids.push_back(it == char_ids.end() ? 0 : it->second);
        }
        return ids;
    }

    int word_rows() const { return static_cast<int>(words.size()) + 1; }
    int char_rows() const { return static_cast<int>(chars.size()) + 1; }

    void add_word(const std::string& surface) {
        if (word_ids.emplace(surface, word_rows()).second) {
            words.push_back(surface);
        }
    }

    void add_chars(const std::string& surface) {
        for (char32_t cp : decode_utf8(surface)) {
            if (char_ids.emplace(cp, char_rows()).second) chars.push_back(cp);
        }
    }

    static Vocab build(const std::vector<std::vector<Token>>& sentences) {
        Vocab vocab;
        for (const auto& tokens : sentences) {
            for (const Token& tok : tokens) {
                vocab.add_word(tok.surface);
                vocab.add_chars(tok.surface);
            }
        }
        return vocab;
    }

    static Vocab from_lists(std::vector<std::string> word_list,
                            std::vector<char32_t> char_list) {
        Vocab vocab;
        vocab.words = std::move(word_list);
        vocab.chars = std::move(char_list);
        for (std::size_t i = 0; i < vocab.words.size(); ++i) {
            vocab.word_ids.emplace(vocab.words[i], static_cast<int>(i) + 1);
        }
        for (std::size_t i = 0; i < vocab.chars.size(); ++i) {
            vocab.char_ids.emplace(vocab.chars[i], static_cast<int>(i) + 1);
        }
        return vocab;
    }
};

struct EncoderConfig {
    int word_dim = 100;
    int char_dim = 25;
    int char_hidden = 25;
    int lstm_hidden = 256;
    int lstm_layers = 1;
    double emb_dropout = 0.0;
    double lstm_dropout = 0.0;  // between stacked layers
    bool use_sentence_lstm = true;

    int token_rep_dim() const { return word_dim + 2 * char_hidden; }
    int output_dim() const {
        return use_sentence_lstm ? 2 * lstm_hidden : token_rep_dim();
    }
};

inline void init_encoder(ModelParams& params, Rng& rng,
                         const EncoderConfig& config, const Vocab& vocab) {
    init_embedding(params, rng, "word_emb", vocab.word_rows(),
                   config.word_dim);
    init_embedding(params, rng, "char_emb", vocab.char_rows(),
                   config.char_dim);
    init_bilstm(params, rng, "char_lstm", config.char_dim,
                config.char_hidden);
    if (config.use_sentence_lstm) {
        int in_dim = config.token_rep_dim();
        for (int layer = 0; layer < config.lstm_layers; ++layer) {
            init_bilstm(params, rng, "lstm" + std::to_string(layer), in_dim,
                        config.lstm_hidden);
            in_dim = 2 * config.lstm_hidden;
        }
    }
}

// Per-token representations x_1..x_n as graph vars.
inline std::vector<Graph::Var> encode_tokens(Graph& g, ModelParams& params,
                                             const EncoderConfig& config,
                                             const Vocab& vocab,
                                             const std::vector<Token>& tokens) {
    std::vector<Graph::Var> xs;
    xs.reserve(tokens.size());
    for (const Token& tok : tokens) {
        Graph::Var wv = g.embed_row("word_emb", vocab.word_id(tok.surface));
        Graph::Var cv = char_word_embedding(g, params, "char_emb", "char_lstm",
                                            vocab.char_id_seq(tok.surface));
        xs.push_back(g.dropout(g.concat(wv, cv), config.emb_dropout));
    }
    if (config.use_sentence_lstm) {
        for (int layer = 0; layer < config.lstm_layers; ++layer) {
            if (layer > 0) {
                for (Graph::Var& x : xs) x = g.dropout(x, config.lstm_dropout);
            }
            xs = bilstm(g, params, "lstm" + std::to_string(layer), xs);
        }
    }
    return xs;
}

}  // namespace toxspan
