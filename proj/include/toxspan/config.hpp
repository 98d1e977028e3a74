// Run configuration: a flat sectioned key = value file. Hyperparameter keys
// use the model tables' names verbatim ("BiLSTM size", "Learning rate");
// everything else is snake_case. Unknown keys are rejected.
#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "toxspan/biaffine.hpp"
#include "toxspan/dataio.hpp"
#include "toxspan/errors.hpp"
#include "toxspan/tagger.hpp"

namespace toxspan {

struct RunConfig;
inline void validate_run_config(const RunConfig& cfg);

struct RunConfig {
    std::string architecture = "tagger";  // tagger | biaffine
    std::uint64_t seed = 42;
    std::string train_path;
    std::string dev_path;
    TaggerConfig tagger;
    TrainSchedule tagger_schedule;
    BiaffineConfig biaffine;
    BiaffineSchedule biaffine_schedule;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& section, const std::string& key,
                       const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("[" + section + "] " + key + ": expected a boolean, got '" +
                      value + "'");
}

inline double parse_double(const std::string& section, const std::string& key,
                           const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key +
                          ": expected a number, got '" + value + "'");
    }
}

inline long parse_int(const std::string& section, const std::string& key,
                      const std::string& value) {
    try {
        std::size_t used = 0;
        long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key +
                          ": expected an integer, got '" + value + "'");
    }
}

inline OptimizerKind parse_optimizer(const std::string& section,
                                     const std::string& value) {
    std::string lower = ascii_lower(value);
    if (lower == "sgd") return OptimizerKind::Sgd;
    if (lower == "adam") return OptimizerKind::Adam;
    throw ConfigError("[" + section + "] Optimiser: expected sgd or adam, got '" +
                      value + "'");
}

inline TagScheme parse_scheme(const std::string& value) {
    std::string lower = ascii_lower(value);
    if (lower == "io") return TagScheme::IO;
    if (lower == "bio") return TagScheme::BIO;
    throw ConfigError("scheme: expected io or bio, got '" + value + "'");
}

}  // namespace detail

// Parses the sectioned key = value format; '#' starts a comment.
inline std::map<std::string, std::map<std::string, std::string>>
parse_config_sections(const std::string& content) {
    std::map<std::string, std::map<std::string, std::string>> sections;
    std::istringstream in(content);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unterminated section header");
            }
            section = detail::trim(line.substr(1, line.size() - 2));
            sections[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        }
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": empty key");
        }
        sections[section][key] = value;
    }
    return sections;
}

inline RunConfig parse_run_config(const std::string& content) {
    auto sections = parse_config_sections(content);
    RunConfig cfg;

    static const std::map<std::string, std::set<std::string>> known = {
        {"run", {"architecture", "seed"}},
        {"data", {"train", "dev"}},
        {"tagger",
         {"scheme", "use_crf", "use_lstm", "use_preprocessing",
          "constrain_transitions", "word_embedding_size",
          "char_embedding_size", "Char BiLSTM Hidden Size",
          "Char BiLSTM layers", "BiLSTM size", "BiLSTM layer",
          "BiLSTM dropout", "Embeddings dropout", "Optimiser",
          "Learning rate", "min_learning_rate", "halving_patience",
          "stop_patience", "max_epochs", "batch_size"}},
        {"biaffine",
         {"use_preprocessing", "fastText embedding size",
          "char_embedding_size", "Char BiLSTM Hidden Size",
          "Char BiLSTM layers", "BiLSTM size", "BiLSTM layer",
          "BiLSTM dropout", "FFNN size", "FFNN output size", "FFNN dropout",
          "Embeddings dropout", "categories", "max_span_width",
          "negative_ratio", "Optimiser", "Learning rate", "batch_size",
          "max_steps", "eval_every", "plateau_patience"}},
    };
    for (const auto& [section, kv] : sections) {
        auto it = known.find(section);
        if (it == known.end()) {
            throw ConfigError("unknown config section [" + section + "]");
        }
        for (const auto& [key, value] : kv) {
            if (it->second.count(key) == 0) {
                throw ConfigError("unknown key '" + key + "' in section [" +
                                  section + "]");
            }
        }
    }

    auto get = [&](const std::string& section,
                   const std::string& key) -> const std::string* {
        auto sit = sections.find(section);
        if (sit == sections.end()) return nullptr;
        auto kit = sit->second.find(key);
        return kit == sit->second.end() ? nullptr : &kit->second;
    };
    auto get_int = [&](const std::string& section, const std::string& key,
                       int fallback) {
        const std::string* v = get(section, key);
        return v ? static_cast<int>(detail::parse_int(section, key, *v))
                 : fallback;
    };
    auto get_double = [&](const std::string& section, const std::string& key,
                          double fallback) {
        const std::string* v = get(section, key);
        return v ? detail::parse_double(section, key, *v) : fallback;
    };
    auto get_bool = [&](const std::string& section, const std::string& key,
                        bool fallback) {
        const std::string* v = get(section, key);
        return v ? detail::parse_bool(section, key, *v) : fallback;
    };

    if (const std::string* v = get("run", "architecture")) {
        if (*v != "tagger" && *v != "biaffine") {
            throw ConfigError("architecture must be tagger or biaffine, got '" +
                              *v + "'");
        }
        cfg.architecture = *v;
    }
    if (const std::string* v = get("run", "seed")) {
        cfg.seed = static_cast<std::uint64_t>(
            detail::parse_int("run", "seed", *v));
    }
    if (const std::string* v = get("data", "train")) cfg.train_path = *v;
    if (const std::string* v = get("data", "dev")) cfg.dev_path = *v;

    // Tagger section.
    if (const std::string* v = get("tagger", "scheme")) {
        cfg.tagger.scheme = detail::parse_scheme(*v);
    }
    cfg.tagger.use_crf = get_bool("tagger", "use_crf", cfg.tagger.use_crf);
    cfg.tagger.use_lstm = get_bool("tagger", "use_lstm", cfg.tagger.use_lstm);
    cfg.tagger.use_preprocessing =
        get_bool("tagger", "use_preprocessing", cfg.tagger.use_preprocessing);
    cfg.tagger.constrain_transitions = get_bool(
        "tagger", "constrain_transitions", cfg.tagger.constrain_transitions);
    EncoderConfig& tenc = cfg.tagger.encoder;
    tenc.word_dim = get_int("tagger", "word_embedding_size", tenc.word_dim);
    tenc.char_dim = get_int("tagger", "char_embedding_size", tenc.char_dim);
    tenc.char_hidden =
        get_int("tagger", "Char BiLSTM Hidden Size", tenc.char_hidden);
    tenc.lstm_hidden = get_int("tagger", "BiLSTM size", tenc.lstm_hidden);
    tenc.lstm_layers = get_int("tagger", "BiLSTM layer", tenc.lstm_layers);
    tenc.lstm_dropout =
        get_double("tagger", "BiLSTM dropout", tenc.lstm_dropout);
    tenc.emb_dropout =
        get_double("tagger", "Embeddings dropout", tenc.emb_dropout);
    if (get_int("tagger", "Char BiLSTM layers", 1) != 1) {
        throw ConfigError("[tagger] Char BiLSTM layers: only 1 is supported");
    }
    if (const std::string* v = get("tagger", "Optimiser")) {
        cfg.tagger_schedule.optimizer = detail::parse_optimizer("tagger", *v);
    }
    cfg.tagger_schedule.initial_lr =
        get_double("tagger", "Learning rate", cfg.tagger_schedule.initial_lr);
    cfg.tagger_schedule.min_lr = get_double("tagger", "min_learning_rate",
                                            cfg.tagger_schedule.min_lr);
    cfg.tagger_schedule.halving_patience = get_int(
        "tagger", "halving_patience", cfg.tagger_schedule.halving_patience);
    cfg.tagger_schedule.stop_patience =
        get_int("tagger", "stop_patience", cfg.tagger_schedule.stop_patience);
    cfg.tagger_schedule.max_epochs =
        get_int("tagger", "max_epochs", cfg.tagger_schedule.max_epochs);
    cfg.tagger_schedule.batch_size =
        get_int("tagger", "batch_size", cfg.tagger_schedule.batch_size);

    // Biaffine section.
    cfg.biaffine.use_preprocessing = get_bool(
        "biaffine", "use_preprocessing", cfg.biaffine.use_preprocessing);
    EncoderConfig& benc = cfg.biaffine.encoder;
    benc.word_dim =
        get_int("biaffine", "fastText embedding size", benc.word_dim);
    benc.char_dim = get_int("biaffine", "char_embedding_size", benc.char_dim);
    benc.char_hidden =
        get_int("biaffine", "Char BiLSTM Hidden Size", benc.char_hidden);
    benc.lstm_hidden = get_int("biaffine", "BiLSTM size", benc.lstm_hidden);
    benc.lstm_layers = get_int("biaffine", "BiLSTM layer", benc.lstm_layers);
    benc.lstm_dropout =
        get_double("biaffine", "BiLSTM dropout", benc.lstm_dropout);
    benc.emb_dropout =
        get_double("biaffine", "Embeddings dropout", benc.emb_dropout);
    if (get_int("biaffine", "Char BiLSTM layers", 1) != 1) {
        throw ConfigError("[biaffine] Char BiLSTM layers: only 1 is supported");
    }
    cfg.biaffine.ffnn_hidden =
        get_int("biaffine", "FFNN size", cfg.biaffine.ffnn_hidden);
    cfg.biaffine.ffnn_out =
        get_int("biaffine", "FFNN output size", cfg.biaffine.ffnn_out);
    cfg.biaffine.ffnn_dropout =
        get_double("biaffine", "FFNN dropout", cfg.biaffine.ffnn_dropout);
    cfg.biaffine.categories =
        get_int("biaffine", "categories", cfg.biaffine.categories);
    cfg.biaffine.max_width =
        get_int("biaffine", "max_span_width", cfg.biaffine.max_width);
    cfg.biaffine.negative_ratio = get_double("biaffine", "negative_ratio",
                                             cfg.biaffine.negative_ratio);
    if (const std::string* v = get("biaffine", "Optimiser")) {
        cfg.biaffine_schedule.optimizer =
            detail::parse_optimizer("biaffine", *v);
    }
    cfg.biaffine_schedule.lr =
        get_double("biaffine", "Learning rate", cfg.biaffine_schedule.lr);
    cfg.biaffine_schedule.batch_size =
        get_int("biaffine", "batch_size", cfg.biaffine_schedule.batch_size);
    cfg.biaffine_schedule.max_steps =
        get_int("biaffine", "max_steps", cfg.biaffine_schedule.max_steps);
    cfg.biaffine_schedule.eval_every =
        get_int("biaffine", "eval_every", cfg.biaffine_schedule.eval_every);
    cfg.biaffine_schedule.plateau_patience = get_int(
        "biaffine", "plateau_patience", cfg.biaffine_schedule.plateau_patience);

    validate_run_config(cfg);
    return cfg;
}

inline void validate_run_config(const RunConfig& cfg) {
    auto positive = [](const std::string& what, double v) {
        if (v <= 0) throw ConfigError(what + " must be positive");
    };
    positive("word_embedding_size", cfg.tagger.encoder.word_dim);
    positive("char_embedding_size", cfg.tagger.encoder.char_dim);
    positive("Char BiLSTM Hidden Size", cfg.tagger.encoder.char_hidden);
    positive("BiLSTM size", cfg.tagger.encoder.lstm_hidden);
    positive("BiLSTM layer", cfg.tagger.encoder.lstm_layers);
    positive("Learning rate", cfg.tagger_schedule.initial_lr);
    positive("batch_size", cfg.tagger_schedule.batch_size);
    positive("max_epochs", cfg.tagger_schedule.max_epochs);
    if (cfg.tagger_schedule.min_lr > cfg.tagger_schedule.initial_lr) {
        throw ConfigError("min_learning_rate exceeds Learning rate");
    }
    if (cfg.tagger_schedule.halving_patience < 1 ||
        cfg.tagger_schedule.stop_patience < 1) {
        throw ConfigError("patience values must be >= 1");
    }
    positive("fastText embedding size", cfg.biaffine.encoder.word_dim);
    positive("FFNN size", cfg.biaffine.ffnn_hidden);
    positive("FFNN output size", cfg.biaffine.ffnn_out);
    positive("biaffine Learning rate", cfg.biaffine_schedule.lr);
    positive("biaffine batch_size", cfg.biaffine_schedule.batch_size);
    positive("max_steps", cfg.biaffine_schedule.max_steps);
    positive("eval_every", cfg.biaffine_schedule.eval_every);
    if (cfg.biaffine.categories < 2) {
        throw ConfigError("categories must be >= 2 (non-entity + targets)");
    }
    if (cfg.biaffine.max_width < 0) {
        throw ConfigError("max_span_width must be >= 0 (0 = unbounded)");
    }
    if (cfg.biaffine.negative_ratio < 0) {
        throw ConfigError("negative_ratio must be >= 0 (0 = keep all)");
    }
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str());
}

// ---------------------------------------------------------------------------
// Command-line overrides on top of the config file.

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> arch;
    std::optional<std::string> scheme;
    bool no_crf = false;
    bool no_lstm = false;
    bool no_preprocess = false;
};

inline RunConfig resolve_config(RunConfig cfg, const CliOverrides& over) {
    if (over.seed) cfg.seed = *over.seed;
    if (over.arch) {
        if (*over.arch != "tagger" && *over.arch != "biaffine") {
            throw ConfigError("--arch must be tagger or biaffine");
        }
        cfg.architecture = *over.arch;
    }
    if (cfg.architecture == "biaffine") {
        if (over.no_crf) {
            throw ConfigError("--no-crf does not apply to the biaffine model");
        }
        if (over.no_lstm) {
            throw ConfigError("--no-lstm does not apply to the biaffine model");
        }
        if (over.scheme) {
            throw ConfigError("--scheme does not apply to the biaffine model");
        }
        if (over.no_preprocess) cfg.biaffine.use_preprocessing = false;
    } else {
        if (over.scheme) cfg.tagger.scheme = detail::parse_scheme(*over.scheme);
        if (over.no_crf) cfg.tagger.use_crf = false;
        if (over.no_lstm) cfg.tagger.use_lstm = false;
        if (over.no_preprocess) cfg.tagger.use_preprocessing = false;
    }
    validate_run_config(cfg);
    return cfg;
}

// ---------------------------------------------------------------------------
// Canonical flat snapshot used inside checkpoints.

inline std::map<std::string, std::string> config_snapshot(
    const RunConfig& cfg) {
    std::map<std::string, std::string> kv;
    auto put_int = [&](const std::string& k, long v) {
        kv[k] = std::to_string(v);
    };
    auto put_double = [&](const std::string& k, double v) {
        kv[k] = format_double(v);
    };
    auto put_bool = [&](const std::string& k, bool v) {
        kv[k] = v ? "true" : "false";
    };
    kv["architecture"] = cfg.architecture;
    put_int("seed", static_cast<long>(cfg.seed));
    kv["tagger.scheme"] = cfg.tagger.scheme == TagScheme::IO ? "io" : "bio";
    put_bool("tagger.use_crf", cfg.tagger.use_crf);
    put_bool("tagger.use_lstm", cfg.tagger.use_lstm);
    put_bool("tagger.use_preprocessing", cfg.tagger.use_preprocessing);
    put_bool("tagger.constrain_transitions", cfg.tagger.constrain_transitions);
    put_int("tagger.word_dim", cfg.tagger.encoder.word_dim);
    put_int("tagger.char_dim", cfg.tagger.encoder.char_dim);
    put_int("tagger.char_hidden", cfg.tagger.encoder.char_hidden);
    put_int("tagger.lstm_hidden", cfg.tagger.encoder.lstm_hidden);
    put_int("tagger.lstm_layers", cfg.tagger.encoder.lstm_layers);
    put_double("tagger.lstm_dropout", cfg.tagger.encoder.lstm_dropout);
    put_double("tagger.emb_dropout", cfg.tagger.encoder.emb_dropout);
    put_bool("biaffine.use_preprocessing", cfg.biaffine.use_preprocessing);
    put_int("biaffine.word_dim", cfg.biaffine.encoder.word_dim);
    put_int("biaffine.char_dim", cfg.biaffine.encoder.char_dim);
    put_int("biaffine.char_hidden", cfg.biaffine.encoder.char_hidden);
    put_int("biaffine.lstm_hidden", cfg.biaffine.encoder.lstm_hidden);
    put_int("biaffine.lstm_layers", cfg.biaffine.encoder.lstm_layers);
    put_double("biaffine.lstm_dropout", cfg.biaffine.encoder.lstm_dropout);
    put_double("biaffine.emb_dropout", cfg.biaffine.encoder.emb_dropout);
    put_int("biaffine.ffnn_hidden", cfg.biaffine.ffnn_hidden);
    put_int("biaffine.ffnn_out", cfg.biaffine.ffnn_out);
    put_double("biaffine.ffnn_dropout", cfg.biaffine.ffnn_dropout);
    put_int("biaffine.categories", cfg.biaffine.categories);
    put_int("biaffine.max_width", cfg.biaffine.max_width);
    put_double("biaffine.negative_ratio", cfg.biaffine.negative_ratio);
    return kv;
}

inline RunConfig config_from_snapshot(
    const std::map<std::string, std::string>& kv) {
    RunConfig cfg;
    auto get = [&](const std::string& k) -> const std::string* {
        auto it = kv.find(k);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto need = [&](const std::string& k) -> const std::string& {
        const std::string* v = get(k);
        if (!v) throw DataError("checkpoint config missing key: " + k);
        return *v;
    };
    cfg.architecture = need("architecture");
    cfg.seed = static_cast<std::uint64_t>(std::stoll(need("seed")));
    cfg.tagger.scheme = detail::parse_scheme(need("tagger.scheme"));
    cfg.tagger.use_crf = need("tagger.use_crf") == "true";
    cfg.tagger.use_lstm = need("tagger.use_lstm") == "true";
    cfg.tagger.use_preprocessing = need("tagger.use_preprocessing") == "true";
    cfg.tagger.constrain_transitions =
        need("tagger.constrain_transitions") == "true";
    cfg.tagger.encoder.word_dim = std::stoi(need("tagger.word_dim"));
    cfg.tagger.encoder.char_dim = std::stoi(need("tagger.char_dim"));
    cfg.tagger.encoder.char_hidden = std::stoi(need("tagger.char_hidden"));
    cfg.tagger.encoder.lstm_hidden = std::stoi(need("tagger.lstm_hidden"));
    cfg.tagger.encoder.lstm_layers = std::stoi(need("tagger.lstm_layers"));
    cfg.tagger.encoder.lstm_dropout = std::stod(need("tagger.lstm_dropout"));
    cfg.tagger.encoder.emb_dropout = std::stod(need("tagger.emb_dropout"));
    cfg.biaffine.use_preprocessing =
        need("biaffine.use_preprocessing") == "true";
    cfg.biaffine.encoder.word_dim = std::stoi(need("biaffine.word_dim"));
    cfg.biaffine.encoder.char_dim = std::stoi(need("biaffine.char_dim"));
    cfg.biaffine.encoder.char_hidden = std::stoi(need("biaffine.char_hidden"));
    cfg.biaffine.encoder.lstm_hidden = std::stoi(need("biaffine.lstm_hidden"));
    cfg.biaffine.encoder.lstm_layers = std::stoi(need("biaffine.lstm_layers"));
    cfg.biaffine.encoder.lstm_dropout =
        std::stod(need("biaffine.lstm_dropout"));
    cfg.biaffine.encoder.emb_dropout = std::stod(need("biaffine.emb_dropout"));
    cfg.biaffine.ffnn_hidden = std::stoi(need("biaffine.ffnn_hidden"));
    cfg.biaffine.ffnn_out = std::stoi(need("biaffine.ffnn_out"));
    cfg.biaffine.ffnn_dropout = std::stod(need("biaffine.ffnn_dropout"));
    cfg.biaffine.categories = std::stoi(need("biaffine.categories"));
    cfg.biaffine.max_width = std::stoi(need("biaffine.max_width"));
    cfg.biaffine.negative_ratio = std::stod(need("biaffine.negative_ratio"));
    return cfg;
}

}  // namespace toxspan
