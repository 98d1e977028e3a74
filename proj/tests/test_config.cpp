#include <catch2/catch_amalgamated.hpp>

#include "toxspan/config.hpp"

using namespace toxspan;

TEST_CASE("default config matches the documented defaults") {
    RunConfig cfg = parse_run_config("");
    CHECK(cfg.architecture == "tagger");
    CHECK(cfg.tagger.scheme == TagScheme::IO);
    CHECK(cfg.tagger.use_crf);
    CHECK(cfg.tagger.use_lstm);
    CHECK(cfg.tagger.use_preprocessing);
    CHECK(cfg.tagger.encoder.char_hidden == 25);
    CHECK(cfg.tagger.encoder.lstm_hidden == 256);
    CHECK(cfg.tagger.encoder.lstm_layers == 1);
    CHECK(cfg.tagger_schedule.optimizer == OptimizerKind::Sgd);
    CHECK(cfg.tagger_schedule.initial_lr == 0.01);
    CHECK(cfg.tagger_schedule.min_lr == 0.0001);
    CHECK(cfg.tagger_schedule.halving_patience == 4);
    CHECK(cfg.tagger_schedule.max_epochs == 100);
    CHECK(cfg.tagger_schedule.batch_size == 8);
    CHECK(cfg.biaffine.encoder.lstm_hidden == 200);
    CHECK(cfg.biaffine.encoder.lstm_layers == 3);
    CHECK(cfg.biaffine.encoder.lstm_dropout == 0.4);
    CHECK(cfg.biaffine.encoder.emb_dropout == 0.5);
    CHECK(cfg.biaffine.ffnn_hidden == 150);
    CHECK(cfg.biaffine.ffnn_dropout == 0.2);
    CHECK(cfg.biaffine_schedule.optimizer == OptimizerKind::Adam);
    CHECK(cfg.biaffine_schedule.lr == 0.0001);
    CHECK(cfg.biaffine_schedule.batch_size == 32);
    CHECK(cfg.biaffine_schedule.max_steps == 40000);
}

TEST_CASE("table-style keys parse verbatim") {
    RunConfig cfg = parse_run_config(
        "[run]\n"
        "architecture = tagger\n"
        "seed = 7\n"
        "[tagger]\n"
        "scheme = bio\n"
        "BiLSTM size = 64\n"
        "BiLSTM layer = 2\n"
        "BiLSTM dropout = 0.1\n"
        "Char BiLSTM Hidden Size = 12\n"
        "Optimiser = adam\n"
        "Learning rate = 0.003\n"
        "batch_size = 4\n"
        "[biaffine]\n"
        "fastText embedding size = 64\n"
        "FFNN size = 32\n"
        "max_span_width = 8\n");
    CHECK(cfg.seed == 7);
    CHECK(cfg.tagger.scheme == TagScheme::BIO);
    CHECK(cfg.tagger.encoder.lstm_hidden == 64);
    CHECK(cfg.tagger.encoder.lstm_layers == 2);
    CHECK(cfg.tagger.encoder.lstm_dropout == 0.1);
    CHECK(cfg.tagger.encoder.char_hidden == 12);
    CHECK(cfg.tagger_schedule.optimizer == OptimizerKind::Adam);
    CHECK(cfg.tagger_schedule.initial_lr == 0.003);
    CHECK(cfg.tagger_schedule.batch_size == 4);
    CHECK(cfg.biaffine.encoder.word_dim == 64);
    CHECK(cfg.biaffine.ffnn_hidden == 32);
    CHECK(cfg.biaffine.max_width == 8);
}

TEST_CASE("unknown keys and sections are rejected") {
    CHECK_THROWS_AS(parse_run_config("[tagger]\nlerning rate = 3\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_run_config("[nonsense]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("[run]\narchitecture = perceptron\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_run_config("[tagger]\nscheme = oi\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("[tagger]\nLearning rate = fast\n"),
                    ConfigError);
}

TEST_CASE("validation catches inconsistent numbers") {
    CHECK_THROWS_AS(
        parse_run_config("[tagger]\nmin_learning_rate = 0.5\n"),
        ConfigError);
    CHECK_THROWS_AS(parse_run_config("[tagger]\nBiLSTM size = 0\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_run_config("[biaffine]\ncategories = 1\n"),
                    ConfigError);
}

TEST_CASE("cli overrides apply ablations to the tagger only") {
    RunConfig base = parse_run_config("");
    CliOverrides over;
    over.no_crf = true;
    over.no_lstm = true;
    over.no_preprocess = true;
    over.scheme = "bio";
    over.seed = 99;
    RunConfig cfg = resolve_config(base, over);
    CHECK(!cfg.tagger.use_crf);
    CHECK(!cfg.tagger.use_lstm);
    CHECK(!cfg.tagger.use_preprocessing);
    CHECK(cfg.tagger.scheme == TagScheme::BIO);
    CHECK(cfg.seed == 99);
}

TEST_CASE("biaffine conflicts with tagger-only flags") {
    RunConfig base = parse_run_config("");
    CliOverrides over;
    over.arch = "biaffine";
    over.no_crf = true;
    CHECK_THROWS_AS(resolve_config(base, over), ConfigError);

    CliOverrides lstm;
    lstm.arch = "biaffine";
    lstm.no_lstm = true;
    CHECK_THROWS_AS(resolve_config(base, lstm), ConfigError);

    CliOverrides scheme;
    scheme.arch = "biaffine";
    scheme.scheme = "io";
    CHECK_THROWS_AS(resolve_config(base, scheme), ConfigError);

    CliOverrides ok;
    ok.arch = "biaffine";
    ok.no_preprocess = true;
    RunConfig cfg = resolve_config(base, ok);
    CHECK(cfg.architecture == "biaffine");
    CHECK(!cfg.biaffine.use_preprocessing);
}

TEST_CASE("config snapshot round-trips through the checkpoint map") {
    RunConfig cfg = parse_run_config(
        "[run]\narchitecture = biaffine\nseed = 123\n"
        "[tagger]\nscheme = bio\nuse_crf = false\n"
        "[biaffine]\nmax_span_width = 5\nFFNN size = 33\n");
    auto kv = config_snapshot(cfg);
    RunConfig back = config_from_snapshot(kv);
    CHECK(back.architecture == "biaffine");
    CHECK(back.seed == 123);
    CHECK(back.tagger.scheme == TagScheme::BIO);
    CHECK(!back.tagger.use_crf);
    CHECK(back.biaffine.max_width == 5);
    CHECK(back.biaffine.ffnn_hidden == 33);
    CHECK(back.biaffine.encoder.emb_dropout ==
          cfg.biaffine.encoder.emb_dropout);
}

TEST_CASE("snapshot with missing keys is rejected") {
    RunConfig cfg;
    auto kv = config_snapshot(cfg);
    kv.erase("tagger.scheme");
    CHECK_THROWS_AS(config_from_snapshot(kv), DataError);
}
