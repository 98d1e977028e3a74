// toxspan: train, run, and evaluate toxic span detectors from the command
// line. Subcommands: preprocess, train, predict, evaluate, analyze,
// gradcheck, synth. Exit codes: 0 ok, 1 usage/config, 2 data, 3 numeric.
#include <array>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "toxspan/biaffine.hpp"
#include "toxspan/config.hpp"
#include "toxspan/dataio.hpp"
#include "toxspan/errors.hpp"
#include "toxspan/eval.hpp"
#include "toxspan/gradcheck.hpp"
#include "toxspan/tagger.hpp"

namespace {

using namespace toxspan;

struct CommonFlags {
    std::string config_path;
    CliOverrides overrides;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "run configuration file");
    cmd->add_option("--seed", flags.overrides.seed,
                    "random seed (overrides config)");
    cmd->add_option("--arch", flags.overrides.arch,
                    "architecture: tagger or biaffine");
    cmd->add_option("--scheme", flags.overrides.scheme,
                    "tagging scheme: io or bio");
    cmd->add_flag("--no-crf", flags.overrides.no_crf,
                  "ablation: softmax head, no CRF");
    cmd->add_flag("--no-lstm", flags.overrides.no_lstm,
                  "ablation: skip sentence BiLSTM");
    cmd->add_flag("--no-preprocess", flags.overrides.no_preprocess,
                  "ablation: whitespace tokenization of the raw text");
}

RunConfig resolve_cli_config(const CommonFlags& flags) {
    RunConfig cfg;
    if (!flags.config_path.empty()) cfg = load_run_config(flags.config_path);
    return resolve_config(std::move(cfg), flags.overrides);
}

std::vector<RawPost> read_posts(const std::string& path, bool strict) {
    ReadStats stats;
    std::vector<RawPost> posts = read_tsd_csv(path, strict, &stats);
    if (!strict && stats.skipped > 0) {
        std::cerr << path << ": skipped " << stats.skipped
                  << " malformed record(s)\n";
    }
    return posts;
}

std::vector<std::vector<Token>> tokenized_corpus(
    const std::vector<RawPost>& posts, bool use_preprocessing) {
    std::vector<std::vector<Token>> out;
    out.reserve(posts.size());
    for (const RawPost& post : posts) {
        out.push_back(tokenize_post(post.text, use_preprocessing));
    }
    return out;
}

// Compares loaded parameters against the shapes a fresh model of the same
// configuration would allocate.
void check_params_match(const ModelParams& loaded,
                        const ModelParams& expected) {
    for (const auto& [name, t] : expected.all()) {
        if (!loaded.has(name)) {
            throw DataError("checkpoint is missing parameter " + name);
        }
        if (loaded.tensor(name).shape != t.shape) {
            throw DataError("checkpoint parameter " + name +
                            " has a shape inconsistent with its config");
        }
    }
    for (const auto& [name, t] : loaded.all()) {
        if (!expected.has(name)) {
            throw DataError("checkpoint has unexpected parameter " + name);
        }
    }
}

TaggerModel tagger_from_checkpoint(Checkpoint&& ckpt, const RunConfig& cfg) {
    TaggerModel model;
    model.config = cfg.tagger;
    model.config.seed = cfg.seed;
    model.vocab = Vocab::from_lists(std::move(ckpt.vocab_words),
                                    std::move(ckpt.vocab_chars));
    TaggerModel scratch;
    scratch.config = model.config;
    scratch.vocab = model.vocab;
    Rng rng(cfg.seed);
    init_tagger(scratch, rng);
    check_params_match(ckpt.params, scratch.params);
    model.params = std::move(ckpt.params);
    return model;
}

BiaffineModel biaffine_from_checkpoint(Checkpoint&& ckpt,
                                       const RunConfig& cfg) {
    BiaffineModel model;
    model.config = cfg.biaffine;
    model.config.seed = cfg.seed;
    model.vocab = Vocab::from_lists(std::move(ckpt.vocab_words),
                                    std::move(ckpt.vocab_chars));
    BiaffineModel scratch;
    scratch.config = model.config;
    scratch.vocab = model.vocab;
    Rng rng(cfg.seed);
    init_biaffine(scratch, rng);
    check_params_match(ckpt.params, scratch.params);
    model.params = std::move(ckpt.params);
    return model;
}

Checkpoint make_checkpoint(const RunConfig& cfg, const Vocab& vocab,
                           const ModelParams& params) {
    Checkpoint ckpt;
    ckpt.config = config_snapshot(cfg);
    ckpt.vocab_words = vocab.words;
    ckpt.vocab_chars = vocab.chars;
    ckpt.params = params;
    return ckpt;
}

int cmd_train(const CommonFlags& flags, const std::string& train_override,
              const std::string& dev_override, const std::string& model_path,
              const std::string& log_path, bool strict) {
    RunConfig cfg = resolve_cli_config(flags);
    std::string train_path =
        train_override.empty() ? cfg.train_path : train_override;
    std::string dev_path = dev_override.empty() ? cfg.dev_path : dev_override;
    if (train_path.empty() || dev_path.empty()) {
        throw ConfigError("train requires --train and --dev files "
                          "(or [data] entries in the config)");
    }
    std::vector<RawPost> train_posts = read_posts(train_path, strict);
    std::vector<RawPost> dev_posts = read_posts(dev_path, strict);
    if (train_posts.empty()) throw DataError(train_path + ": no records");

    std::string log_file = log_path.empty() ? model_path + ".log.csv"
                                            : log_path;
    std::ofstream log(log_file, std::ios::binary);
    if (!log) throw DataError("cannot write training log: " + log_file);

    Rng rng(cfg.seed);
    if (cfg.architecture == "tagger") {
        TaggerModel model;
        model.config = cfg.tagger;
        model.config.seed = cfg.seed;
        model.vocab = Vocab::build(tokenized_corpus(
            train_posts, model.config.use_preprocessing));
        init_tagger(model, rng);
        log << "epoch,loss,dev_f1,lr\n";
        train_tagger(model, train_posts, dev_posts, cfg.tagger_schedule, rng,
                     [&](const EpochStats& s) {
                         log << s.epoch << "," << format_double(s.mean_loss)
                             << "," << format_double(s.dev_f1) << ","
                             << format_double(s.lr) << "\n";
                         return true;
                     });
        save_checkpoint(make_checkpoint(cfg, model.vocab, model.params),
                        model_path);
    } else {
        BiaffineModel model;
        model.config = cfg.biaffine;
        model.config.seed = cfg.seed;
        model.vocab = Vocab::build(tokenized_corpus(
            train_posts, model.config.use_preprocessing));
        init_biaffine(model, rng);
        log << "step,loss,dev_f1,lr\n";
        train_biaffine(model, train_posts, dev_posts, cfg.biaffine_schedule,
                       rng, [&](const StepStats& s) {
                           log << s.step << "," << format_double(s.mean_loss)
                               << "," << format_double(s.dev_f1) << ","
                               << format_double(s.lr) << "\n";
                           return true;
                       });
        save_checkpoint(make_checkpoint(cfg, model.vocab, model.params),
                        model_path);
    }
    std::cout << "model written to " << model_path << "\n"
              << "training log written to " << log_file << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input_path,
                const std::string& output_path, bool strict) {
    Checkpoint ckpt = load_checkpoint(model_path);
    RunConfig cfg = config_from_snapshot(ckpt.config);
    std::vector<RawPost> records = read_posts(input_path, strict);
    std::vector<OffsetSet> predictions;
    predictions.reserve(records.size());
    if (cfg.architecture == "tagger") {
        TaggerModel model = tagger_from_checkpoint(std::move(ckpt), cfg);
        for (const RawPost& post : records) {
            predictions.push_back(predict_post(model, post.text));
        }
    } else {
        BiaffineModel model = biaffine_from_checkpoint(std::move(ckpt), cfg);
        for (const RawPost& post : records) {
            predictions.push_back(predict_post_biaffine(model, post.text));
        }
    }
    write_predictions(records, predictions, output_path);
    std::cout << "predictions written to " << output_path << "\n";
    return 0;
}

struct EvalFlags {
    std::string pred_path;
    std::string gold_path;
    bool buckets = false;
    bool per_span = false;
    bool micro = false;
    bool no_preprocess = false;
    bool strict = true;
    std::string lexicon_path;
    std::string report_path;
};

int cmd_evaluate(const EvalFlags& flags, bool analyze_mode) {
    std::vector<RawPost> pred_rows = read_posts(flags.pred_path, flags.strict);
    std::vector<RawPost> gold_rows = read_posts(flags.gold_path, flags.strict);
    if (pred_rows.size() != gold_rows.size()) {
        throw DataError("record count mismatch: " +
                        std::to_string(pred_rows.size()) + " predictions vs " +
                        std::to_string(gold_rows.size()) + " gold rows");
    }
    if (gold_rows.empty()) throw DataError("empty evaluation set");

    std::vector<ScoredPost> scored;
    std::vector<AnalyzedPost> analyzed;
    scored.reserve(gold_rows.size());
    for (std::size_t i = 0; i < gold_rows.size(); ++i) {
        scored.push_back({pred_rows[i].gold, gold_rows[i].gold});
        AnalyzedPost post;
        post.pred = pred_rows[i].gold;
        post.gold = gold_rows[i].gold;
        post.tokens = tokenize_post(gold_rows[i].text, !flags.no_preprocess);
        analyzed.push_back(std::move(post));
    }
    double f1 = corpus_f1(scored, flags.micro);
    std::cout << "posts " << scored.size() << "\n";
    std::cout << "corpus_f1 " << format_double(f1) << "\n";

    bool want_buckets = flags.buckets || analyze_mode;
    bool want_lexicon = !flags.lexicon_path.empty();
    std::ofstream report;
    if (!flags.report_path.empty()) {
        report.open(flags.report_path, std::ios::binary);
        if (!report) {
            throw DataError("cannot write report: " + flags.report_path);
        }
        report << "metric,group,f1,posts\n";
        report << "corpus,all," << format_double(f1) << "," << scored.size()
               << "\n";
    }
    if (want_buckets) {
        BucketMode mode = flags.per_span ? BucketMode::PerSpan
                                         : BucketMode::PostLongest;
        BucketReport buckets = bucketed_f1(analyzed, mode);
        std::cout << "span length buckets ("
                  << (flags.per_span ? "per-span" : "post-longest") << ")\n";
        for (int b = 0; b < kNumBuckets; ++b) {
            std::cout << "  " << bucket_name(b) << "  f1 "
                      << format_double(buckets.f1[b]) << "  posts "
                      << buckets.count[b] << "\n";
            if (report.is_open()) {
                report << "bucket," << bucket_name(b) << ","
                       << format_double(buckets.f1[b]) << ","
                       << buckets.count[b] << "\n";
            }
        }
        std::cout << "  empty-gold posts excluded: "
                  << buckets.empty_gold_posts << "\n";
    }
    if (want_lexicon) {
        std::set<std::string> lexicon = read_lexicon(flags.lexicon_path);
        LexiconSplit split = lexicon_split_f1(analyzed, lexicon);
        std::cout << "lexicon split\n";
        std::cout << "  single lexicon word  f1 "
                  << format_double(split.f1_lexicon) << "  posts "
                  << split.count_lexicon << "\n";
        std::cout << "  others               f1 "
                  << format_double(split.f1_other) << "  posts "
                  << split.count_other << "\n";
        if (report.is_open()) {
            report << "lexicon,single_word," << format_double(split.f1_lexicon)
                   << "," << split.count_lexicon << "\n";
            report << "lexicon,others," << format_double(split.f1_other) << ","
                   << split.count_other << "\n";
        }
    }
    return 0;
}

int cmd_gradcheck(const CommonFlags& flags, bool corrupt) {
    RunConfig cfg = resolve_cli_config(flags);
    // A tiny deterministic corpus provides the vocabulary and one 3-token
    // sentence with a planted toxic word.
    std::vector<std::string> lexicon = {"grog", "snarl", "bile"};
    std::vector<RawPost> posts = gen_synthetic(
        cfg.seed, 8, 12, lexicon, {1.0, 0.0, 0.0},
        SynthOptions{.empty_gold_fraction = 0.0, .min_tokens = 3,
                     .max_tokens = 5, .second_span_prob = 0.0,
                     .punct_prob = 0.0});
    GradCheckOptions opt;
    opt.max_entries_per_tensor = 24;
    Rng sample_rng(cfg.seed + 1);

    RawPost probe = posts.front();
    GradCheckReport report;
    if (cfg.architecture == "tagger") {
        TaggerModel model;
        model.config = cfg.tagger;
        model.config.seed = cfg.seed;
        model.vocab = Vocab::build(tokenized_corpus(posts, true));
        Rng rng(cfg.seed);
        init_tagger(model, rng);
        std::vector<TaggedSentence> sents =
            prepare_tagged_sentences({probe}, model.config);
        const TaggedSentence& sent = sents.front();
        const int s_count = num_tags(model.config.scheme);
        auto loss_value = [&]() {
            EmissionMatrix em = tagger_emissions(model, sent.tokens);
            if (model.config.use_crf) {
                return nll_and_grad(em,
                                    toxspan::detail::pack_crf(model.params),
                                    sent.gold_tags, nullptr);
            }
            double loss = 0.0;
            for (int i = 0; i < em.dim(0); ++i) {
                Tensor row({s_count});
                for (int s = 0; s < s_count; ++s) row(s) = em(i, s);
                Tensor p = softmax(row);
                loss -= std::log(p(sent.gold_tags[static_cast<std::size_t>(i)]));
            }
            return loss;
        };
        auto loss_grad = [&]() {
            Graph g(&model.params);
            auto em_vars = tagger_forward(g, model, sent.tokens);
            if (model.config.use_crf) {
                EmissionMatrix em = emissions_to_matrix(g, em_vars, s_count);
                CrfGrads grads;
                nll_and_grad(em, toxspan::detail::pack_crf(model.params),
                             sent.gold_tags, &grads);
                for (std::int64_t i = 0; i < grads.transitions.size(); ++i) {
                    model.params.grad("crf.trans")
                        .data[static_cast<std::size_t>(i)] +=
                        grads.transitions.data[static_cast<std::size_t>(i)];
                }
                for (int s = 0; s < s_count; ++s) {
                    model.params.grad("crf.start")(s) += grads.start(s);
                    model.params.grad("crf.stop")(s) += grads.stop(s);
                }
                for (std::size_t i = 0; i < em_vars.size(); ++i) {
                    Tensor seed({s_count});
                    for (int s = 0; s < s_count; ++s) {
                        seed(s) = grads.em(static_cast<int>(i), s);
                    }
                    g.add_grad(em_vars[i], seed);
                }
                g.backward();
            } else {
                std::vector<Graph::Var> losses;
                for (std::size_t i = 0; i < em_vars.size(); ++i) {
                    losses.push_back(g.softmax_cross_entropy(
                        em_vars[i], sent.gold_tags[i]));
                }
                g.backward(g.sum(losses));
            }
            if (corrupt) {
                for (double& v : model.params.grad("head.W").data) v += 1.0;
            }
        };
        report = gradient_check(loss_value, loss_grad, model.params, opt,
                                &sample_rng);
    } else {
        BiaffineModel model;
        model.config = cfg.biaffine;
        model.config.seed = cfg.seed;
        model.vocab = Vocab::build(tokenized_corpus(posts, true));
        Rng rng(cfg.seed);
        init_biaffine(model, rng);
        std::vector<BiaffineTrainSentence> sents =
            prepare_span_sentences({probe}, model.config);
        const BiaffineTrainSentence& sent = sents.front();
        auto loss_value = [&]() {
            Graph g(&model.params);
            SpanScoreTensor sst = score_all_spans(g, model, sent.tokens, true);
            return g.scalar(span_loss(g, sst, sent.gold));
        };
        auto loss_grad = [&]() {
            span_loss_and_grad(model, sent.tokens, sent.gold);
            if (corrupt) {
                for (double& v : model.params.grad("biaffine.b").data) {
                    v += 1.0;
                }
            }
        };
        report = gradient_check(loss_value, loss_grad, model.params, opt,
                                &sample_rng);
    }
    std::cout << "gradcheck " << cfg.architecture << ": checked "
              << report.entries_checked << " entries ("
              << report.entries_nonsmooth
              << " skipped at activation kinks), max relative error "
              << format_double(report.max_rel_error) << "\n";
    for (const GradCheckFailure& f : report.failures) {
        std::cout << "  FAIL " << f.param << "[" << f.index << "] analytic "
                  << format_double(f.analytic) << " numeric "
                  << format_double(f.numeric) << " rel "
                  << format_double(f.rel_error) << "\n";
    }
    if (!report.passed) {
        throw NumericError("gradient check failed (worst parameter: " +
                           report.worst_param + ")");
    }
    std::cout << "gradcheck passed\n";
    return 0;
}

int cmd_synth(std::uint64_t seed, int size, int vocab_size,
              const std::string& mix_str, const std::string& lexicon_path,
              bool contextual, double empty_frac,
              const std::string& output_path) {
    std::array<double, 3> mix{0.767, 0.157, 0.076};
    if (!mix_str.empty()) {
        std::istringstream in(mix_str);
        std::string part;
        for (int i = 0; i < 3; ++i) {
            if (!std::getline(in, part, ',')) {
                throw ConfigError("--mix expects three comma-separated "
                                  "probabilities");
            }
            mix[static_cast<std::size_t>(i)] = std::stod(part);
        }
    }
    std::vector<std::string> lexicon;
    if (lexicon_path.empty()) {
        lexicon = default_test_lexicon();
    } else {
        for (const std::string& w : read_lexicon(lexicon_path)) {
            lexicon.push_back(w);
        }
    }
    SynthOptions opt;
    opt.contextual_multiword = contextual;
    opt.empty_gold_fraction = empty_frac;
    std::vector<RawPost> posts =
        gen_synthetic(seed, size, vocab_size, lexicon, mix, opt);
    write_tsd_csv(posts, output_path);
    std::cout << "wrote " << posts.size() << " posts to " << output_path
              << "\n";
    return 0;
}

int cmd_preprocess(const std::string& input_path,
                   const std::string& output_path, bool no_preprocess,
                   bool strict) {
    std::vector<RawPost> posts = read_posts(input_path, strict);
    std::ofstream out(output_path, std::ios::binary);
    if (!out) throw DataError("cannot write: " + output_path);
    out << "post\ttoken\torig_start\torig_end\n";
    for (std::size_t i = 0; i < posts.size(); ++i) {
        for (const Token& tok : tokenize_post(posts[i].text, !no_preprocess)) {
            out << i << "\t" << tok.surface << "\t" << tok.orig_start << "\t"
                << tok.orig_end << "\n";
        }
    }
    std::cout << "token table written to " << output_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"toxic span detection: sequence tagging and biaffine span "
                 "scoring"};
    app.require_subcommand(1);

    CommonFlags train_flags;
    std::string train_train, train_dev, train_model = "model.ckpt", train_log;
    bool train_strict = true;
    CLI::App* train = app.add_subcommand("train", "train a model");
    add_common_flags(train, train_flags);
    train->add_option("--train", train_train, "training csv");
    train->add_option("--input", train_train, "alias for --train");
    train->add_option("--dev", train_dev, "development csv");
    train->add_option("--model", train_model, "output checkpoint path");
    train->add_option("--log", train_log, "training log csv path");
    train->add_flag("--strict,!--lenient", train_strict,
                    "abort on malformed csv records (default on)");

    std::string predict_model, predict_input, predict_output;
    bool predict_strict = true;
    CLI::App* predict = app.add_subcommand("predict", "predict spans");
    predict->add_option("--model", predict_model, "checkpoint path")
        ->required();
    predict->add_option("--input", predict_input, "input csv")->required();
    predict->add_option("--output", predict_output, "output csv")->required();
    predict->add_flag("--strict,!--lenient", predict_strict,
                      "abort on malformed csv records (default on)");

    EvalFlags eval_flags;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score predictions");
    evaluate->add_option("--pred", eval_flags.pred_path, "prediction csv")
        ->required();
    evaluate->add_option("--gold", eval_flags.gold_path, "gold csv")
        ->required();
    evaluate->add_flag("--buckets", eval_flags.buckets,
                       "report span-length buckets");
    evaluate->add_flag("--per-span", eval_flags.per_span,
                       "bucket by individual spans instead of longest");
    evaluate->add_flag("--micro", eval_flags.micro,
                       "micro-average instead of mean per-post F1");
    evaluate->add_flag("--no-preprocess", eval_flags.no_preprocess,
                       "tokenize gold text on raw whitespace for analyses");
    evaluate->add_option("--lexicon", eval_flags.lexicon_path,
                         "lexicon file for the context split");
    evaluate->add_option("--report", eval_flags.report_path,
                         "machine-readable report csv");
    evaluate->add_flag("--strict,!--lenient", eval_flags.strict,
                       "abort on malformed csv records (default on)");

    EvalFlags analyze_flags;
    CLI::App* analyze =
        app.add_subcommand("analyze", "evaluate plus result analyses");
    analyze->add_option("--pred", analyze_flags.pred_path, "prediction csv")
        ->required();
    analyze->add_option("--gold", analyze_flags.gold_path, "gold csv")
        ->required();
    analyze->add_flag("--per-span", analyze_flags.per_span,
                      "bucket by individual spans instead of longest");
    analyze->add_flag("--micro", analyze_flags.micro,
                      "micro-average instead of mean per-post F1");
    analyze->add_flag("--no-preprocess", analyze_flags.no_preprocess,
                      "tokenize gold text on raw whitespace for analyses");
    analyze->add_option("--lexicon", analyze_flags.lexicon_path,
                        "lexicon file for the context split");
    analyze->add_option("--report", analyze_flags.report_path,
                        "machine-readable report csv");
    analyze->add_flag("--strict,!--lenient", analyze_flags.strict,
                      "abort on malformed csv records (default on)");

    CommonFlags grad_flags;
    bool grad_corrupt = false;
    CLI::App* gradcheck =
        app.add_subcommand("gradcheck", "verify analytic gradients");
    add_common_flags(gradcheck, grad_flags);
    gradcheck
        ->add_flag("--corrupt-gradient", grad_corrupt,
                   "debug: corrupt one gradient entry; the check must fail")
        ->group("");

    std::uint64_t synth_seed = 1;
    int synth_size = 100, synth_vocab = 200;
    std::string synth_mix, synth_lexicon, synth_output = "synthetic.csv";
    bool synth_contextual = false;
    double synth_empty = 0.15;
    CLI::App* synth =
        app.add_subcommand("synth", "generate a synthetic corpus");
    synth->add_option("--seed", synth_seed, "random seed");
    synth->add_option("--size", synth_size, "number of posts");
    synth->add_option("--vocab-size", synth_vocab, "neutral vocabulary size");
    synth->add_option("--mix", synth_mix,
                      "span length mix p1,p2_4,p5 (default Table-2-like)");
    synth->add_option("--lexicon", synth_lexicon,
                      "lexicon file (default: built-in test list)");
    synth->add_flag("--contextual", synth_contextual,
                    "multi-word spans use neutral tail words");
    synth->add_option("--empty-fraction", synth_empty,
                      "fraction of posts with no toxic span");
    synth->add_option("--output", synth_output, "output csv")->required();

    std::string pre_input, pre_output;
    bool pre_raw = false;
    bool pre_strict = true;
    CLI::App* preprocess =
        app.add_subcommand("preprocess", "dump the token/offset table");
    preprocess->add_option("--input", pre_input, "input csv")->required();
    preprocess->add_option("--output", pre_output, "output tsv")->required();
    preprocess->add_flag("--no-preprocess", pre_raw,
                         "whitespace tokenization of the raw text");
    preprocess->add_flag("--strict,!--lenient", pre_strict,
                         "abort on malformed csv records (default on)");

    try {
        app.parse(argc, argv);
        if (train->parsed()) {
            return cmd_train(train_flags, train_train, train_dev, train_model,
                             train_log, train_strict);
        }
        if (predict->parsed()) {
            return cmd_predict(predict_model, predict_input, predict_output,
                               predict_strict);
        }
        if (evaluate->parsed()) return cmd_evaluate(eval_flags, false);
        if (analyze->parsed()) return cmd_evaluate(analyze_flags, true);
        if (gradcheck->parsed()) return cmd_gradcheck(grad_flags, grad_corrupt);
        if (synth->parsed()) {
            return cmd_synth(synth_seed, synth_size, synth_vocab, synth_mix,
                             synth_lexicon, synth_contextual, synth_empty,
                             synth_output);
        }
        if (preprocess->parsed()) {
            return cmd_preprocess(pre_input, pre_output, pre_raw, pre_strict);
        }
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
