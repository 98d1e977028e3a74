// The sequence tagging system: shared encoder, linear tag head, CRF or
// softmax objective, the learning-rate halving schedule, and end-to-end
// prediction from raw post text to original character offsets.
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "toxspan/crf.hpp"
#include "toxspan/encoder.hpp"
#include "toxspan/errors.hpp"
#include "toxspan/eval.hpp"
#include "toxspan/graph.hpp"
#include "toxspan/nn.hpp"
#include "toxspan/span_codec.hpp"
#include "toxspan/text_prep.hpp"

namespace toxspan {

struct TaggerConfig {
    TagScheme scheme = TagScheme::IO;
    bool use_crf = true;
    bool use_lstm = true;
    bool use_preprocessing = true;
    // Forces BIO-invalid transitions (O->I, start->I) to -1e4 after every
    // update instead of relying on decode-time repair.
    bool constrain_transitions = false;
    EncoderConfig encoder;
    std::uint64_t seed = 42;
};

struct TrainSchedule {
    OptimizerKind optimizer = OptimizerKind::Sgd;
    double initial_lr = 0.01;
    double min_lr = 1e-4;
    int halving_patience = 4;  // consecutive non-improving epochs per halving
    int stop_patience = 4;     // same, but at the minimum learning rate
    int max_epochs = 100;
    int batch_size = 8;
};

// The halving schedule as a pure state machine so it can be simulated
// exactly: lr() applies to the upcoming epoch, observe() digests that
// epoch's dev F1. The best score starts at 0, so an all-zero F1 trace
// counts every epoch as non-improving.
class LrSchedule {
public:
    explicit LrSchedule(const TrainSchedule& s)
        : lr_(s.initial_lr), min_lr_(s.min_lr),
          halving_patience_(s.halving_patience),
          stop_patience_(s.stop_patience) {}

    double lr() const { return lr_; }
    double best() const { return best_; }
    bool should_stop() const { return stop_; }

    // Returns true when this epoch improved the best dev F1.
    bool observe(double dev_f1) {
        if (dev_f1 > best_) {
            best_ = dev_f1;
            bad_epochs_ = 0;
            return true;
        }
        ++bad_epochs_;
        const bool at_floor = lr_ <= min_lr_;
        if (!at_floor && bad_epochs_ >= halving_patience_) {
            lr_ = std::max(lr_ / 2.0, min_lr_);
            bad_epochs_ = 0;
        } else if (at_floor && bad_epochs_ >= stop_patience_) {
            stop_ = true;
        }
        return false;
    }

private:
    double lr_;
    double min_lr_;
    int halving_patience_;
    int stop_patience_;
    double best_ = 0.0;
    int bad_epochs_ = 0;
    bool stop_ = false;
};

struct TaggerModel {
    TaggerConfig config;
    Vocab vocab;
    ModelParams params;
};

struct TaggedSentence {
    std::vector<Token> tokens;
    std::vector<int> gold_tags;
};

// Fig-4-style target preparation: gold offsets -> token spans -> tags.
// Posts that tokenize to nothing are dropped (they cannot carry tags).
inline std::vector<TaggedSentence> prepare_tagged_sentences(
    const std::vector<RawPost>& posts, const TaggerConfig& config) {
    std::vector<TaggedSentence> out;
    out.reserve(posts.size());
    for (const RawPost& post : posts) {
        TaggedSentence sent;
        sent.tokens = tokenize_post(post.text, config.use_preprocessing);
        if (sent.tokens.empty()) continue;
        auto spans = offsets_to_token_spans(post.gold, sent.tokens);
        sent.gold_tags =
            token_spans_to_tags(spans, static_cast<int>(sent.tokens.size()),
                                config.scheme)
                .tags;
        out.push_back(std::move(sent));
    }
    return out;
}

inline void init_tagger(TaggerModel& model, Rng& rng) {
    const int s_count = num_tags(model.config.scheme);
    EncoderConfig enc = model.config.encoder;
    enc.use_sentence_lstm = model.config.use_lstm;
    init_encoder(model.params, rng, enc, model.vocab);
    init_linear(model.params, rng, "head", enc.output_dim(), s_count);
    if (model.config.use_crf) {
        model.params.add("crf.trans", {s_count, s_count});
        model.params.add("crf.start", {s_count});
        model.params.add("crf.stop", {s_count});
    }
}

inline void apply_transition_constraints(TaggerModel& model) {
    if (!model.config.constrain_transitions ||
        model.config.scheme != TagScheme::BIO || !model.config.use_crf) {
        return;
    }
    model.params.tensor("crf.trans")(kTagO, kTagI) = -1e4;
    model.params.tensor("crf.start")(kTagI) = -1e4;
}

namespace detail {

inline EncoderConfig effective_encoder(const TaggerConfig& config) {
    EncoderConfig enc = config.encoder;
    enc.use_sentence_lstm = config.use_lstm;
    return enc;
}

inline CrfParams pack_crf(const ModelParams& params) {
    CrfParams crf;
    crf.transitions = params.tensor("crf.trans");
    crf.start = params.tensor("crf.start");
    crf.stop = params.tensor("crf.stop");
    return crf;
}

}  // namespace detail

// Per-token emission scores as graph vars, one [|S|] vector per token.
inline std::vector<Graph::Var> tagger_forward(Graph& g, TaggerModel& model,
                                              const std::vector<Token>& tokens) {
    EncoderConfig enc = detail::effective_encoder(model.config);
    std::vector<Graph::Var> xs =
        encode_tokens(g, model.params, enc, model.vocab, tokens);
    Graph::Var w = g.param("head.W");
    Graph::Var b = g.param("head.b");
    for (Graph::Var& x : xs) x = g.add(g.matvec(w, x), b);
    return xs;
}

inline EmissionMatrix emissions_to_matrix(const Graph& g,
                                          const std::vector<Graph::Var>& vars,
                                          int s_count) {
    EmissionMatrix em({static_cast<int>(vars.size()), s_count});
    for (std::size_t i = 0; i < vars.size(); ++i) {
        const Tensor& row = g.value(vars[i]);
        for (int s = 0; s < s_count; ++s) {
            em(static_cast<int>(i), s) = row(s);
        }
    }
    return em;
}

// Emission scores plus, for the softmax head, per-token tag probabilities
// (rows of softmax(em)).
inline EmissionMatrix tagger_emissions(TaggerModel& model,
                                       const std::vector<Token>& tokens,
                                       Tensor* probabilities = nullptr) {
    Graph g(&model.params);
    auto vars = tagger_forward(g, model, tokens);
    EmissionMatrix em =
        emissions_to_matrix(g, vars, num_tags(model.config.scheme));
    if (probabilities != nullptr && !model.config.use_crf) {
        *probabilities = em;
        for (int i = 0; i < em.dim(0); ++i) {
            Tensor row({em.dim(1)});
            for (int s = 0; s < em.dim(1); ++s) row(s) = em(i, s);
            row = softmax(row);
            for (int s = 0; s < em.dim(1); ++s) (*probabilities)(i, s) = row(s);
        }
    }
    return em;
}

inline std::vector<int> predict_tags(TaggerModel& model,
                                     const std::vector<Token>& tokens) {
    EmissionMatrix em = tagger_emissions(model, tokens);
    if (model.config.use_crf) {
        return viterbi(em, detail::pack_crf(model.params)).first;
    }
    std::vector<int> tags(tokens.size(), kTagO);
    for (int i = 0; i < em.dim(0); ++i) {
        int arg = 0;
        for (int s = 1; s < em.dim(1); ++s) {
            if (em(i, s) > em(i, arg)) arg = s;
        }
        tags[static_cast<std::size_t>(i)] = arg;
    }
    return tags;
}

// Raw post text -> predicted original character offsets.
inline OffsetSet predict_post(TaggerModel& model, const std::string& text,
                              bool include_gaps = true) {
    std::vector<Token> tokens =
        tokenize_post(text, model.config.use_preprocessing);
    if (tokens.empty()) return {};
    TagSequence seq;
    seq.scheme = model.config.scheme;
    seq.tags = predict_tags(model, tokens);
    return token_spans_to_offsets(tags_to_token_spans(seq), tokens,
                                  include_gaps);
}

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double dev_f1 = 0.0;
    double lr = 0.0;
    bool improved = false;
};

// Return false to stop training after this epoch.
using EpochCallback = std::function<bool(const EpochStats&)>;

inline double tagger_dev_f1(TaggerModel& model,
                            const std::vector<RawPost>& dev) {
    std::vector<ScoredPost> scored;
    scored.reserve(dev.size());
    for (const RawPost& post : dev) {
        scored.push_back({predict_post(model, post.text), post.gold});
    }
    return scored.empty() ? 0.0 : corpus_f1(scored);
}

// SGD/Adam over batches of sentences; batch loss is the mean sentence
// loss (full-sequence NLL under the CRF, summed token cross-entropy
// otherwise). After every epoch the dev corpus F1 drives the halving
// schedule, and the best-dev parameters are kept. A non-finite batch loss
// aborts with the best checkpoint restored.
inline std::vector<EpochStats> train_tagger(
    TaggerModel& model, const std::vector<RawPost>& train_posts,
    const std::vector<RawPost>& dev_posts, const TrainSchedule& schedule,
    Rng& rng, const EpochCallback& callback = nullptr) {
    std::vector<TaggedSentence> sentences =
        prepare_tagged_sentences(train_posts, model.config);
    if (sentences.empty()) throw DataError("training set has no sentences");

    apply_transition_constraints(model);
    Optimizer optimizer(schedule.optimizer);
    LrSchedule lr_schedule(schedule);
    ModelParams best_params = model.params;
    std::vector<EpochStats> log;

    std::vector<std::size_t> order(sentences.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const int s_count = num_tags(model.config.scheme);
    for (int epoch = 1; epoch <= schedule.max_epochs; ++epoch) {
        const double lr = lr_schedule.lr();
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += static_cast<std::size_t>(schedule.batch_size)) {
            std::size_t batch_end =
                std::min(order.size(),
                         batch_start +
                             static_cast<std::size_t>(schedule.batch_size));
            const double inv_batch =
                1.0 / static_cast<double>(batch_end - batch_start);
            model.params.zero_grads();
            double batch_loss = 0.0;
            for (std::size_t k = batch_start; k < batch_end; ++k) {
                const TaggedSentence& sent = sentences[order[k]];
                Graph g(&model.params, &rng, /*train_mode=*/true);
                auto em_vars = tagger_forward(g, model, sent.tokens);
                double sentence_loss;
                if (model.config.use_crf) {
                    EmissionMatrix em =
                        emissions_to_matrix(g, em_vars, s_count);
                    CrfGrads grads;
                    sentence_loss =
                        nll_and_grad(em, detail::pack_crf(model.params),
                                     sent.gold_tags, &grads, inv_batch);
                    for (std::int64_t i = 0; i < grads.transitions.size(); ++i) {
                        model.params.grad("crf.trans").data[
                            static_cast<std::size_t>(i)] +=
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
                    losses.reserve(em_vars.size());
                    for (std::size_t i = 0; i < em_vars.size(); ++i) {
                        losses.push_back(g.softmax_cross_entropy(
                            em_vars[i], sent.gold_tags[i]));
                    }
                    Graph::Var total = g.scale(g.sum(losses), inv_batch);
                    sentence_loss = g.scalar(g.sum(losses));
                    g.backward(total);
                }
                batch_loss += sentence_loss;
            }
            if (!std::isfinite(batch_loss)) {
                model.params = best_params;
                throw NumericError(
                    "non-finite training loss in epoch " +
                    std::to_string(epoch) +
                    "; restored the best checkpoint so far");
            }
            loss_sum += batch_loss;
            optimizer.step(model.params, lr);
            apply_transition_constraints(model);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_loss = loss_sum / static_cast<double>(sentences.size());
        stats.lr = lr;
        stats.dev_f1 = tagger_dev_f1(model, dev_posts);
        stats.improved = lr_schedule.observe(stats.dev_f1);
        if (stats.improved) best_params = model.params;
        log.push_back(stats);
        if (callback && !callback(stats)) break;
        if (lr_schedule.should_stop()) break;
    }
    model.params = std::move(best_params);
    return log;
}

}  // namespace toxspan
