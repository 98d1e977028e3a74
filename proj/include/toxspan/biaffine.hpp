// The span-scoring system: two FFNNs build start/end representations from
// the encoder output, a biaffine form scores every candidate span per
// category, and decoding greedily keeps the highest-ranked spans that do
// not clash (overlap, contain, or sit inside an already-kept span).
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "toxspan/encoder.hpp"
#include "toxspan/errors.hpp"
#include "toxspan/eval.hpp"
#include "toxspan/graph.hpp"
#include "toxspan/nn.hpp"
#include "toxspan/span_codec.hpp"
#include "toxspan/text_prep.hpp"

namespace toxspan {

struct BiaffineConfig {
    EncoderConfig encoder{
        .word_dim = 300,
        .char_dim = 25,
        .char_hidden = 25,
        .lstm_hidden = 200,
        .lstm_layers = 3,
        .emb_dropout = 0.5,
        .lstm_dropout = 0.4,
        .use_sentence_lstm = true,
    };
    int ffnn_hidden = 150;
    int ffnn_out = 150;
    double ffnn_dropout = 0.2;
    int categories = 2;  // toxic + non-entity (index 0)
    int max_width = 16;  // tokens; 0 = unbounded
    // Training-time negative subsampling: keep at most ratio * #gold
    // non-entity spans per sentence; 0 keeps every negative.
    double negative_ratio = 0.0;
    bool use_preprocessing = true;
    std::uint64_t seed = 42;
};

struct BiaffineSchedule {
    OptimizerKind optimizer = OptimizerKind::Adam;
    double lr = 1e-4;
    int batch_size = 32;
    int max_steps = 40000;
    int eval_every = 250;        // steps between dev evaluations
    int plateau_patience = 10;   // dev evaluations without improvement
};

struct BiaffineModel {
    BiaffineConfig config;
    Vocab vocab;
    ModelParams params;
};

inline void init_biaffine(BiaffineModel& model, Rng& rng) {
    const BiaffineConfig& cfg = model.config;
    init_encoder(model.params, rng, cfg.encoder, model.vocab);
    const int x_dim = cfg.encoder.output_dim();
    init_ffnn(model.params, rng, "ffnn_s", x_dim, cfg.ffnn_hidden,
              cfg.ffnn_out);
    init_ffnn(model.params, rng, "ffnn_e", x_dim, cfg.ffnn_hidden,
              cfg.ffnn_out);
    const int p = cfg.ffnn_out, c = cfg.categories;
    double limit = std::sqrt(6.0 / (2.0 * p));
    init_uniform(model.params.add("biaffine.U", {p, c, p}), rng, -limit,
                 limit);
    limit = std::sqrt(6.0 / (2.0 * p + c));
    init_uniform(model.params.add("biaffine.W", {c, 2 * p}), rng, -limit,
                 limit);
    model.params.add("biaffine.b", {c});
}

// Scores for every span (s, e) with s <= e and width <= max_width,
// enumerated by start then end. vars is filled only when built on a live
// graph for training.
struct SpanScoreTensor {
    int n = 0;
    int c = 2;
    std::vector<TokenSpan> spans;
    std::vector<Tensor> scores;      // one [c] vector per span
    std::vector<Graph::Var> vars;    // parallel to spans when present
};

inline SpanScoreTensor score_all_spans(Graph& g, BiaffineModel& model,
                                       const std::vector<Token>& tokens,
                                       bool keep_vars = false) {
    const BiaffineConfig& cfg = model.config;
    std::vector<Graph::Var> xs =
        encode_tokens(g, model.params, cfg.encoder, model.vocab, tokens);
    const int n = static_cast<int>(xs.size());
    std::vector<Graph::Var> hs(xs.size()), he(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        hs[i] = ffnn(g, "ffnn_s", xs[i], Activation::Relu, cfg.ffnn_dropout);
        he[i] = ffnn(g, "ffnn_e", xs[i], Activation::Relu, cfg.ffnn_dropout);
    }
    Graph::Var u = g.param("biaffine.U");
    Graph::Var w = g.param("biaffine.W");
    Graph::Var b = g.param("biaffine.b");
    SpanScoreTensor sst;
    sst.n = n;
    sst.c = cfg.categories;
    const int width_cap = cfg.max_width > 0 ? cfg.max_width : n;
    for (int s = 0; s < n; ++s) {
        for (int e = s; e < n && e - s + 1 <= width_cap; ++e) {
            Graph::Var r = g.biaffine(u, w, b, hs[static_cast<std::size_t>(s)],
                                      he[static_cast<std::size_t>(e)]);
            sst.spans.push_back({s, e});
            sst.scores.push_back(g.value(r));
            if (keep_vars) sst.vars.push_back(r);
        }
    }
    return sst;
}

struct RankedSpan {
    TokenSpan span;
    int category = 0;
    double score = 0.0;
};

inline bool spans_clash(const TokenSpan& a, const TokenSpan& b) {
    return a.s <= b.e && b.s <= a.e;  // covers overlap and containment
}

// Candidates are spans whose argmax category is not non-entity, ranked by
// winning score (ties: earlier start, then shorter). The greedy scan keeps
// a candidate iff it clashes with no previously kept span.
inline std::vector<RankedSpan> decode(const SpanScoreTensor& sst) {
    std::vector<RankedSpan> candidates;
    for (std::size_t i = 0; i < sst.spans.size(); ++i) {
        const Tensor& score = sst.scores[i];
        int arg = 0;
        for (int k = 1; k < sst.c; ++k) {
            if (score(k) > score(arg)) arg = k;
        }
        if (arg == 0) continue;
        candidates.push_back({sst.spans[i], arg, score(arg)});
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const RankedSpan& a, const RankedSpan& b) {
                  if (a.score != b.score) return a.score > b.score;
                  if (a.span.s != b.span.s) return a.span.s < b.span.s;
                  return a.span.e < b.span.e;
              });
    std::vector<RankedSpan> kept;
    for (const RankedSpan& cand : candidates) {
        bool clashes = false;
        for (const RankedSpan& sel : kept) {
            if (spans_clash(cand.span, sel.span)) {
                clashes = true;
                break;
            }
        }
        if (!clashes) kept.push_back(cand);
    }
    return kept;
}

inline std::vector<TokenSpan> decode_to_spans(const SpanScoreTensor& sst) {
    std::vector<RankedSpan> ranked = decode(sst);
    std::vector<TokenSpan> spans;
    spans.reserve(ranked.size());
    for (const RankedSpan& r : ranked) spans.push_back(r.span);
    std::sort(spans.begin(), spans.end(),
              [](const TokenSpan& a, const TokenSpan& b) { return a.s < b.s; });
    return spans;
}

struct SpanLossStats {
    int gold_spans = 0;
    int gold_too_wide = 0;  // wider than max_width: excluded from the loss
    int included_spans = 0;
};

// Mean per-span softmax cross-entropy over the enumerated spans: gold spans
// are category 1, everything else non-entity. include, when given, selects
// the participating span indices (negative subsampling).
inline Graph::Var span_loss(Graph& g, const SpanScoreTensor& sst,
                            const std::vector<TokenSpan>& gold,
                            SpanLossStats* stats = nullptr,
                            const std::vector<std::size_t>* include = nullptr) {
    if (stats != nullptr) {
        stats->gold_spans = static_cast<int>(gold.size());
        for (const TokenSpan& sp : gold) {
            bool enumerated = false;
            for (const TokenSpan& cand : sst.spans) {
                if (cand == sp) {
                    enumerated = true;
                    break;
                }
            }
            if (!enumerated) ++stats->gold_too_wide;
        }
    }
    auto label_of = [&](std::size_t i) {
        for (const TokenSpan& sp : gold) {
            if (sst.spans[i] == sp) return 1;
        }
        return 0;
    };
    std::vector<Graph::Var> losses;
    if (include != nullptr) {
        losses.reserve(include->size());
        for (std::size_t i : *include) {
            losses.push_back(g.softmax_cross_entropy(sst.vars[i], label_of(i)));
        }
    } else {
        losses.reserve(sst.spans.size());
        for (std::size_t i = 0; i < sst.spans.size(); ++i) {
            losses.push_back(g.softmax_cross_entropy(sst.vars[i], label_of(i)));
        }
    }
    if (stats != nullptr) stats->included_spans = static_cast<int>(losses.size());
    return g.scale(g.sum(losses), 1.0 / static_cast<double>(losses.size()));
}

// One-call loss + gradient accumulation for a single sentence; returns the
// (unweighted) loss value. Gradients scale by weight. With a training rng
// and negative_ratio > 0, negatives are subsampled to ratio * #gold.
inline double span_loss_and_grad(BiaffineModel& model,
                                 const std::vector<Token>& tokens,
                                 const std::vector<TokenSpan>& gold,
                                 double weight = 1.0, Rng* rng = nullptr,
                                 SpanLossStats* stats = nullptr) {
    Graph g(&model.params, rng, rng != nullptr);
    SpanScoreTensor sst = score_all_spans(g, model, tokens, /*keep_vars=*/true);
    std::vector<std::size_t> include;
    const std::vector<std::size_t>* include_ptr = nullptr;
    if (rng != nullptr && model.config.negative_ratio > 0.0) {
        std::vector<std::size_t> negatives;
        for (std::size_t i = 0; i < sst.spans.size(); ++i) {
            bool is_gold = false;
            for (const TokenSpan& sp : gold) {
                if (sst.spans[i] == sp) {
                    is_gold = true;
                    break;
                }
            }
            if (is_gold) {
                include.push_back(i);
            } else {
                negatives.push_back(i);
            }
        }
        auto target = static_cast<std::size_t>(std::ceil(
            model.config.negative_ratio *
            std::max<std::size_t>(1, include.size())));
        rng->shuffle(negatives);
        if (negatives.size() > target) negatives.resize(target);
        include.insert(include.end(), negatives.begin(), negatives.end());
        std::sort(include.begin(), include.end());
        if (include.empty()) return 0.0;
        include_ptr = &include;
    }
    Graph::Var loss = span_loss(g, sst, gold, stats, include_ptr);
    double value = g.scalar(loss);
    g.backward(g.scale(loss, weight));
    return value;
}

inline OffsetSet predict_post_biaffine(BiaffineModel& model,
                                       const std::string& text,
                                       bool include_gaps = true) {
    std::vector<Token> tokens =
        tokenize_post(text, model.config.use_preprocessing);
    if (tokens.empty()) return {};
    Graph g(&model.params);
    SpanScoreTensor sst = score_all_spans(g, model, tokens);
    return token_spans_to_offsets(decode_to_spans(sst), tokens, include_gaps);
}

inline double biaffine_dev_f1(BiaffineModel& model,
                              const std::vector<RawPost>& dev) {
    std::vector<ScoredPost> scored;
    scored.reserve(dev.size());
    for (const RawPost& post : dev) {
        scored.push_back({predict_post_biaffine(model, post.text), post.gold});
    }
    return scored.empty() ? 0.0 : corpus_f1(scored);
}

struct StepStats {
    int step = 0;            // gradient steps taken so far
    double mean_loss = 0.0;  // mean sentence loss since the last evaluation
    double dev_f1 = 0.0;
    double lr = 0.0;
    bool improved = false;
};

using StepCallback = std::function<bool(const StepStats&)>;

struct BiaffineTrainSentence {
    std::vector<Token> tokens;
    std::vector<TokenSpan> gold;
};

inline std::vector<BiaffineTrainSentence> prepare_span_sentences(
    const std::vector<RawPost>& posts, const BiaffineConfig& config) {
    std::vector<BiaffineTrainSentence> out;
    out.reserve(posts.size());
    for (const RawPost& post : posts) {
        BiaffineTrainSentence sent;
        sent.tokens = tokenize_post(post.text, config.use_preprocessing);
        if (sent.tokens.empty()) continue;
        sent.gold = offsets_to_token_spans(post.gold, sent.tokens);
        out.push_back(std::move(sent));
    }
    return out;
}

// Adam over shuffled batches for at most max_steps steps, evaluating dev F1
// every eval_every steps; stops early after plateau_patience evaluations
// without improvement. Keeps the best-dev parameters.
inline std::vector<StepStats> train_biaffine(
    BiaffineModel& model, const std::vector<RawPost>& train_posts,
    const std::vector<RawPost>& dev_posts, const BiaffineSchedule& schedule,
    Rng& rng, const StepCallback& callback = nullptr) {
    std::vector<BiaffineTrainSentence> sentences =
        prepare_span_sentences(train_posts, model.config);
    if (sentences.empty()) throw DataError("training set has no sentences");

    Optimizer optimizer(schedule.optimizer);
    ModelParams best_params = model.params;
    double best_f1 = 0.0;
    int evals_since_improvement = 0;
    std::vector<StepStats> log;

    std::vector<std::size_t> order(sentences.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t cursor = order.size();  // forces a shuffle on first use

    double loss_sum = 0.0;
    int loss_count = 0;
    bool stop = false;
    for (int step = 1; step <= schedule.max_steps && !stop; ++step) {
        model.params.zero_grads();
        const double inv_batch = 1.0 / schedule.batch_size;
        double batch_loss = 0.0;
        for (int k = 0; k < schedule.batch_size; ++k) {
            if (cursor >= order.size()) {
                rng.shuffle(order);
                cursor = 0;
            }
            const BiaffineTrainSentence& sent = sentences[order[cursor++]];
            batch_loss += span_loss_and_grad(model, sent.tokens, sent.gold,
                                             inv_batch, &rng);
        }
        if (!std::isfinite(batch_loss)) {
            model.params = best_params;
            throw NumericError("non-finite training loss at step " +
                               std::to_string(step) +
                               "; restored the best checkpoint so far");
        }
        optimizer.step(model.params, schedule.lr);
        loss_sum += batch_loss * inv_batch;
        ++loss_count;

        if (step % schedule.eval_every == 0 || step == schedule.max_steps) {
            StepStats stats;
            stats.step = step;
            stats.mean_loss = loss_sum / std::max(1, loss_count);
            stats.lr = schedule.lr;
            stats.dev_f1 = biaffine_dev_f1(model, dev_posts);
            stats.improved = stats.dev_f1 > best_f1;
            if (stats.improved) {
                best_f1 = stats.dev_f1;
                best_params = model.params;
                evals_since_improvement = 0;
            } else {
                ++evals_since_improvement;
                if (evals_since_improvement >= schedule.plateau_patience) {
                    stop = true;
                }
            }
            loss_sum = 0.0;
            loss_count = 0;
            log.push_back(stats);
            if (callback && !callback(stats)) stop = true;
        }
    }
    model.params = std::move(best_params);
    return log;
}

}  // namespace toxspan
