// Network building blocks on top of the autodiff graph: embeddings, LSTM /
// BiLSTM, single-hidden-layer FFNN, the biaffine form, initialization, and
// the SGD/Adam optimizers. Graph builders are the one implementation; the
// pure tensor overloads run a throwaway graph and return values.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "toxspan/graph.hpp"
#include "toxspan/tensor.hpp"

namespace toxspan {

// ---------------------------------------------------------------------------
// Initialization. Embeddings uniform(-0.1, 0.1); dense layers Xavier-style;
// LSTM forget-gate bias 1. Tensors fill in row-major draw order, so a fixed
// seed and a fixed init call order give bit-identical parameters.

inline void init_uniform(Tensor& t, Rng& rng, double lo, double hi) {
    for (double& v : t.data) v = rng.uniform(lo, hi);
}

inline void init_embedding(ModelParams& p, Rng& rng, const std::string& name,
                           int rows, int dim) {
    Tensor& t = p.add(name, {rows, dim});
    init_uniform(t, rng, -0.1, 0.1);
}

inline void init_linear(ModelParams& p, Rng& rng, const std::string& prefix,
                        int in, int out) {
    double limit = std::sqrt(6.0 / (in + out));
    init_uniform(p.add(prefix + ".W", {out, in}), rng, -limit, limit);
    p.add(prefix + ".b", {out});
}

// Gate order in the stacked [4h x *] matrices: input, forget, cell, output.
inline void init_lstm(ModelParams& p, Rng& rng, const std::string& prefix,
                      int input_dim, int hidden) {
    double limit = std::sqrt(6.0 / (input_dim + hidden));
    init_uniform(p.add(prefix + ".W", {4 * hidden, input_dim}), rng, -limit,
                 limit);
    limit = std::sqrt(6.0 / (hidden + hidden));
    init_uniform(p.add(prefix + ".U", {4 * hidden, hidden}), rng, -limit,
                 limit);
    Tensor& b = p.add(prefix + ".b", {4 * hidden});
    for (int i = hidden; i < 2 * hidden; ++i) b(i) = 1.0;
}

inline void init_ffnn(ModelParams& p, Rng& rng, const std::string& prefix,
                      int in, int hidden, int out) {
    init_linear(p, rng, prefix + ".l1", in, hidden);
    init_linear(p, rng, prefix + ".l2", hidden, out);
}

// ---------------------------------------------------------------------------
// Graph builders.

struct LstmState {
    Graph::Var h;
    Graph::Var c;
};

inline LstmState lstm_step(Graph& g, Graph::Var w, Graph::Var u, Graph::Var b,
                           Graph::Var x, const LstmState* prev, int hidden) {
    Graph::Var pre = g.add(g.matvec(w, x), b);
    if (prev != nullptr) pre = g.add(pre, g.matvec(u, prev->h));
    Graph::Var gi = g.sigmoid(g.slice(pre, 0, hidden));
    Graph::Var gf = g.sigmoid(g.slice(pre, hidden, hidden));
    Graph::Var gc = g.tanh(g.slice(pre, 2 * hidden, hidden));
    Graph::Var go = g.sigmoid(g.slice(pre, 3 * hidden, hidden));
    LstmState s;
    Graph::Var ig = g.mul(gi, gc);
    s.c = prev != nullptr ? g.add(g.mul(gf, prev->c), ig) : ig;
    s.h = g.mul(go, g.tanh(s.c));
    return s;
}

// Runs one direction over the sequence; outputs per input position (in the
// original order even when reversed). final_state, if given, receives the
// last state of the run.
inline std::vector<Graph::Var> run_lstm(Graph& g, ModelParams& params,
                                        const std::string& prefix,
                                        const std::vector<Graph::Var>& xs,
                                        bool reverse,
                                        LstmState* final_state = nullptr) {
    const int hidden = params.tensor(prefix + ".U").dim(1);
    Graph::Var w = g.param(prefix + ".W");
    Graph::Var u = g.param(prefix + ".U");
    Graph::Var b = g.param(prefix + ".b");
    const int n = static_cast<int>(xs.size());
    std::vector<Graph::Var> out(xs.size());
    LstmState state;
    bool has_state = false;
    for (int step = 0; step < n; ++step) {
        int pos = reverse ? n - 1 - step : step;
        state = lstm_step(g, w, u, b, xs[static_cast<std::size_t>(pos)],
                          has_state ? &state : nullptr, hidden);
        has_state = true;
        out[static_cast<std::size_t>(pos)] = state.h;
    }
    if (final_state != nullptr) *final_state = state;
    return out;
}

inline void init_bilstm(ModelParams& p, Rng& rng, const std::string& prefix,
                        int input_dim, int hidden) {
    init_lstm(p, rng, prefix + ".fwd", input_dim, hidden);
    init_lstm(p, rng, prefix + ".bwd", input_dim, hidden);
}

// Per-position concatenation of the two directions: [2h] per token.
inline std::vector<Graph::Var> bilstm(Graph& g, ModelParams& params,
                                      const std::string& prefix,
                                      const std::vector<Graph::Var>& xs) {
    std::vector<Graph::Var> fwd = run_lstm(g, params, prefix + ".fwd", xs,
                                           /*reverse=*/false);
    std::vector<Graph::Var> bwd = run_lstm(g, params, prefix + ".bwd", xs,
                                           /*reverse=*/true);
    std::vector<Graph::Var> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out[i] = g.concat(fwd[i], bwd[i]);
    }
    return out;
}

// Character-level word embedding: embed each character id, run a BiLSTM
// over the word, concatenate the two final states -> [2 * char_hidden].
inline Graph::Var char_word_embedding(Graph& g, ModelParams& params,
                                      const std::string& emb_table,
                                      const std::string& lstm_prefix,
                                      const std::vector<int>& char_ids) {
    std::vector<Graph::Var> xs;
    xs.reserve(char_ids.size());
    for (int id : char_ids) xs.push_back(g.embed_row(emb_table, id));
    LstmState fwd_final, bwd_final;
    run_lstm(g, params, lstm_prefix + ".fwd", xs, false, &fwd_final);
    run_lstm(g, params, lstm_prefix + ".bwd", xs, true, &bwd_final);
    return g.concat(fwd_final.h, bwd_final.h);
}

enum class Activation { Relu, Tanh };

// One hidden layer, configurable activation, linear output.
inline Graph::Var ffnn(Graph& g, const std::string& prefix, Graph::Var x,
                       Activation act = Activation::Relu,
                       double dropout = 0.0) {
    Graph::Var h = g.add(g.matvec(g.param(prefix + ".l1.W"), x),
                         g.param(prefix + ".l1.b"));
    h = act == Activation::Relu ? g.relu(h) : g.tanh(h);
    h = g.dropout(h, dropout);
    return g.add(g.matvec(g.param(prefix + ".l2.W"), h),
                 g.param(prefix + ".l2.b"));
}

// ---------------------------------------------------------------------------
// Pure tensor entry points.

// Max-subtracted softmax; output sums to 1.
inline Tensor softmax(const Tensor& logits) {
    Tensor out = logits;
    double mx = out.data[0];
    for (double v : out.data) mx = std::max(mx, v);
    double z = 0.0;
    for (double& v : out.data) {
        v = std::exp(v - mx);
        z += v;
    }
    for (double& v : out.data) v /= z;
    return out;
}

// Row lookup; ids outside [0, rows) fall back to the UNK row 0.
inline Tensor embed_lookup(const Tensor& table, int token_id) {
    if (token_id < 0 || token_id >= table.dim(0)) token_id = 0;
    const int dim = table.dim(1);
    Tensor out({dim});
    for (int j = 0; j < dim; ++j) out(j) = table(token_id, j);
    return out;
}

inline Tensor biaffine_form(const Tensor& hs, const Tensor& he,
                            const Tensor& u, const Tensor& w,
                            const Tensor& b) {
    Graph g(nullptr);
    Graph::Var y = g.biaffine(g.input(u), g.input(w), g.input(b), g.input(hs),
                              g.input(he));
    return g.value(y);
}

inline std::vector<Tensor> bilstm_forward(const std::vector<Tensor>& inputs,
                                          ModelParams& params,
                                          const std::string& prefix) {
    Graph g(&params);
    std::vector<Graph::Var> xs;
    xs.reserve(inputs.size());
    for (const Tensor& t : inputs) xs.push_back(g.input(t));
    std::vector<Graph::Var> hs = bilstm(g, params, prefix, xs);
    std::vector<Tensor> out;
    out.reserve(hs.size());
    for (Graph::Var v : hs) out.push_back(g.value(v));
    return out;
}

inline Tensor ffnn_forward(const Tensor& x, ModelParams& params,
                           const std::string& prefix,
                           Activation act = Activation::Relu) {
    Graph g(&params);
    return g.value(ffnn(g, prefix, g.input(x), act));
}

inline Tensor char_word_embedding_forward(const std::vector<int>& char_ids,
                                          ModelParams& params,
                                          const std::string& emb_table,
                                          const std::string& lstm_prefix) {
    Graph g(&params);
    return g.value(
        char_word_embedding(g, params, emb_table, lstm_prefix, char_ids));
}

// ---------------------------------------------------------------------------
// Optimizers. Adam state lives here, keyed by parameter name.

enum class OptimizerKind { Sgd, Adam };

inline const char* optimizer_name(OptimizerKind k) {
    return k == OptimizerKind::Sgd ? "sgd" : "adam";
}

class Optimizer {
public:
    explicit Optimizer(OptimizerKind kind, double beta1 = 0.9,
                       double beta2 = 0.999, double eps = 1e-8)
        : kind_(kind), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // Applies the accumulated gradients; the caller zeroes them afterwards.
    void step(ModelParams& params, double lr) {
        if (kind_ == OptimizerKind::Sgd) {
            for (auto& [name, t] : params.all()) {
                const Tensor& g = params.grad(name);
                for (std::int64_t i = 0; i < t.size(); ++i) {
                    t.data[i] -= lr * g.data[i];
                }
            }
            return;
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (auto& [name, t] : params.all()) {
            const Tensor& g = params.grad(name);
            Tensor& m = state(m_, name, t.shape);
            Tensor& v = state(v_, name, t.shape);
            for (std::int64_t i = 0; i < t.size(); ++i) {
                const double gi = g.data[i];
                m.data[i] = beta1_ * m.data[i] + (1.0 - beta1_) * gi;
                v.data[i] = beta2_ * v.data[i] + (1.0 - beta2_) * gi * gi;
                t.data[i] -= lr * (m.data[i] / bc1) /
                             (std::sqrt(v.data[i] / bc2) + eps_);
            }
        }
    }

private:
    Tensor& state(std::map<std::string, Tensor>& store,
                  const std::string& name, const std::vector<int>& shape) {
        auto it = store.find(name);
        if (it == store.end()) it = store.emplace(name, Tensor(shape)).first;
        return it->second;
    }

    OptimizerKind kind_;
    double beta1_, beta2_, eps_;
    int t_ = 0;
    std::map<std::string, Tensor> m_, v_;
};

}  // namespace toxspan
