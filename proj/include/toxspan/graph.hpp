// Reverse-mode automatic differentiation over tensor-valued nodes. A Graph
// is built per sentence: leaves are model parameters (or embedding rows),
// interior nodes are the vector operations the models are made of, and
// backward() pushes seeded gradients down to the ModelParams accumulators.
#pragma once

#include <cassert>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "toxspan/tensor.hpp"

namespace toxspan {

class Graph {
public:
    struct Var {
        int id = -1;
        bool valid() const { return id >= 0; }
    };

    // rng is only needed when train_mode dropout is in play.
    explicit Graph(ModelParams* params, Rng* rng = nullptr,
                   bool train_mode = false)
        : params_(params), rng_(rng), train_mode_(train_mode) {}

    bool train_mode() const { return train_mode_; }

    Var input(Tensor value) {
        return push(Op::Input, std::move(value), false);
    }

    // One node per parameter name per graph; gradients flush into the
    // ModelParams accumulator on backward().
    Var param(const std::string& name) {
        auto it = param_cache_.find(name);
        if (it != param_cache_.end()) return it->second;
        Node node;
        node.op = Op::Param;
        node.value = params_->tensor(name);
        node.requires_grad = true;
        node.name = name;
        Var v = push_node(std::move(node));
        param_cache_.emplace(name, v);
        return v;
    }

    // A single row of a [rows x dim] table; backward scatters into that row.
    Var embed_row(const std::string& table, int row) {
        const Tensor& t = params_->tensor(table);
        assert(t.rank() == 2);
        if (row < 0 || row >= t.dim(0)) row = 0;  // UNK absorbs bad ids
        std::string key = table + '#' + std::to_string(row);
        auto it = param_cache_.find(key);
        if (it != param_cache_.end()) return it->second;
        Node node;
        node.op = Op::EmbedRow;
        const int dim = t.dim(1);
        node.value = Tensor({dim});
        for (int j = 0; j < dim; ++j) node.value(j) = t(row, j);
        node.requires_grad = true;
        node.name = table;
        node.i0 = row;
        Var v = push_node(std::move(node));
        param_cache_.emplace(key, v);
        return v;
    }

    // y = W x, with W [m x n] and x [n].
    Var matvec(Var w, Var x) {
        const Tensor& wt = value(w);
        const Tensor& xt = value(x);
        assert(wt.rank() == 2 && wt.dim(1) == xt.size());
        const int m = wt.dim(0), n = wt.dim(1);
        Tensor y({m});
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            const double* wrow = &wt.data[static_cast<std::size_t>(i) * n];
            for (int j = 0; j < n; ++j) acc += wrow[j] * xt(j);
            y(i) = acc;
        }
        return push(Op::MatVec, std::move(y), needs_grad(w) || needs_grad(x), w.id, x.id);
    }

    Var add(Var a, Var b) {
        const Tensor& at = value(a);
        const Tensor& bt = value(b);
        assert(at.size() == bt.size());
        Tensor y = at;
        for (std::int64_t i = 0; i < y.size(); ++i) y.data[i] += bt.data[i];
        return push(Op::Add, std::move(y), needs_grad(a) || needs_grad(b), a.id, b.id);
    }

    Var mul(Var a, Var b) {
        const Tensor& at = value(a);
        const Tensor& bt = value(b);
        assert(at.size() == bt.size());
        Tensor y = at;
        for (std::int64_t i = 0; i < y.size(); ++i) y.data[i] *= bt.data[i];
        return push(Op::Mul, std::move(y), needs_grad(a) || needs_grad(b), a.id, b.id);
    }

    Var sigmoid(Var a) {
        Tensor y = value(a);
        for (double& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
        return push(Op::Sigmoid, std::move(y), needs_grad(a), a.id);
    }

    Var tanh(Var a) {
        Tensor y = value(a);
        for (double& v : y.data) v = std::tanh(v);
        return push(Op::Tanh, std::move(y), needs_grad(a), a.id);
    }

    Var relu(Var a) {
        Tensor y = value(a);
        for (double& v : y.data) v = v > 0.0 ? v : 0.0;
        return push(Op::Relu, std::move(y), needs_grad(a), a.id);
    }

    Var concat(Var a, Var b) {
        const Tensor& at = value(a);
        const Tensor& bt = value(b);
        Tensor y({static_cast<int>(at.size() + bt.size())});
        std::copy(at.data.begin(), at.data.end(), y.data.begin());
        std::copy(bt.data.begin(), bt.data.end(),
                  y.data.begin() + at.size());
        return push(Op::Concat, std::move(y), needs_grad(a) || needs_grad(b), a.id, b.id);
    }

    Var slice(Var a, int offset, int len) {
        const Tensor& at = value(a);
        assert(offset >= 0 && offset + len <= at.size());
        Tensor y({len});
        std::copy(at.data.begin() + offset, at.data.begin() + offset + len,
                  y.data.begin());
        Var v = push(Op::Slice, std::move(y), needs_grad(a), a.id);
        nodes_[static_cast<std::size_t>(v.id)].i0 = offset;
        return v;
    }

    // Inverted dropout; identity outside train mode or at rate 0.
    Var dropout(Var a, double rate) {
        if (!train_mode_ || rate <= 0.0) return a;
        assert(rng_ != nullptr);
        const Tensor& at = value(a);
        Tensor mask({static_cast<int>(at.size())});
        const double keep = 1.0 - rate;
        for (double& v : mask.data) {
            v = rng_->uniform() < rate ? 0.0 : 1.0 / keep;
        }
        Tensor y = at;
        for (std::int64_t i = 0; i < y.size(); ++i) y.data[i] *= mask.data[i];
        Var v = push(Op::Dropout, std::move(y), needs_grad(a), a.id);
        nodes_[static_cast<std::size_t>(v.id)].aux = std::move(mask);
        return v;
    }

    // r[k] = hs^T U[:,k,:] he + W[k,:] (hs  ++ he) + b[k]
    // with U [p x c x p], W [c x 2p], b [c], hs/he [p].
    Var biaffine(Var u, Var w, Var b, Var hs, Var he) {
        const Tensor& ut = value(u);
        const Tensor& wt = value(w);
        const Tensor& bt = value(b);
        const Tensor& hst = value(hs);
        const Tensor& het = value(he);
        const int p = static_cast<int>(hst.size());
        const int c = static_cast<int>(bt.size());
        assert(ut.rank() == 3 && ut.dim(0) == p && ut.dim(1) == c &&
               ut.dim(2) == p);
        assert(wt.rank() == 2 && wt.dim(0) == c && wt.dim(1) == 2 * p);
        assert(het.size() == p);
        Tensor y({c});
        for (int k = 0; k < c; ++k) {
            double acc = bt(k);
            for (int a = 0; a < p; ++a) {
                double inner = 0.0;
                for (int e = 0; e < p; ++e) inner += ut(a, k, e) * het(e);
                acc += hst(a) * inner;
            }
            for (int j = 0; j < p; ++j) acc += wt(k, j) * hst(j);
            for (int j = 0; j < p; ++j) acc += wt(k, p + j) * het(j);
            y(k) = acc;
        }
        Node node;
        node.op = Op::Biaffine;
        node.value = std::move(y);
        node.requires_grad = needs_grad(u) || needs_grad(w) || needs_grad(b) ||
                             needs_grad(hs) || needs_grad(he);
        node.in = {u.id, w.id, b.id, hs.id, he.id};
        return push_node(std::move(node));
    }

    // Scalar cross-entropy of softmax(logits) against a gold index.
    Var softmax_cross_entropy(Var logits, int gold) {
        const Tensor& lt = value(logits);
        assert(gold >= 0 && gold < lt.size());
        double mx = lt.data[0];
        for (double v : lt.data) mx = std::max(mx, v);
        double z = 0.0;
        for (double v : lt.data) z += std::exp(v - mx);
        Tensor probs({static_cast<int>(lt.size())});
        for (std::int64_t i = 0; i < lt.size(); ++i) {
            probs.data[i] = std::exp(lt.data[i] - mx) / z;
        }
        Tensor y({1});
        y(0) = -(lt(gold) - mx - std::log(z));
        Var v = push(Op::SoftmaxCE, std::move(y), needs_grad(logits), logits.id);
        Node& node = nodes_[static_cast<std::size_t>(v.id)];
        node.i0 = gold;
        node.aux = std::move(probs);
        return v;
    }

    // Elementwise sum of same-shaped vars.
    Var sum(const std::vector<Var>& terms) {
        assert(!terms.empty());
        Tensor y = value(terms[0]);
        bool rg = needs_grad(terms[0]);
        for (std::size_t i = 1; i < terms.size(); ++i) {
            const Tensor& t = value(terms[i]);
            assert(t.size() == y.size());
            for (std::int64_t j = 0; j < y.size(); ++j) {
                y.data[j] += t.data[j];
            }
            rg = rg || needs_grad(terms[i]);
        }
        Node node;
        node.op = Op::Sum;
        node.value = std::move(y);
        node.requires_grad = rg;
        node.in.reserve(terms.size());
        for (Var t : terms) node.in.push_back(t.id);
        return push_node(std::move(node));
    }

    Var scale(Var a, double factor) {
        Tensor y = value(a);
        for (double& v : y.data) v *= factor;
        Var v = push(Op::Scale, std::move(y), needs_grad(a), a.id);
        nodes_[static_cast<std::size_t>(v.id)].x0 = factor;
        return v;
    }

    const Tensor& value(Var v) const {
        return nodes_[static_cast<std::size_t>(v.id)].value;
    }

    double scalar(Var v) const {
        const Tensor& t = value(v);
        assert(t.size() == 1);
        return t(0);
    }

    // Seeds an output gradient ahead of backward().
    void add_grad(Var v, const Tensor& g) {
        Node& node = nodes_[static_cast<std::size_t>(v.id)];
        assert(g.size() == node.value.size());
        ensure_grad(node);
        for (std::int64_t i = 0; i < g.size(); ++i) {
            node.grad.data[i] += g.data[i];
        }
    }

    void backward(Var loss) {
        Tensor one({1});
        one(0) = 1.0;
        add_grad(loss, one);
        backward();
    }

    // Propagates all seeded gradients; parameter leaves flush into the
    // ModelParams gradient accumulators.
    void backward() {
        for (std::size_t idx = nodes_.size(); idx-- > 0;) {
            Node& node = nodes_[idx];
            if (!node.requires_grad || node.grad.data.empty()) continue;
            propagate(node);
        }
    }

private:
    enum class Op {
        Input, Param, EmbedRow, MatVec, Add, Mul, Sigmoid, Tanh, Relu,
        Concat, Slice, Dropout, Biaffine, SoftmaxCE, Sum, Scale
    };

    struct Node {
        Op op = Op::Input;
        Tensor value;
        Tensor grad;  // lazily allocated
        Tensor aux;   // dropout mask / softmax probabilities
        std::vector<int> in;
        std::string name;  // parameter name for Param/EmbedRow
        int i0 = 0;        // slice offset / gold index / embed row
        double x0 = 0.0;   // scale factor
        bool requires_grad = false;
    };

    bool needs_grad(Var v) const {
        return nodes_[static_cast<std::size_t>(v.id)].requires_grad;
    }

    static void ensure_grad(Node& node) {
        if (node.grad.data.empty()) node.grad = Tensor(node.value.shape);
    }

    Node& in_node(const Node& node, std::size_t slot) {
        return nodes_[static_cast<std::size_t>(node.in[slot])];
    }

    // Adds g into the slot-th input's gradient if that input needs it.
    Tensor* grad_sink(const Node& node, std::size_t slot) {
        Node& src = in_node(node, slot);
        if (!src.requires_grad) return nullptr;
        ensure_grad(src);
        return &src.grad;
    }

    void propagate(Node& node) {
        const Tensor& g = node.grad;
        switch (node.op) {
            case Op::Input:
                break;
            case Op::Param: {
                Tensor& acc = params_->grad(node.name);
                for (std::int64_t i = 0; i < g.size(); ++i) {
                    acc.data[i] += g.data[i];
                }
                break;
            }
            case Op::EmbedRow: {
                Tensor& acc = params_->grad(node.name);
                const int dim = acc.dim(1);
                for (int j = 0; j < dim; ++j) acc(node.i0, j) += g(j);
                break;
            }
            case Op::MatVec: {
                const Tensor& w = in_node(node, 0).value;
                const Tensor& x = in_node(node, 1).value;
                const int m = w.dim(0), n = w.dim(1);
                if (Tensor* dw = grad_sink(node, 0)) {
                    for (int i = 0; i < m; ++i) {
                        double gi = g(i);
                        if (gi == 0.0) continue;
                        double* row = &dw->data[static_cast<std::size_t>(i) * n];
                        for (int j = 0; j < n; ++j) row[j] += gi * x(j);
                    }
                }
                if (Tensor* dx = grad_sink(node, 1)) {
                    for (int i = 0; i < m; ++i) {
                        double gi = g(i);
                        if (gi == 0.0) continue;
                        const double* row =
                            &w.data[static_cast<std::size_t>(i) * n];
                        for (int j = 0; j < n; ++j) dx->data[j] += gi * row[j];
                    }
                }
                break;
            }
            case Op::Add:
                for (std::size_t s = 0; s < 2; ++s) {
                    if (Tensor* d = grad_sink(node, s)) {
                        for (std::int64_t i = 0; i < g.size(); ++i) {
                            d->data[i] += g.data[i];
                        }
                    }
                }
                break;
            case Op::Mul: {
                const Tensor& a = in_node(node, 0).value;
                const Tensor& b = in_node(node, 1).value;
                if (Tensor* da = grad_sink(node, 0)) {
                    for (std::int64_t i = 0; i < g.size(); ++i) {
                        da->data[i] += g.data[i] * b.data[i];
                    }
                }
                if (Tensor* db = grad_sink(node, 1)) {
                    for (std::int64_t i = 0; i < g.size(); ++i) {
                        db->data[i] += g.data[i] * a.data[i];
                    }
                }
                break;
            }
            case Op::Sigmoid:
                if (Tensor* d = grad_sink(node, 0)) {
                    for (std::int64_t i = 0; i < g.size(); ++i) {
                        double y = node.value.data[i];
                        d->data[i] += g.data[i] * y * (1.0 - y);
                    }
                }
                break;
            case Op::Tanh:
                if (Tensor* d = grad_sink(node, 0)) {
                    for (std::int64_t i = 0; i < g.size(); ++i) {
                        double y = node.value.data[i];
                        d->data[i] += g.data[i] * (1.0 - y * y);
                    }
                }
                break;
            case Op::Relu: {
                const Tensor& x = in_node(node, 0).value;
                if (Tensor* d = grad_sink(node, 0)) {
                    for (std::int64_t i = 0; i < g.size(); ++i) {
                        if (x.data[i] > 0.0) d->data[i] += g.data[i];
                    }
                }
                break;
            }
            case Op::Concat: {
                const std::int64_t na = in_node(node, 0).value.size();
                if (Tensor* da = grad_sink(node, 0)) {
                    for (std::int64_t i = 0; i < na; ++i) {
                        da->data[i] += g.data[i];
                    }
                }
                if (Tensor* db = grad_sink(node, 1)) {
                    for (std::int64_t i = na; i < g.size(); ++i) {
                        db->data[i - na] += g.data[i];
                    }
                }
                break;
            }
            case Op::Slice:
                if (Tensor* d = grad_sink(node, 0)) {
                    for (std::int64_t i = 0; i < g.size(); ++i) {
                        d->data[static_cast<std::size_t>(node.i0) + i] +=
                            g.data[i];
                    }
                }
                break;
            case Op::Dropout:
                if (Tensor* d = grad_sink(node, 0)) {
                    for (std::int64_t i = 0; i < g.size(); ++i) {
                        d->data[i] += g.data[i] * node.aux.data[i];
                    }
                }
                break;
            case Op::Biaffine: {
                const Tensor& u = in_node(node, 0).value;
                const Tensor& w = in_node(node, 1).value;
                const Tensor& hs = in_node(node, 3).value;
                const Tensor& he = in_node(node, 4).value;
                const int p = static_cast<int>(hs.size());
                const int c = static_cast<int>(node.value.size());
                Tensor* du = grad_sink(node, 0);
                Tensor* dw = grad_sink(node, 1);
                Tensor* db = grad_sink(node, 2);
                Tensor* dhs = grad_sink(node, 3);
                Tensor* dhe = grad_sink(node, 4);
                for (int k = 0; k < c; ++k) {
                    const double gk = g(k);
                    if (gk == 0.0) continue;
                    if (db) db->data[static_cast<std::size_t>(k)] += gk;
                    for (int a = 0; a < p; ++a) {
                        const double gha = gk * hs(a);
                        double inner = 0.0;
                        for (int e = 0; e < p; ++e) {
                            if (du) (*du)(a, k, e) += gha * he(e);
                            inner += u(a, k, e) * he(e);
                        }
                        if (dhs) dhs->data[static_cast<std::size_t>(a)] +=
                            gk * (inner + w(k, a));
                    }
                    if (dhe) {
                        for (int e = 0; e < p; ++e) {
                            double inner = 0.0;
                            for (int a = 0; a < p; ++a) {
                                inner += hs(a) * u(a, k, e);
                            }
                            dhe->data[static_cast<std::size_t>(e)] +=
                                gk * (inner + w(k, p + e));
                        }
                    }
                    if (dw) {
                        for (int j = 0; j < p; ++j) {
                            (*dw)(k, j) += gk * hs(j);
                            (*dw)(k, p + j) += gk * he(j);
                        }
                    }
                }
                break;
            }
            case Op::SoftmaxCE:
                if (Tensor* d = grad_sink(node, 0)) {
                    const double gs = g(0);
                    for (std::int64_t i = 0; i < d->size(); ++i) {
                        double delta = i == node.i0 ? 1.0 : 0.0;
                        d->data[i] += gs * (node.aux.data[i] - delta);
                    }
                }
                break;
            case Op::Sum:
                for (std::size_t s = 0; s < node.in.size(); ++s) {
                    if (Tensor* d = grad_sink(node, s)) {
                        for (std::int64_t i = 0; i < g.size(); ++i) {
                            d->data[i] += g.data[i];
                        }
                    }
                }
                break;
            case Op::Scale:
                if (Tensor* d = grad_sink(node, 0)) {
                    for (std::int64_t i = 0; i < g.size(); ++i) {
                        d->data[i] += g.data[i] * node.x0;
                    }
                }
                break;
        }
    }

    Var push(Op op, Tensor value, bool requires_grad, int a = -1, int b = -1) {
        Node node;
        node.op = op;
        node.value = std::move(value);
        node.requires_grad = requires_grad;
        if (a >= 0) node.in.push_back(a);
        if (b >= 0) node.in.push_back(b);
        return push_node(std::move(node));
    }

    Var push_node(Node node) {
        nodes_.push_back(std::move(node));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    ModelParams* params_;
    Rng* rng_;
    bool train_mode_;
    std::vector<Node> nodes_;
    std::map<std::string, Var> param_cache_;
};

}  // namespace toxspan
