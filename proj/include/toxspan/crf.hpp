// Linear-chain CRF over tag sequences: forward-algorithm log-partition,
// Viterbi decoding, forward-backward marginals, and exact NLL gradients.
// Emissions are the unnormalized per-token tag scores from the tagger head.
#pragma once

#include <cassert>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "toxspan/tensor.hpp"

namespace toxspan {

struct CrfParams {
    Tensor transitions;  // [S x S], score of tag j following tag i
    Tensor start;        // [S]
    Tensor stop;         // [S]

    int num_tags() const { return static_cast<int>(start.size()); }

    static CrfParams zeros(int num_tags) {
        CrfParams crf;
        crf.transitions = Tensor({num_tags, num_tags});
        crf.start = Tensor({num_tags});
        crf.stop = Tensor({num_tags});
        return crf;
    }
};

// Emission scores, one row per token: Tensor [n x S].
using EmissionMatrix = Tensor;

namespace detail {

inline double logsumexp(const std::vector<double>& xs) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : xs) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double z = 0.0;
    for (double x : xs) z += std::exp(x - mx);
    return mx + std::log(z);
}

// alpha[i][s] = log sum of all prefix paths ending in tag s at position i.
inline std::vector<std::vector<double>> crf_forward(const EmissionMatrix& em,
                                                    const CrfParams& crf) {
    const int n = em.dim(0), s_count = em.dim(1);
    std::vector<std::vector<double>> alpha(
        static_cast<std::size_t>(n),
        std::vector<double>(static_cast<std::size_t>(s_count)));
    for (int s = 0; s < s_count; ++s) alpha[0][s] = crf.start(s) + em(0, s);
    std::vector<double> terms(static_cast<std::size_t>(s_count));
    for (int i = 1; i < n; ++i) {
        for (int s = 0; s < s_count; ++s) {
            for (int t = 0; t < s_count; ++t) {
                terms[t] = alpha[i - 1][t] + crf.transitions(t, s);
            }
            alpha[i][s] = logsumexp(terms) + em(i, s);
        }
    }
    return alpha;
}

// beta[i][s] = log sum of all suffix paths leaving tag s at position i
// (including the stop score, excluding em at i).
inline std::vector<std::vector<double>> crf_backward(const EmissionMatrix& em,
                                                     const CrfParams& crf) {
    const int n = em.dim(0), s_count = em.dim(1);
    std::vector<std::vector<double>> beta(
        static_cast<std::size_t>(n),
        std::vector<double>(static_cast<std::size_t>(s_count)));
    for (int s = 0; s < s_count; ++s) beta[n - 1][s] = crf.stop(s);
    std::vector<double> terms(static_cast<std::size_t>(s_count));
    for (int i = n - 2; i >= 0; --i) {
        for (int s = 0; s < s_count; ++s) {
            for (int t = 0; t < s_count; ++t) {
                terms[t] = crf.transitions(s, t) + em(i + 1, t) + beta[i + 1][t];
            }
            beta[i][s] = logsumexp(terms);
        }
    }
    return beta;
}

}  // namespace detail

// log of the sum over all S^n paths of exp(path score).
inline double log_partition(const EmissionMatrix& em, const CrfParams& crf) {
    assert(em.rank() == 2 && em.dim(0) >= 1);
    const int n = em.dim(0), s_count = em.dim(1);
    auto alpha = detail::crf_forward(em, crf);
    std::vector<double> finals(static_cast<std::size_t>(s_count));
    for (int s = 0; s < s_count; ++s) finals[s] = alpha[n - 1][s] + crf.stop(s);
    return detail::logsumexp(finals);
}

inline double path_score(const EmissionMatrix& em, const CrfParams& crf,
                         const std::vector<int>& tags) {
    const int n = em.dim(0);
    assert(static_cast<int>(tags.size()) == n);
    double score = crf.start(tags[0]) + em(0, tags[0]);
    for (int i = 1; i < n; ++i) {
        score += crf.transitions(tags[i - 1], tags[i]) + em(i, tags[i]);
    }
    return score + crf.stop(tags[static_cast<std::size_t>(n) - 1]);
}

// Best path and its score. Ties break toward the lower tag index.
inline std::pair<std::vector<int>, double> viterbi(const EmissionMatrix& em,
                                                   const CrfParams& crf) {
    assert(em.rank() == 2 && em.dim(0) >= 1);
    const int n = em.dim(0), s_count = em.dim(1);
    std::vector<std::vector<double>> best(
        static_cast<std::size_t>(n),
        std::vector<double>(static_cast<std::size_t>(s_count)));
    std::vector<std::vector<int>> back(
        static_cast<std::size_t>(n),
        std::vector<int>(static_cast<std::size_t>(s_count), 0));
    for (int s = 0; s < s_count; ++s) best[0][s] = crf.start(s) + em(0, s);
    for (int i = 1; i < n; ++i) {
        for (int s = 0; s < s_count; ++s) {
            double b = -std::numeric_limits<double>::infinity();
            int arg = 0;
            for (int t = 0; t < s_count; ++t) {
                double cand = best[i - 1][t] + crf.transitions(t, s);
                if (cand > b) {
                    b = cand;
                    arg = t;
                }
            }
            best[i][s] = b + em(i, s);
            back[i][s] = arg;
        }
    }
    int last = 0;
    double total = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < s_count; ++s) {
        double cand = best[n - 1][s] + crf.stop(s);
        if (cand > total) {
            total = cand;
            last = s;
        }
    }
    std::vector<int> tags(static_cast<std::size_t>(n));
    tags[static_cast<std::size_t>(n) - 1] = last;
    for (int i = n - 1; i > 0; --i) {
        last = back[i][last];
        tags[static_cast<std::size_t>(i) - 1] = last;
    }
    return {std::move(tags), total};
}

// Posterior tag probabilities per position; rows sum to 1.
inline Tensor marginals(const EmissionMatrix& em, const CrfParams& crf) {
    const int n = em.dim(0), s_count = em.dim(1);
    auto alpha = detail::crf_forward(em, crf);
    auto beta = detail::crf_backward(em, crf);
    const double log_z = log_partition(em, crf);
    Tensor out({n, s_count});
    for (int i = 0; i < n; ++i) {
        for (int s = 0; s < s_count; ++s) {
            out(i, s) = std::exp(alpha[i][s] + beta[i][s] - log_z);
        }
    }
    return out;
}

struct CrfGrads {
    Tensor em;           // [n x S]
    Tensor transitions;  // [S x S]
    Tensor start;        // [S]
    Tensor stop;         // [S]
};

// NLL = log Z - score(gold). Gradients are expectation minus gold indicator,
// from forward-backward marginals; they accumulate into grads scaled by
// weight, so batch averaging composes.
inline double nll_and_grad(const EmissionMatrix& em, const CrfParams& crf,
                           const std::vector<int>& gold, CrfGrads* grads,
                           double weight = 1.0) {
    const int n = em.dim(0), s_count = em.dim(1);
    assert(static_cast<int>(gold.size()) == n);
    auto alpha = detail::crf_forward(em, crf);
    auto beta = detail::crf_backward(em, crf);
    std::vector<double> finals(static_cast<std::size_t>(s_count));
    for (int s = 0; s < s_count; ++s) finals[s] = alpha[n - 1][s] + crf.stop(s);
    const double log_z = detail::logsumexp(finals);
    const double loss = log_z - path_score(em, crf, gold);
    if (grads == nullptr) return loss;

    if (grads->em.data.empty()) grads->em = Tensor({n, s_count});
    if (grads->transitions.data.empty()) {
        grads->transitions = Tensor({s_count, s_count});
    }
    if (grads->start.data.empty()) grads->start = Tensor({s_count});
    if (grads->stop.data.empty()) grads->stop = Tensor({s_count});

    for (int i = 0; i < n; ++i) {
        for (int s = 0; s < s_count; ++s) {
            double m = std::exp(alpha[i][s] + beta[i][s] - log_z);
            grads->em(i, s) += weight * (m - (gold[i] == s ? 1.0 : 0.0));
        }
    }
    for (int s = 0; s < s_count; ++s) {
        double m0 = std::exp(alpha[0][s] + beta[0][s] - log_z);
        grads->start(s) += weight * (m0 - (gold[0] == s ? 1.0 : 0.0));
        double mn = std::exp(alpha[n - 1][s] + beta[n - 1][s] - log_z);
        grads->stop(s) +=
            weight *
            (mn - (gold[static_cast<std::size_t>(n) - 1] == s ? 1.0 : 0.0));
    }
    for (int i = 0; i + 1 < n; ++i) {
        for (int a = 0; a < s_count; ++a) {
            for (int b = 0; b < s_count; ++b) {
                double pair = std::exp(alpha[i][a] + crf.transitions(a, b) +
                                       em(i + 1, b) + beta[i + 1][b] - log_z);
                double ind = (gold[i] == a && gold[i + 1] == b) ? 1.0 : 0.0;
                grads->transitions(a, b) += weight * (pair - ind);
            }
        }
    }
    return loss;
}

}  // namespace toxspan
