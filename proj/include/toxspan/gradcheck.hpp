// Central finite-difference verification of analytic gradients, entry by
// entry over every named parameter.
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "toxspan/tensor.hpp"

namespace toxspan {

struct GradCheckFailure {
    std::string param;
    std::int64_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    bool passed = true;
    double max_rel_error = 0.0;
    std::string worst_param;
    std::int64_t entries_checked = 0;
    // Entries where the two one-sided slopes disagree: the loss is locally
    // non-smooth there (a ReLU kink inside the step), so the central
    // difference is meaningless and the entry is not judged.
    std::int64_t entries_nonsmooth = 0;
    std::vector<GradCheckFailure> failures;
};

struct GradCheckOptions {
    double step = 1e-5;
    double rel_tol = 1e-4;
    // Entries with |analytic - numeric| below this pass outright, which
    // covers unused parameters where both sides are ~0.
    double abs_tol = 1e-8;
    // 0 = check every entry; otherwise sample this many per tensor.
    int max_entries_per_tensor = 0;
};

// loss_fn must be deterministic and must not touch the gradient
// accumulators; grad_fn recomputes the loss and fills them.
inline GradCheckReport gradient_check(const std::function<double()>& loss_fn,
                                      const std::function<void()>& grad_fn,
                                      ModelParams& params,
                                      const GradCheckOptions& opt = {},
                                      Rng* rng = nullptr) {
    params.zero_grads();
    grad_fn();
    std::map<std::string, Tensor> analytic;
    for (const auto& [name, g] : params.all_grads()) analytic.emplace(name, g);

    GradCheckReport report;
    const double base_loss = loss_fn();
    for (auto& [name, t] : params.all()) {
        const Tensor& a = analytic.at(name);
        std::vector<std::int64_t> indices;
        if (opt.max_entries_per_tensor > 0 &&
            t.size() > opt.max_entries_per_tensor && rng != nullptr) {
            for (int k = 0; k < opt.max_entries_per_tensor; ++k) {
                indices.push_back(static_cast<std::int64_t>(
                    rng->uniform_int(static_cast<std::uint64_t>(t.size()))));
            }
        } else {
            indices.resize(static_cast<std::size_t>(t.size()));
            for (std::int64_t i = 0; i < t.size(); ++i) {
                indices[static_cast<std::size_t>(i)] = i;
            }
        }
        for (std::int64_t i : indices) {
            const double saved = t.data[static_cast<std::size_t>(i)];
            t.data[static_cast<std::size_t>(i)] = saved + opt.step;
            const double up = loss_fn();
            t.data[static_cast<std::size_t>(i)] = saved - opt.step;
            const double down = loss_fn();
            t.data[static_cast<std::size_t>(i)] = saved;
            const double numeric = (up - down) / (2.0 * opt.step);
            const double an = a.data[static_cast<std::size_t>(i)];
            ++report.entries_checked;
            const double diff = std::abs(an - numeric);
            if (diff <= opt.abs_tol) continue;
            // Guard against activation kinks inside the step: when the two
            // one-sided slopes disagree the entry cannot be judged by a
            // central difference.
            const double left = (base_loss - down) / opt.step;
            const double right = (up - base_loss) / opt.step;
            const double slope_gap = std::abs(left - right);
            if (slope_gap > 1e-3 * std::max({std::abs(left), std::abs(right),
                                             1e-3})) {
                ++report.entries_nonsmooth;
                continue;
            }
            const double rel = diff / std::max(std::abs(an), std::abs(numeric));
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = name;
            }
            if (rel > opt.rel_tol) {
                report.passed = false;
                if (report.failures.size() < 32) {
                    report.failures.push_back({name, i, an, numeric, rel});
                }
            }
        }
    }
    return report;
}

}  // namespace toxspan
