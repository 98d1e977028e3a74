// Dense row-major double tensors, the deterministic RNG, and the named
// parameter/gradient store that every model in this library trains through.
#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace toxspan {

struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<std::size_t>(count(shape)), 0.0);
    }
    Tensor(std::vector<int> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        assert(static_cast<std::int64_t>(data.size()) == count(shape));
    }

    static std::int64_t count(const std::vector<int>& s) {
        std::int64_t n = 1;
        for (int d : s) n *= d;
        return n;
    }

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    double& operator()(int i) { return data[static_cast<std::size_t>(i)]; }
    double operator()(int i) const { return data[static_cast<std::size_t>(i)]; }
    double& operator()(int i, int j) {
        return data[static_cast<std::size_t>(i) * shape[1] + j];
    }
    double operator()(int i, int j) const {
        return data[static_cast<std::size_t>(i) * shape[1] + j];
    }
    double& operator()(int i, int j, int k) {
        return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    double operator()(int i, int j, int k) const {
        return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
    }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    bool all_finite() const {
        for (double v : data) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }
};

// Deterministic stream: mt19937_64 (bit-exact across platforms) with
// hand-rolled uniform/int draws, since the standard distributions are not
// reproducible across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Modulo bias is negligible for desk-scale n.
    std::uint64_t uniform_int(std::uint64_t n) {
        assert(n > 0);
        return next_u64() % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_int(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// Named parameter tensors with matching gradient accumulators. Iteration
// order is sorted by name, so every loop over parameters is deterministic.
class ModelParams {
public:
    Tensor& add(const std::string& name, std::vector<int> shape) {
        if (params_.count(name) != 0) {
            throw std::invalid_argument("parameter already exists: " + name);
        }
        grads_.emplace(name, Tensor(shape));
        return params_.emplace(name, Tensor(std::move(shape))).first->second;
    }

    bool has(const std::string& name) const { return params_.count(name) != 0; }

    Tensor& tensor(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) {
            throw std::invalid_argument("unknown parameter: " + name);
        }
        return it->second;
    }
    const Tensor& tensor(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end()) {
            throw std::invalid_argument("unknown parameter: " + name);
        }
        return it->second;
    }

    Tensor& grad(const std::string& name) {
        auto it = grads_.find(name);
        if (it == grads_.end()) {
            throw std::invalid_argument("unknown parameter: " + name);
        }
        return it->second;
    }

    void zero_grads() {
        for (auto& [name, g] : grads_) g.fill(0.0);
    }

    const std::map<std::string, Tensor>& all() const { return params_; }
    std::map<std::string, Tensor>& all() { return params_; }
    const std::map<std::string, Tensor>& all_grads() const { return grads_; }

private:
    std::map<std::string, Tensor> params_;
    std::map<std::string, Tensor> grads_;
};

}  // namespace toxspan
