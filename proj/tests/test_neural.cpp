#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "toxspan/gradcheck.hpp"
#include "toxspan/graph.hpp"
#include "toxspan/nn.hpp"
#include "toxspan/tensor.hpp"

using namespace toxspan;

namespace {

Tensor random_tensor(Rng& rng, std::vector<int> shape, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(-scale, scale);
    return t;
}

// Independent index-by-index contraction of the biaffine form.
Tensor biaffine_brute(const Tensor& hs, const Tensor& he, const Tensor& u,
                      const Tensor& w, const Tensor& b) {
    const int p = static_cast<int>(hs.size());
    const int c = static_cast<int>(b.size());
    Tensor out({c});
    for (int k = 0; k < c; ++k) {
        double acc = 0.0;
        for (int a = 0; a < p; ++a) {
            for (int e = 0; e < p; ++e) {
                acc += hs(a) * u(a, k, e) * he(e);
            }
        }
        for (int j = 0; j < p; ++j) acc += w(k, j) * hs(j);
        for (int j = 0; j < p; ++j) acc += w(k, p + j) * he(j);
        out(k) = acc + b(k);
    }
    return out;
}

}  // namespace

TEST_CASE("softmax basics and shift invariance") {
    Tensor t({2});
    Tensor p = softmax(t);
    CHECK(p(0) == Catch::Approx(0.5).margin(1e-15));
    CHECK(p(1) == Catch::Approx(0.5).margin(1e-15));

    Tensor big({2});
    big(0) = 1000.0;
    Tensor pb = softmax(big);
    CHECK(pb(0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(std::isfinite(pb(1)));

    Rng rng(5);
    for (int iter = 0; iter < 100; ++iter) {
        Tensor x = random_tensor(rng, {5}, 3.0);
        Tensor shifted = x;
        double c = rng.uniform(-10, 10);
        for (double& v : shifted.data) v += c;
        Tensor a = softmax(x), b = softmax(shifted);
        double sum = 0.0;
        for (int i = 0; i < 5; ++i) {
            CHECK(std::abs(a(i) - b(i)) < 1e-12);
            CHECK(a(i) > 0.0);
            sum += a(i);
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("embed_lookup returns rows, UNK absorbs out of range") {
    Tensor table({3, 3});
    for (int i = 0; i < 3; ++i) table(i, i) = 1.0;
    Tensor row = embed_lookup(table, 1);
    CHECK(row.data == std::vector<double>{0.0, 1.0, 0.0});
    CHECK(embed_lookup(table, 99).data == std::vector<double>{1.0, 0.0, 0.0});
    CHECK(embed_lookup(table, -1).data == std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("embedding gradient is an indicator on the looked-up row") {
    ModelParams params;
    Rng rng(7);
    init_embedding(params, rng, "emb", 4, 3);
    Graph g(&params);
    Graph::Var row = g.embed_row("emb", 2);
    Tensor ones({3});
    ones.fill(1.0);
    g.add_grad(row, ones);
    g.backward();
    const Tensor& grad = params.grad("emb");
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 3; ++j) {
            CHECK(grad(i, j) == (i == 2 ? 1.0 : 0.0));
        }
    }
}

TEST_CASE("biaffine_form matches zero and one-hot cases") {
    const int p = 3, c = 2;
    Tensor u({p, c, p}), w({c, 2 * p}), b({c}), hs({p}), he({p});
    b(0) = 0.25;
    b(1) = -1.5;
    Rng rng(11);
    hs = random_tensor(rng, {p});
    he = random_tensor(rng, {p});
    Tensor r = biaffine_form(hs, he, u, w, b);
    CHECK(r(0) == Catch::Approx(0.25).margin(1e-15));
    CHECK(r(1) == Catch::Approx(-1.5).margin(1e-15));

    // One-hot inputs pick out a single tensor entry.
    Tensor hs1({p}), he1({p}), u1({p, c, p}), b0({c}), w0({c, 2 * p});
    hs1(0) = 1.0;
    he1(0) = 1.0;
    u1(0, 1, 0) = 1.0;
    Tensor r1 = biaffine_form(hs1, he1, u1, w0, b0);
    CHECK(r1(0) == 0.0);
    CHECK(r1(1) == 1.0);
}

TEST_CASE("biaffine_form matches brute-force contraction") {
    Rng rng(13);
    for (int iter = 0; iter < 50; ++iter) {
        const int p = 3, c = 2;
        Tensor u = random_tensor(rng, {p, c, p});
        Tensor w = random_tensor(rng, {c, 2 * p});
        Tensor b = random_tensor(rng, {c});
        Tensor hs = random_tensor(rng, {p});
        Tensor he = random_tensor(rng, {p});
        Tensor got = biaffine_form(hs, he, u, w, b);
        Tensor want = biaffine_brute(hs, he, u, w, b);
        for (int k = 0; k < c; ++k) {
            CHECK(std::abs(got(k) - want(k)) < 1e-12);
        }
    }
}

TEST_CASE("gradient_check accepts a linear model with quadratic loss") {
    ModelParams params;
    Rng rng(17);
    init_linear(params, rng, "lin", 3, 2);
    Tensor x = random_tensor(rng, {3});
    Tensor target = random_tensor(rng, {2});

    auto loss_value = [&]() {
        Graph g(&params);
        Graph::Var y = g.add(g.matvec(g.param("lin.W"), g.input(x)),
                             g.param("lin.b"));
        const Tensor& yv = g.value(y);
        double loss = 0.0;
        for (int i = 0; i < 2; ++i) {
            loss += 0.5 * (yv(i) - target(i)) * (yv(i) - target(i));
        }
        return loss;
    };
    auto loss_grad = [&]() {
        Graph g(&params);
        Graph::Var y = g.add(g.matvec(g.param("lin.W"), g.input(x)),
                             g.param("lin.b"));
        const Tensor& yv = g.value(y);
        Tensor seed({2});
        for (int i = 0; i < 2; ++i) seed(i) = yv(i) - target(i);
        g.add_grad(y, seed);
        g.backward();
    };
    GradCheckOptions opt;
    opt.rel_tol = 1e-8;
    GradCheckReport report = gradient_check(loss_value, loss_grad, params, opt);
    CHECK(report.passed);
    CHECK(report.max_rel_error < 1e-8);
}

TEST_CASE("gradient_check passes unused parameters via absolute fallback") {
    ModelParams params;
    Rng rng(19);
    init_linear(params, rng, "used", 2, 1);
    init_linear(params, rng, "unused", 2, 1);
    Tensor x = random_tensor(rng, {2});
    auto loss_value = [&]() {
        Graph g(&params);
        Graph::Var y = g.add(g.matvec(g.param("used.W"), g.input(x)),
                             g.param("used.b"));
        return g.value(y)(0);
    };
    auto loss_grad = [&]() {
        Graph g(&params);
        Graph::Var y = g.add(g.matvec(g.param("used.W"), g.input(x)),
                             g.param("used.b"));
        Tensor one({1});
        one(0) = 1.0;
        g.add_grad(y, one);
        g.backward();
    };
    GradCheckReport report = gradient_check(loss_value, loss_grad, params);
    CHECK(report.passed);
}

TEST_CASE("bilstm with zero weights outputs zeros") {
    ModelParams params;
    Rng rng(23);
    init_bilstm(params, rng, "lstm", 2, 2);
    for (auto& [name, t] : params.all()) t.fill(0.0);
    std::vector<Tensor> inputs{random_tensor(rng, {2}),
                               random_tensor(rng, {2})};
    auto out = bilstm_forward(inputs, params, "lstm");
    REQUIRE(out.size() == 2);
    for (const Tensor& h : out) {
        REQUIRE(h.size() == 4);
        for (double v : h.data) CHECK(v == 0.0);
    }
}

TEST_CASE("bilstm length-1 equals two independent single steps") {
    ModelParams params;
    Rng rng(29);
    init_bilstm(params, rng, "lstm", 3, 2);
    Tensor x = random_tensor(rng, {3});
    auto out = bilstm_forward({x}, params, "lstm");
    REQUIRE(out.size() == 1);

    auto single = [&](const std::string& prefix) {
        Graph g(&params);
        LstmState s = lstm_step(g, g.param(prefix + ".W"),
                                g.param(prefix + ".U"), g.param(prefix + ".b"),
                                g.input(x), nullptr, 2);
        return g.value(s.h);
    };
    Tensor fwd = single("lstm.fwd"), bwd = single("lstm.bwd");
    for (int i = 0; i < 2; ++i) {
        CHECK(out[0](i) == Catch::Approx(fwd(i)).margin(1e-15));
        CHECK(out[0](i + 2) == Catch::Approx(bwd(i)).margin(1e-15));
    }
}

TEST_CASE("bilstm gradients match finite differences") {
    ModelParams params;
    Rng rng(31);
    const int d = 2, h = 2;
    init_bilstm(params, rng, "lstm", d, h);
    std::vector<Tensor> inputs;
    for (int i = 0; i < 3; ++i) inputs.push_back(random_tensor(rng, {d}));

    auto build = [&](Graph& g) {
        std::vector<Graph::Var> xs;
        for (const Tensor& t : inputs) xs.push_back(g.input(t));
        return bilstm(g, params, "lstm", xs);
    };
    auto loss_value = [&]() {
        Graph g(&params);
        double loss = 0.0;
        for (Graph::Var v : build(g)) {
            for (double x : g.value(v).data) loss += x;
        }
        return loss;
    };
    auto loss_grad = [&]() {
        Graph g(&params);
        auto hs = build(g);
        Tensor ones({2 * h});
        ones.fill(1.0);
        for (Graph::Var v : hs) g.add_grad(v, ones);
        g.backward();
    };
    GradCheckReport report = gradient_check(loss_value, loss_grad, params);
    CHECK(report.passed);
    CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("char word embedding is deterministic and zero for zero weights") {
    ModelParams params;
    Rng rng(37);
    init_embedding(params, rng, "chars", 5, 3);
    init_bilstm(params, rng, "clstm", 3, 2);

    Tensor a = char_word_embedding_forward({1, 2, 3}, params, "chars", "clstm");
    Tensor b = char_word_embedding_forward({1, 2, 3}, params, "chars", "clstm");
    REQUIRE(a.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(a(i) == b(i));

    for (auto& [name, t] : params.all()) t.fill(0.0);
    Tensor z = char_word_embedding_forward({0}, params, "chars", "clstm");
    for (double v : z.data) CHECK(v == 0.0);
}

TEST_CASE("char word embedding gradients match finite differences") {
    ModelParams params;
    Rng rng(41);
    init_embedding(params, rng, "chars", 6, 2);
    init_bilstm(params, rng, "clstm", 2, 2);
    std::vector<int> ids{1, 4, 2, 4};

    auto loss_value = [&]() {
        Graph g(&params);
        Graph::Var v = char_word_embedding(g, params, "chars", "clstm", ids);
        double loss = 0.0;
        for (double x : g.value(v).data) loss += x;
        return loss;
    };
    auto loss_grad = [&]() {
        Graph g(&params);
        Graph::Var v = char_word_embedding(g, params, "chars", "clstm", ids);
        Tensor ones({4});
        ones.fill(1.0);
        g.add_grad(v, ones);
        g.backward();
    };
    GradCheckReport report = gradient_check(loss_value, loss_grad, params);
    CHECK(report.passed);
}

TEST_CASE("ffnn zero weights give output bias; gradients check out") {
    ModelParams params;
    Rng rng(43);
    init_ffnn(params, rng, "ff", 3, 4, 2);
    for (auto& [name, t] : params.all()) t.fill(0.0);
    params.tensor("ff.l2.b")(0) = 0.5;
    params.tensor("ff.l2.b")(1) = -2.0;
    Tensor x = random_tensor(rng, {3});
    Tensor y = ffnn_forward(x, params, "ff");
    CHECK(y(0) == 0.5);
    CHECK(y(1) == -2.0);

    // Identity-configured degenerate FFNN reproduces nonnegative input.
    ModelParams id_params;
    Rng rng2(44);
    init_ffnn(id_params, rng2, "ff", 2, 2, 2);
    for (auto& [name, t] : id_params.all()) t.fill(0.0);
    for (int i = 0; i < 2; ++i) {
        id_params.tensor("ff.l1.W")(i, i) = 1.0;
        id_params.tensor("ff.l2.W")(i, i) = 1.0;
    }
    Tensor xin({2});
    xin(0) = 0.3;
    xin(1) = 1.7;
    Tensor yid = ffnn_forward(xin, id_params, "ff");
    CHECK(yid(0) == Catch::Approx(0.3).margin(1e-15));
    CHECK(yid(1) == Catch::Approx(1.7).margin(1e-15));

    ModelParams gp;
    Rng rng3(45);
    init_ffnn(gp, rng3, "ff", 3, 4, 2);
    Tensor gx = random_tensor(rng3, {3});
    auto loss_value = [&]() {
        Graph g(&gp);
        Graph::Var y2 = ffnn(g, "ff", g.input(gx));
        return g.value(y2)(0) + 2.0 * g.value(y2)(1);
    };
    auto loss_grad = [&]() {
        Graph g(&gp);
        Graph::Var y2 = ffnn(g, "ff", g.input(gx));
        Tensor seed({2});
        seed(0) = 1.0;
        seed(1) = 2.0;
        g.add_grad(y2, seed);
        g.backward();
    };
    GradCheckReport report = gradient_check(loss_value, loss_grad, gp);
    CHECK(report.passed);
}

TEST_CASE("graph biaffine gradients match finite differences") {
    ModelParams params;
    Rng rng(47);
    const int p = 3, c = 2;
    params.add("U", {p, c, p});
    params.add("W", {c, 2 * p});
    params.add("b", {c});
    init_uniform(params.tensor("U"), rng, -1, 1);
    init_uniform(params.tensor("W"), rng, -1, 1);
    init_uniform(params.tensor("b"), rng, -1, 1);
    init_linear(params, rng, "proj", 2, p);
    Tensor x1 = random_tensor(rng, {2}), x2 = random_tensor(rng, {2});

    auto build = [&](Graph& g) {
        Graph::Var hs = g.matvec(g.param("proj.W"), g.input(x1));
        Graph::Var he = g.matvec(g.param("proj.W"), g.input(x2));
        return g.softmax_cross_entropy(
            g.biaffine(g.param("U"), g.param("W"), g.param("b"), hs, he), 1);
    };
    auto loss_value = [&]() {
        Graph g(&params);
        return g.scalar(build(g));
    };
    auto loss_grad = [&]() {
        Graph g(&params);
        g.backward(build(g));
    };
    GradCheckReport report = gradient_check(loss_value, loss_grad, params);
    CHECK(report.passed);
}

TEST_CASE("rng determinism and shuffle coverage") {
    Rng a(101), b(101);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
    Rng c(5);
    c.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("adam and sgd take deterministic steps") {
    auto make = [](OptimizerKind kind) {
        ModelParams params;
        params.add("w", {2});
        params.tensor("w")(0) = 1.0;
        params.tensor("w")(1) = -1.0;
        params.grad("w")(0) = 0.5;
        params.grad("w")(1) = -0.25;
        Optimizer opt(kind);
        opt.step(params, 0.1);
        return std::make_pair(params.tensor("w")(0), params.tensor("w")(1));
    };
    auto [sgd0, sgd1] = make(OptimizerKind::Sgd);
    CHECK(sgd0 == Catch::Approx(1.0 - 0.1 * 0.5).margin(1e-15));
    CHECK(sgd1 == Catch::Approx(-1.0 + 0.1 * 0.25).margin(1e-15));
    // First Adam step moves by ~lr in the negative gradient direction.
    auto [adam0, adam1] = make(OptimizerKind::Adam);
    CHECK(adam0 == Catch::Approx(1.0 - 0.1).epsilon(1e-3));
    CHECK(adam1 == Catch::Approx(-1.0 + 0.1).epsilon(1e-3));
}
