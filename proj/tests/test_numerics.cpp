#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "vpq/net.hpp"
#include "vpq/rng.hpp"
#include "vpq/util.hpp"

using namespace vpq;

TEST_CASE("rng is deterministic per seed and distinct per stream") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 64; ++i) {
        const std::uint64_t x = a.next_u64();
        all_equal = all_equal && (x == b.next_u64());
        any_diff = any_diff || (x != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);

    Rng s1 = derived_rng(7, streams::kData);
    Rng s2 = derived_rng(7, streams::kInit);
    CHECK(s1.next_u64() != s2.next_u64());
}

TEST_CASE("uniform variants stay inside their ranges") {
    Rng rng(123);
    bool open_ok = true, half_ok = true;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        half_ok = half_ok && u >= 0.0 && u < 1.0;
        const double v = rng.uniform_open0();
        open_ok = open_ok && v > 0.0 && v <= 1.0;
    }
    CHECK(half_ok);
    CHECK(open_ok);
}

TEST_CASE("uniform_int covers its range uniformly") {
    Rng rng(9);
    const int bound = 10;
    const int draws = 100000;
    std::vector<int> freq(bound, 0);
    for (int i = 0; i < draws; ++i) {
        const auto v = rng.uniform_int(bound);
        REQUIRE(v < static_cast<std::uint64_t>(bound));
        freq[static_cast<std::size_t>(v)]++;
    }
    // binomial 3-sigma band around draws/bound
    const double p = 1.0 / bound;
    const double sd = std::sqrt(draws * p * (1.0 - p));
    for (int k = 0; k < bound; ++k) {
        CHECK(std::fabs(freq[static_cast<std::size_t>(k)] - draws * p) < 3.5 * sd);
    }
}

TEST_CASE("normal draws have the right first two moments") {
    Rng rng(2024);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("fnv1a64 matches published vectors") {
    CHECK(fnv1a64(std::string("")) == 14695981039346656037ULL);
    CHECK(fnv1a64(std::string("a")) == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64(std::string("foobar")) == 0x85944171f73967e8ULL);
}

TEST_CASE("forward: zero net maps anything to zero") {
    DenseNet net = DenseNet::zeros({3, 4, 2});
    const Vec out = forward(net, Vec{1.0, -2.0, 0.5});
    REQUIRE(out.size() == 2);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
}

TEST_CASE("forward: identity single layer returns its input") {
    DenseNet net = DenseNet::zeros({3, 3});
    for (int i = 0; i < 3; ++i) net.weights[0][static_cast<std::size_t>(i * 3 + i)] = 1.0;
    const Vec in{0.25, -1.5, 3.0};
    const Vec out = forward(net, in);
    REQUIRE(out.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(out[static_cast<std::size_t>(i)] == in[static_cast<std::size_t>(i)]);
}

TEST_CASE("forward matches a hand-rolled matmul + tanh evaluation") {
    Rng rng(5);
    DenseNet net = DenseNet::init({3, 4, 2}, rng);
    const Vec in{0.3, -0.7, 1.1};

    // independent re-evaluation
    Vec hidden(4, 0.0);
    for (int r = 0; r < 4; ++r) {
        double acc = net.biases[0][static_cast<std::size_t>(r)];
        for (int c = 0; c < 3; ++c) acc += net.weights[0][static_cast<std::size_t>(r * 3 + c)] * in[static_cast<std::size_t>(c)];
        hidden[static_cast<std::size_t>(r)] = std::tanh(acc);
    }
    Vec expect(2, 0.0);
    for (int r = 0; r < 2; ++r) {
        double acc = net.biases[1][static_cast<std::size_t>(r)];
        for (int c = 0; c < 4; ++c) acc += net.weights[1][static_cast<std::size_t>(r * 4 + c)] * hidden[static_cast<std::size_t>(c)];
        expect[static_cast<std::size_t>(r)] = acc; // linear output layer
    }

    const Vec out = forward(net, in);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == doctest::Approx(expect[0]).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(expect[1]).epsilon(1e-12));
}

TEST_CASE("forward is bitwise reproducible") {
    Rng rng(77);
    DenseNet net = DenseNet::init({5, 6, 3}, rng);
    const Vec in{0.1, 0.2, 0.3, 0.4, 0.5};
    const Vec a = forward(net, in);
    const Vec b = forward(net, in);
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("forward rejects dimension mismatch") {
    DenseNet net = DenseNet::zeros({3, 2});
    CHECK_THROWS_AS(forward(net, Vec{1.0, 2.0}), ContractError);
}

TEST_CASE("backward: zero output grad gives zero gradients") {
    Rng rng(8);
    DenseNet net = DenseNet::init({3, 4, 2}, rng);
    const GradientSet g = backward(net, Vec{1.0, 2.0, 3.0}, Vec{0.0, 0.0});
    for (const auto& w : g.weights)
        for (double x : w) CHECK(x == 0.0);
    for (const auto& b : g.biases)
        for (double x : b) CHECK(x == 0.0);
}

TEST_CASE("backward: single linear layer closed form") {
    Rng rng(11);
    DenseNet net = DenseNet::init({3, 2}, rng);
    const Vec x{0.5, -1.0, 2.0};
    const Vec g{0.7, -0.3};
    const GradientSet grads = backward(net, x, g);
    // weight grad = outer(g, x), bias grad = g
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 3; ++c) {
            CHECK(grads.weights[0][static_cast<std::size_t>(r * 3 + c)] ==
                  doctest::Approx(g[static_cast<std::size_t>(r)] * x[static_cast<std::size_t>(c)]).epsilon(1e-12));
        }
        CHECK(grads.biases[0][static_cast<std::size_t>(r)] == doctest::Approx(g[static_cast<std::size_t>(r)]).epsilon(1e-12));
    }
}

TEST_CASE("backward matches central finite differences on random nets") {
    Rng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        DenseNet net = DenseNet::init({4, 6, 5, 3}, rng);
        Vec in(4);
        for (auto& v : in) v = rng.normal();
        Vec target(3);
        for (auto& v : target) v = rng.normal();
        const auto loss = [&target](std::span<const double> out) {
            double acc = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) {
                const double d = out[i] - target[i];
                acc += 0.5 * d * d;
            }
            return acc;
        };
        const FiniteDiffReport report = finite_diff_check(net, in, loss, 1e-4);
        CHECK(report.pass);
        CHECK(report.max_rel_error < 1e-4);
    }
}

TEST_CASE("backward propagates input gradients for chaining") {
    Rng rng(17);
    DenseNet net = DenseNet::init({3, 5, 2}, rng);
    Vec in{0.2, -0.4, 0.9};
    const Vec og{1.0, -2.0};
    Vec in_grad;
    backward(net, in, og, &in_grad);
    REQUIRE(in_grad.size() == 3);
    // finite differences over the input itself
    for (int i = 0; i < 3; ++i) {
        const double h = 1e-6;
        const double keep = in[static_cast<std::size_t>(i)];
        in[static_cast<std::size_t>(i)] = keep + h;
        const Vec up = forward(net, in);
        in[static_cast<std::size_t>(i)] = keep - h;
        const Vec dn = forward(net, in);
        in[static_cast<std::size_t>(i)] = keep;
        const double fd = ((up[0] - dn[0]) * og[0] + (up[1] - dn[1]) * og[1]) / (2 * h);
        CHECK(in_grad[static_cast<std::size_t>(i)] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("adam: zero gradients leave parameters untouched") {
    Rng rng(21);
    DenseNet net = DenseNet::init({3, 4, 2}, rng);
    const DenseNet before = net;
    AdamState state = AdamState::zeros_like(net);
    adam_step(net, GradientSet::zeros_like(net), state, AdamConfig{});
    CHECK(state.step == 1);
    for (int l = 0; l < net.layer_count(); ++l) {
        CHECK(net.weights[static_cast<std::size_t>(l)] == before.weights[static_cast<std::size_t>(l)]);
        CHECK(net.biases[static_cast<std::size_t>(l)] == before.biases[static_cast<std::size_t>(l)]);
    }
}

TEST_CASE("adam: first step moves by ~lr against the gradient sign") {
    DenseNet net = DenseNet::zeros({2, 2});
    GradientSet g = GradientSet::zeros_like(net);
    for (auto& w : g.weights)
        for (double& x : w) x = 0.5;
    for (auto& b : g.biases)
        for (double& x : b) x = -2.0;
    AdamState state = AdamState::zeros_like(net);
    AdamConfig cfg;
    cfg.lr = 1e-3;
    cfg.eps = 1e-12; // well below |g|, so the step is ~lr exactly
    adam_step(net, g, state, cfg);
    for (const auto& w : net.weights)
        for (double x : w) CHECK(x == doctest::Approx(-1e-3).epsilon(1e-6));
    for (const auto& b : net.biases)
        for (double x : b) CHECK(x == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("adam: two fixed-gradient steps match the hand recursion") {
    DenseNet net = DenseNet::zeros({1, 1});
    GradientSet g = GradientSet::zeros_like(net);
    g.weights[0][0] = 0.3;
    g.biases[0][0] = -0.8;
    AdamState state = AdamState::zeros_like(net);
    const AdamConfig cfg;
    adam_step(net, g, state, cfg);
    adam_step(net, g, state, cfg);
    CHECK(state.step == 2);

    // scripted recurrence for a constant gradient
    const auto reference = [&cfg](double grad) {
        double m = 0.0, v = 0.0, p = 0.0;
        for (int t = 1; t <= 2; ++t) {
            m = cfg.beta1 * m + (1 - cfg.beta1) * grad;
            v = cfg.beta2 * v + (1 - cfg.beta2) * grad * grad;
            const double mhat = m / (1 - std::pow(cfg.beta1, t));
            const double vhat = v / (1 - std::pow(cfg.beta2, t));
            p -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        return p;
    };
    CHECK(net.weights[0][0] == doctest::Approx(reference(0.3)).epsilon(1e-12));
    CHECK(net.biases[0][0] == doctest::Approx(reference(-0.8)).epsilon(1e-12));
}

TEST_CASE("adam rejects non-finite gradients") {
    DenseNet net = DenseNet::zeros({2, 2});
    GradientSet g = GradientSet::zeros_like(net);
    g.weights[0][1] = std::numeric_limits<double>::quiet_NaN();
    AdamState state = AdamState::zeros_like(net);
    CHECK_THROWS_AS(adam_step(net, g, state, AdamConfig{}), DivergenceError);
}

TEST_CASE("adam_step_flat mirrors the per-net update") {
    Vec params{1.0, -2.0};
    const Vec grads{0.5, 0.5};
    FlatAdamState flat = FlatAdamState::zeros(2);
    const AdamConfig cfg;
    adam_step_flat(params, grads, flat, cfg);

    DenseNet net = DenseNet::zeros({1, 2});
    net.biases[0] = {1.0, -2.0};
    GradientSet g = GradientSet::zeros_like(net);
    g.biases[0] = {0.5, 0.5};
    AdamState state = AdamState::zeros_like(net);
    adam_step(net, g, state, cfg);

    CHECK(params[0] == doctest::Approx(net.biases[0][0]).epsilon(1e-15));
    CHECK(params[1] == doctest::Approx(net.biases[0][1]).epsilon(1e-15));
}

TEST_CASE("finite_diff_check: quadratic loss on a zero net is exact") {
    DenseNet net = DenseNet::zeros({2, 2});
    const auto loss = [](std::span<const double> out) {
        double acc = 0.0;
        for (double v : out) acc += 0.5 * v * v;
        return acc;
    };
    const FiniteDiffReport report = finite_diff_check(net, Vec{0.3, -0.6}, loss, 1e-4);
    CHECK(report.pass);
    // output is exactly zero, so both gradient estimates vanish
    CHECK(report.max_rel_error == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("max_rel_error flags a corrupted gradient") {
    Rng rng(31);
    DenseNet net = DenseNet::init({3, 4, 2}, rng);
    const Vec in{0.1, 0.7, -0.9};
    Vec target{0.4, -0.2};
    const auto loss = [&target](std::span<const double> out) {
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out[i] - target[i];
            acc += 0.5 * d * d;
        }
        return acc;
    };
    const GradientSet fd = fd_gradient(net, in, loss);
    GradientSet corrupted = fd;
    corrupted.weights[0][0] += 1.0; // negative control
    CHECK(max_rel_error(corrupted, fd) > 1e-4);
    CHECK(max_rel_error(fd, fd) == 0.0);
}

TEST_CASE("Mat addresses rows contiguously in row-major order") {
    Mat m(2, 3);
    m.at(0, 0) = 1.0;
    m.at(1, 2) = 7.0;
    CHECK(m.data[0] == 1.0);
    CHECK(m.data[5] == 7.0);
    CHECK(m.row(1)[2] == 7.0);
}
