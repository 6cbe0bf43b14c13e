#include <doctest.h>

#include <cmath>
#include <limits>

#include "gsec/numerics.hpp"
#include "support.hpp"

using namespace gsec;
using gsec::testing::random_matrix;

TEST_CASE("softmax basics") {
    const std::vector<double> z = {1.0, 2.0, 3.0};
    const auto p = softmax(z);
    CHECK(is_prob_row(p));
    CHECK(p[2] > p[1]);
    CHECK(p[1] > p[0]);
    const double denom = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    CHECK(p[0] == doctest::Approx(std::exp(1.0) / denom).epsilon(1e-14));

    SUBCASE("shift invariance") {
        const std::vector<double> shifted = {1001.0, 1002.0, 1003.0};
        const auto q = softmax(shifted);
        for (std::size_t i = 0; i < 3; ++i) CHECK(q[i] == doctest::Approx(p[i]).epsilon(1e-12));
    }
    SUBCASE("temperature sharpens") {
        const auto sharp = softmax(z, 0.01);
        CHECK(sharp[2] > 0.999999);
        const auto flat = softmax(z, 1e6);
        for (double v : flat) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(softmax(z, 0.0), DomainError);
        CHECK_THROWS_AS(softmax(z, -1.0), DomainError);
        const std::vector<double> bad = {0.0, std::numeric_limits<double>::quiet_NaN()};
        CHECK_THROWS_AS(softmax(bad), InvalidInputError);
    }
}

TEST_CASE("kl divergence and entropy") {
    const std::vector<double> p = {0.2, 0.3, 0.5};
    CHECK(kl_divergence(p, p) == doctest::Approx(0.0).epsilon(1e-15));
    const std::vector<double> one_hot = {1.0, 0.0};
    const std::vector<double> half = {0.5, 0.5};
    CHECK(kl_divergence(one_hot, half) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(entropy(half) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(entropy(one_hot) == 0.0);

    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = gsec::testing::random_stochastic(2, 4, rng);
        CHECK(kl_divergence(a.row(0), a.row(1)) >= 0.0);
    }
}

TEST_CASE("cosine similarity") {
    const std::vector<double> a = {1.0, 0.0};
    const std::vector<double> b = {0.0, 2.0};
    const std::vector<double> c = {-3.0, 0.0};
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
    CHECK(cosine_similarity(a, c) == doctest::Approx(-1.0));
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
    const std::vector<double> zero = {0.0, 0.0};
    CHECK_THROWS_AS(cosine_similarity(a, zero), DomainError);
    const std::vector<double> longer = {1.0, 0.0, 0.0};
    CHECK_THROWS_AS(cosine_similarity(a, longer), ShapeError);
}

TEST_CASE("softmax_rows and column_mean") {
    Rng rng(1);
    const Matrix logits = random_matrix(6, 4, rng);
    const Matrix p = softmax_rows(logits);
    for (std::size_t r = 0; r < p.rows(); ++r) CHECK(is_prob_row(p.row(r)));
    const auto mean = column_mean(p);
    CHECK(is_prob_row(mean));
    double first = 0.0;
    for (std::size_t r = 0; r < p.rows(); ++r) first += p(r, 0);
    CHECK(mean[0] == doctest::Approx(first / 6.0));
}

TEST_CASE("softmax_backward matches finite differences") {
    Rng rng(2);
    const std::vector<double> z = {0.3, -1.2, 0.8, 0.1};
    const std::vector<double> w = {0.5, -2.0, 1.5, 0.7};  // loss = w . softmax(z)
    const auto p = softmax(z);
    const auto grad = softmax_backward(p, w);
    for (std::size_t i = 0; i < z.size(); ++i) {
        auto up = z;
        auto down = z;
        up[i] += 1e-6;
        down[i] -= 1e-6;
        const double numeric = (dot(w, softmax(up)) - dot(w, softmax(down))) / 2e-6;
        CHECK(grad[i] == doctest::Approx(numeric).epsilon(1e-7));
    }
}

TEST_CASE("adam") {
    SUBCASE("first step moves each parameter by lr against the gradient sign") {
        std::vector<double> params = {1.0, -2.0, 0.5};
        const std::vector<double> grads = {3.0, -0.01, 100.0};
        OptimizerState state(3);
        adam_step(params, grads, state, AdamConfig{});
        CHECK(params[0] == doctest::Approx(1.0 - 0.001).epsilon(1e-9));
        CHECK(params[1] == doctest::Approx(-2.0 + 0.001).epsilon(1e-6));
        CHECK(params[2] == doctest::Approx(0.5 - 0.001).epsilon(1e-9));
        CHECK(state.step == 1);
    }
    SUBCASE("zero learning rate leaves parameters unchanged") {
        std::vector<double> params = {1.0, 2.0};
        const std::vector<double> grads = {0.4, -0.7};
        OptimizerState state(2);
        for (int i = 0; i < 5; ++i) adam_step(params, grads, state, AdamConfig{0.0});
        CHECK(params[0] == 1.0);
        CHECK(params[1] == 2.0);
    }
    SUBCASE("minimizes a quadratic") {
        std::vector<double> x = {5.0, -3.0};
        OptimizerState state(2);
        for (int i = 0; i < 3000; ++i) {
            const std::vector<double> g = {2.0 * x[0], 2.0 * (x[1] + 1.0)};
            adam_step(x, g, state, AdamConfig{0.05});
        }
        CHECK(x[0] == doctest::Approx(0.0).epsilon(1e-3).scale(1.0));
        CHECK(x[1] == doctest::Approx(-1.0).epsilon(1e-3));
    }
    SUBCASE("shape mismatch") {
        std::vector<double> params = {1.0};
        const std::vector<double> grads = {1.0, 2.0};
        OptimizerState state(1);
        CHECK_THROWS_AS(adam_step(params, grads, state, AdamConfig{}), ShapeError);
    }
}

TEST_CASE("gradient checker") {
    // f(x) = sum_i a_i x_i^3 + x_0 x_1
    const std::vector<double> a = {0.5, -1.0, 2.0};
    LossAndGradient fn = [&a](std::span<const double> x, std::span<double> g) {
        double f = x[0] * x[1];
        for (std::size_t i = 0; i < x.size(); ++i) {
            f += a[i] * x[i] * x[i] * x[i];
            g[i] = 3.0 * a[i] * x[i] * x[i];
        }
        g[0] += x[1];
        g[1] += x[0];
        return f;
    };
    const std::vector<double> x = {0.7, -1.1, 0.4};
    const auto good = check_gradient(fn, x);
    CHECK(good.max_relative_error < 1e-8);

    LossAndGradient wrong = [&fn](std::span<const double> x, std::span<double> g) {
        const double f = fn(x, g);
        g[2] *= 1.01;
        return f;
    };
    const auto bad = check_gradient(wrong, x);
    CHECK(bad.worst_index == 2);
    CHECK(bad.max_relative_error == doctest::Approx(0.01 / 1.01).epsilon(1e-4));
}

TEST_CASE("reference values") {
    SUBCASE("tempered softmax against long double evaluation") {
        const std::vector<double> z = {3.1, -0.7, 1.2};
        const auto p = softmax(z, 0.5);
        long double total = 0.0L;
        for (double v : z) total += std::exp(static_cast<long double>(v) / 0.5L);
        for (std::size_t i = 0; i < 3; ++i) {
            const long double want = std::exp(static_cast<long double>(z[i]) / 0.5L) / total;
            CHECK(std::abs(static_cast<long double>(p[i]) - want) <= 1e-15L);
        }
    }
    SUBCASE("kl, entropy and cosine") {
        const std::vector<double> p = {0.7, 0.3}, q = {0.4, 0.6};
        CHECK(kl_divergence(p, q) == doctest::Approx(0.7 * std::log(0.7 / 0.4) + 0.3 * std::log(0.3 / 0.6)).epsilon(1e-14));
        const std::vector<double> h = {0.6, 0.4};
        CHECK(entropy(h) == doctest::Approx(-0.6 * std::log(0.6) - 0.4 * std::log(0.4)).epsilon(1e-14));
        const std::vector<double> a = {1.0, 2.0}, b = {2.0, 1.0};
        CHECK(cosine_similarity(a, b) == doctest::Approx(0.8).epsilon(1e-15));
    }
    SUBCASE("two adam steps follow the scalar recurrence") {
        const double g = 0.3, lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
        std::vector<double> x = {2.0};
        OptimizerState state(1);
        const std::vector<double> grad = {g};
        adam_step(x, grad, state, AdamConfig{lr});
        adam_step(x, grad, state, AdamConfig{lr});
        double m = 0.0, v = 0.0, want = 2.0;
        for (int t = 1; t <= 2; ++t) {
            m = b1 * m + (1 - b1) * g;
            v = b2 * v + (1 - b2) * g * g;
            want -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
        }
        CHECK(x[0] == doctest::Approx(want).epsilon(1e-15));
        CHECK(x[0] == doctest::Approx(2.0 - 2.0 * lr).epsilon(1e-9));
    }
}
