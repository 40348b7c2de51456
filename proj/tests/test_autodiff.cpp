// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "sscse/errors.hpp"
#include "sscse/grad_check.hpp"
#include "sscse/graph.hpp"
#include "sscse/rng.hpp"
#include "sscse/tensor.hpp"

using namespace sscse;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Tensor random_tensor(RngGenerator& gen, Shape shape, double lo = -2.0, double hi = 2.0, bool grad = true) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> v(n);
    for (auto& x : v) x = gen.next_uniform(lo, hi);
    return Tensor::from(std::move(shape), std::move(v), grad);
}

// Reduces any output to a scalar with fixed random weights so that every
// output element contributes a distinct gradient.
Tensor weighted_sum(Graph& g, const Tensor& out, std::uint64_t seed) {
    RngGenerator gen(RngStream(seed).fork(StreamAxis::index, 99));
    return g.sum(g.mul(out, random_tensor(gen, out.shape(), -1.0, 1.0, false)));
}

void expect_gradcheck(const LossBuilder& build, std::vector<NamedTensor> params, double tol = 1e-4) {
    GradCheckOptions opts;
    opts.tolerance = tol;
    const auto report = grad_check(build, std::move(params), opts);
    INFO("worst " << report.worst().name << " rel err " << report.worst().max_relative_error);
    CHECK(report.passed);
}

}  // namespace

TEST_CASE("matmul examples", "[autodiff]") {
    Graph g;
    const auto eye = Tensor::from({2, 2}, {1, 0, 0, 1});
    const auto m = Tensor::from({2, 2}, {1, 2, 3, 4});
    const auto same = g.matmul(eye, m);
    CHECK(std::vector<double>(same.data().begin(), same.data().end()) == std::vector<double>{1, 2, 3, 4});
    const auto proj = Tensor::from({2, 2}, {1, 0, 0, 0});
    const auto out = g.matmul(proj, Tensor::from({2, 2}, {5, 6, 7, 8}));
    CHECK(std::vector<double>(out.data().begin(), out.data().end()) == std::vector<double>{5, 6, 0, 0});
}

TEST_CASE("matmul shape mismatch names both shapes", "[autodiff]") {
    Graph g;
    try {
        g.matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
    }
}

TEST_CASE("matmul gradient of sum matches finite differences", "[autodiff]") {
    RngGenerator gen(RngStream(1).fork(StreamAxis::index, 0));
    auto a = random_tensor(gen, {3, 4});
    auto b = random_tensor(gen, {4, 2});
    GradCheckOptions opts;
    opts.tolerance = 1e-6;
    const auto report = grad_check([&](Graph& g) { return g.sum(g.matmul(a, b)); }, {{"a", a}, {"b", b}}, opts);
    CHECK(report.passed);
}

TEST_CASE("elementwise examples and broadcasting", "[autodiff]") {
    Graph g;
    const auto s = g.add(Tensor::from({2}, {1, 2}), Tensor::from({2}, {3, 4}));
    CHECK(s.data()[0] == 4);
    CHECK(s.data()[1] == 6);

    RngGenerator gen(RngStream(2).fork(StreamAxis::index, 0));
    const auto x = random_tensor(gen, {3, 5}, -2, 2, false);
    const auto same = g.mul(x, Tensor::full({3, 5}, 1.0));
    CHECK(std::equal(same.data().begin(), same.data().end(), x.data().begin()));

    const auto row = Tensor::from({5}, {1, 2, 3, 4, 5});
    const auto b = g.add(x, row);
    CHECK(b.data()[7] == x.data()[7] + 3.0);
    CHECK_THROWS_AS(g.add(x, Tensor::zeros({3})), DimensionError);
    CHECK_THROWS_AS(g.add(x, Tensor::zeros({4, 5})), DimensionError);
}

TEST_CASE("elementwise gradients match finite differences", "[autodiff]") {
    RngGenerator gen(RngStream(3).fork(StreamAxis::index, 0));
    for (int trial = 0; trial < 5; ++trial) {
        auto a = random_tensor(gen, {8});
        auto b = random_tensor(gen, {8});
        auto m = random_tensor(gen, {2, 8});
        GradCheckOptions tight;
        tight.tolerance = 1e-6;
        CHECK(grad_check([&](Graph& g) { return weighted_sum(g, g.gelu(a), 5); }, {{"a", a}}, tight).passed);
        expect_gradcheck([&](Graph& g) { return weighted_sum(g, g.mul(a, b), 6); }, {{"a", a}, {"b", b}});
        expect_gradcheck([&](Graph& g) { return weighted_sum(g, g.sub(m, b), 7); }, {{"m", m}, {"b", b}});
        expect_gradcheck([&](Graph& g) { return weighted_sum(g, g.mul(m, b), 8); }, {{"m", m}, {"b", b}});
        expect_gradcheck([&](Graph& g) { return weighted_sum(g, g.scale(a, -1.7), 9); }, {{"a", a}});
    }
}

TEST_CASE("gelu uses the tanh approximation", "[autodiff]") {
    Graph g;
    const double x = 0.8;
    const double expected = 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (x + 0.044715 * x * x * x)));
    CHECK_THAT(g.gelu(Tensor::from({1}, {x})).data()[0], WithinAbs(expected, 1e-15));
}

TEST_CASE("softmax examples", "[autodiff]") {
    Graph g;
    const auto a = g.softmax_rows(Tensor::from({1, 2}, {0, 0}));
    CHECK(a.data()[0] == 0.5);
    const auto b = g.softmax_rows(Tensor::from({1, 2}, {1000, 1000}));
    CHECK(b.data()[0] == 0.5);
    CHECK(b.data()[1] == 0.5);
    const auto c = g.softmax_rows(Tensor::from({1, 2}, {0, std::log(3.0)}));
    CHECK_THAT(c.data()[0], WithinAbs(0.25, 1e-15));
    CHECK_THAT(c.data()[1], WithinAbs(0.75, 1e-15));
}

TEST_CASE("softmax rows sum to one and are shift invariant", "[autodiff][property]") {
    RngGenerator gen(RngStream(4).fork(StreamAxis::index, 0));
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 1 + gen.next_below(6), n = 1 + gen.next_below(10);
        const auto x = random_tensor(gen, {m, n}, -30, 30, false);
        const double c = gen.next_uniform(-50, 50);
        std::vector<double> shifted(x.data().begin(), x.data().end());
        for (auto& v : shifted) v += c;
        Graph g;
        const auto s = g.softmax_rows(x);
        const auto t = g.softmax_rows(Tensor::from({m, n}, shifted));
        for (std::size_t i = 0; i < m; ++i) {
            double total = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                CHECK(s.data()[i * n + j] >= 0.0);
                total += s.data()[i * n + j];
                CHECK_THAT(s.data()[i * n + j], WithinAbs(t.data()[i * n + j], 1e-12));
            }
            CHECK_THAT(total, WithinAbs(1.0, 1e-12));
        }
    }
}

TEST_CASE("softmax and log composites pass gradient check at 1e-6", "[autodiff]") {
    RngGenerator gen(RngStream(5).fork(StreamAxis::index, 0));
    auto x = random_tensor(gen, {3, 5});
    GradCheckOptions opts;
    opts.tolerance = 1e-6;
    CHECK(grad_check([&](Graph& g) { return weighted_sum(g, g.log(g.softmax_rows(x)), 1); }, {{"x", x}}, opts)
              .passed);
    CHECK(grad_check([&](Graph& g) { return weighted_sum(g, g.log_softmax_rows(x), 2); }, {{"x", x}}, opts).passed);
    CHECK(grad_check([&](Graph& g) { return weighted_sum(g, g.logsumexp_rows(x), 3); }, {{"x", x}}, opts).passed);
}

TEST_CASE("layer norm examples", "[autodiff]") {
    Graph g;
    const auto gain = Tensor::full({4}, 1.0), bias = Tensor::zeros({4});
    const auto z = g.layer_norm(Tensor::full({1, 4}, 3.7), gain, bias);
    for (double v : z.data()) CHECK(v == 0.0);
    const auto r = g.layer_norm(Tensor::from({1, 2}, {1, -1}), Tensor::full({2}, 1.0), Tensor::zeros({2}), 1e-300);
    CHECK_THAT(r.data()[0], WithinAbs(1.0, 1e-15));
    CHECK_THAT(r.data()[1], WithinAbs(-1.0, 1e-15));
}

TEST_CASE("layer norm gradients", "[autodiff]") {
    RngGenerator gen(RngStream(6).fork(StreamAxis::index, 0));
    auto x = random_tensor(gen, {4, 8});
    auto gain = random_tensor(gen, {8}, 0.5, 1.5);
    auto bias = random_tensor(gen, {8});
    GradCheckOptions opts;
    opts.tolerance = 1e-5;
    const auto report = grad_check([&](Graph& g) { return weighted_sum(g, g.layer_norm(x, gain, bias), 4); },
                                   {{"x", x}, {"gain", gain}, {"bias", bias}}, opts);
    CHECK(report.passed);
}

TEST_CASE("structural ops have correct gradients", "[autodiff]") {
    RngGenerator gen(RngStream(7).fork(StreamAxis::index, 0));
    auto a = random_tensor(gen, {2, 3, 4});
    auto b = random_tensor(gen, {2, 5, 4});
    auto w = random_tensor(gen, {4, 3});
    auto m = random_tensor(gen, {3, 4});
    auto q = random_tensor(gen, {2, 3, 2, 2});
    auto table = random_tensor(gen, {6, 4});
    const std::vector<std::int32_t> ids{3, 1, 3, 5};
    const std::vector<std::size_t> lengths{3, 1};

    expect_gradcheck([&](Graph& g) { return weighted_sum(g, g.matmul(a, w), 1); }, {{"a", a}, {"w", w}});
    expect_gradcheck([&](Graph& g) { return weighted_sum(g, g.bmm(a, b, true), 2); }, {{"a", a}, {"b", b}});
    expect_gradcheck([&](Graph& g) { return weighted_sum(g, g.transpose(m), 3); }, {{"m", m}});
    expect_gradcheck([&](Graph& g) { return weighted_sum(g, g.reshape(a, {6, 4}), 4); }, {{"a", a}});
    expect_gradcheck([&](Graph& g) { return weighted_sum(g, g.swap_axes12(q), 5); }, {{"q", q}});
    expect_gradcheck([&](Graph& g) { return weighted_sum(g, g.embedding(table, ids), 6); }, {{"table", table}});
    expect_gradcheck([&](Graph& g) { return weighted_sum(g, g.l2_normalize_rows(m), 7); }, {{"m", m}});
    expect_gradcheck([&](Graph& g) { return weighted_sum(g, g.masked_mean(a, lengths), 8); }, {{"a", a}});
    expect_gradcheck([&](Graph& g) { return weighted_sum(g, g.select_position(a, 1), 9); }, {{"a", a}});
    expect_gradcheck([&](Graph& g) { return g.mean(g.rowwise_dot(m, m)); }, {{"m", m}});
    expect_gradcheck([&](Graph& g) { return weighted_sum(g, g.diagonal(g.matmul(m, g.transpose(m))), 10); },
                     {{"m", m}});
}

TEST_CASE("backward examples", "[autodiff]") {
    {
        Graph g;
        auto x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
        g.backward(g.sum(x));
        for (double v : x.grad()) CHECK(v == 1.0);
    }
    {
        Graph g;
        auto x = Tensor::from({3}, {1, 2, 3}, true);
        g.backward(g.sum(g.mul(x, x)));
        CHECK(std::vector<double>(x.grad().begin(), x.grad().end()) == std::vector<double>{2, 4, 6});
    }
}

TEST_CASE("backward contract and state errors", "[autodiff]") {
    Graph g;
    auto x = Tensor::from({2}, {1, 2}, true);
    const auto y = g.scale(x, 2.0);
    CHECK_THROWS_AS(g.backward(y), ContractError);
    const auto loss = g.sum(y);
    g.backward(loss);
    CHECK_THROWS_AS(g.backward(loss), StateError);
    g.reset();
    x.zero_grad();
    g.backward(g.sum(g.scale(x, 3.0)));
    CHECK(x.grad()[0] == 3.0);
}

TEST_CASE("backward visits every node exactly once", "[autodiff][property]") {
    RngGenerator gen(RngStream(8).fork(StreamAxis::index, 0));
    auto x = random_tensor(gen, {3, 4});
    auto w = random_tensor(gen, {4, 4});
    Graph g;
    // A diamond: x feeds two branches that rejoin.
    const auto h = g.matmul(x, w);
    const auto left = g.gelu(h);
    const auto right = g.softmax_rows(h);
    const auto loss = g.sum(g.mul(left, right));
    g.backward(loss);
    CHECK(g.last_backward_visits() == g.size());
    CHECK(g.size() == 5);
}

TEST_CASE("no NaN or Inf after forward and backward on random inputs", "[autodiff][property]") {
    RngGenerator gen(RngStream(9).fork(StreamAxis::index, 0));
    for (int trial = 0; trial < 50; ++trial) {
        auto x = random_tensor(gen, {4, 6});
        auto w = random_tensor(gen, {6, 6});
        auto gain = random_tensor(gen, {6}, 0.5, 1.5);
        auto bias = random_tensor(gen, {6});
        Graph g;
        const auto h = g.layer_norm(g.gelu(g.matmul(x, w)), gain, bias);
        const auto loss = g.mean(g.logsumexp_rows(g.matmul(g.l2_normalize_rows(h), g.transpose(h))));
        g.backward(loss);
        CHECK(loss.all_finite());
        for (const auto& t : {x, w, gain, bias}) {
            CHECK(t.all_finite());
            CHECK(std::all_of(t.grad().begin(), t.grad().end(), [](double v) { return std::isfinite(v); }));
        }
    }
}

TEST_CASE("every differentiable op passes gradient check on random inputs", "[autodiff][property]") {
    RngGenerator gen(RngStream(10).fork(StreamAxis::index, 0));
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t m = 2 + gen.next_below(3), n = 2 + gen.next_below(4);
        auto a = random_tensor(gen, {m, n});
        auto b = random_tensor(gen, {n, m});
        auto gain = random_tensor(gen, {n});
        auto bias = random_tensor(gen, {n});
        expect_gradcheck(
            [&](Graph& g) {
                const auto h = g.layer_norm(g.gelu(a), gain, bias);
                const auto s = g.softmax_rows(g.matmul(h, b));
                return weighted_sum(g, g.add(g.log_softmax_rows(s), g.scale(s, 0.5)), trial);
            },
            {{"a", a}, {"b", b}, {"gain", gain}, {"bias", bias}});
    }
}

TEST_CASE("grad_check on a linear layer is near exact", "[autodiff]") {
    RngGenerator gen(RngStream(11).fork(StreamAxis::index, 0));
    auto x = random_tensor(gen, {3, 4}, -2, 2, false);
    auto w = random_tensor(gen, {4, 2});
    auto bias = random_tensor(gen, {2});
    GradCheckOptions opts;
    opts.tolerance = 1e-8;
    const auto report =
        grad_check([&](Graph& g) { return weighted_sum(g, g.add(g.matmul(x, w), bias), 3); },
                   {{"w", w}, {"bias", bias}}, opts);
    CHECK(report.passed);
    CHECK(report.worst().max_relative_error < 1e-8);
}

TEST_CASE("grad_check passes with a frozen dropout mask", "[autodiff]") {
    RngGenerator gen(RngStream(12).fork(StreamAxis::index, 0));
    auto x = random_tensor(gen, {4, 5});
    std::vector<double> mask(20);
    for (auto& v : mask) v = gen.next_uniform() < 0.3 ? 0.0 : 1.0 / 0.7;
    const auto frozen = Tensor::from({4, 5}, mask);
    CHECK(grad_check([&](Graph& g) { return weighted_sum(g, g.gelu(g.mul(x, frozen)), 2); }, {{"x", x}}).passed);
}

TEST_CASE("grad_check rejects a nondeterministic builder", "[autodiff]") {
    auto x = Tensor::from({2}, {1, 2}, true);
    int calls = 0;
    CHECK_THROWS_AS(grad_check([&](Graph& g) { return g.sum(g.scale(x, 1.0 + 0.1 * calls++)); }, {{"x", x}}),
                    ContractError);
}

TEST_CASE("grad_check catches a wrong backward rule", "[autodiff]") {
    auto x = Tensor::from({3}, {0.5, -1.0, 2.0}, true);
    const auto report = grad_check(
        [&](Graph& g) {
            std::vector<double> v(x.data().begin(), x.data().end());
            for (auto& e : v) e = e * e;
            Tensor xs = x;
            const auto sq = g.custom({x}, {3}, v, [xs](std::span<const double> go) mutable {
                auto gx = xs.mutable_grad();
                for (std::size_t i = 0; i < 3; ++i) gx[i] += 3.0 * xs.data()[i] * go[i];
            });
            return g.sum(sq);
        },
        {{"x", x}});
    CHECK_FALSE(report.passed);
    CHECK(report.worst().name == "x");
}

TEST_CASE("tensor invariants", "[autodiff]") {
    CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), DimensionError);
    CHECK_THROWS_AS(Tensor::zeros({2, 0}), DimensionError);
    auto t = Tensor::zeros({2, 3}, true);
    CHECK(t.numel() == 6);
    CHECK_FALSE(t.has_grad());
    CHECK(t.mutable_grad().size() == 6);
    CHECK(t.has_grad());
    CHECK(t.clone().same_storage(t) == false);
}
