// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sscse/contrastive.hpp"
#include "sscse/errors.hpp"
#include "sscse/grad_check.hpp"
#include "sscse/rng.hpp"

using namespace sscse;
using Catch::Matchers::WithinAbs;

namespace {

Tensor random_matrix(RngGenerator& gen, std::size_t n, std::size_t d, bool grad = false) {
    std::vector<double> v(n * d);
    for (auto& x : v) x = gen.next_uniform(-1, 1);
    return Tensor::from({n, d}, std::move(v), grad);
}

double loss_value(const Tensor& h, const Tensor& hp, const LossConfig& cfg) {
    Graph g(Graph::Mode::no_grad);
    return info_nce_loss(g, h, hp, cfg).item();
}

}  // namespace

TEST_CASE("cosine examples", "[contrastive]") {
    const std::vector<double> v{0.3, -2.0, 5.0};
    CHECK_THAT(cosine_sim(v, v), WithinAbs(1.0, 1e-15));
    CHECK(cosine_sim(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
    CHECK_THAT(cosine_sim(std::vector<double>{1, 0}, std::vector<double>{1, 1}), WithinAbs(1 / std::sqrt(2.0), 1e-15));
    CHECK_THROWS_AS(cosine_sim(std::vector<double>{0, 0}, std::vector<double>{1, 1}), ContractError);
}

TEST_CASE("cosine is scale invariant", "[contrastive][property]") {
    RngGenerator gen(RngStream(1));
    for (int t = 0; t < 200; ++t) {
        std::vector<double> a(6), b(6), sa(6), sb(6);
        const double alpha = gen.next_uniform(0.01, 100), beta = gen.next_uniform(0.01, 100);
        for (std::size_t i = 0; i < 6; ++i) {
            a[i] = gen.next_uniform(-1, 1);
            b[i] = gen.next_uniform(-1, 1);
            sa[i] = alpha * a[i];
            sb[i] = beta * b[i];
        }
        const double c = cosine_sim(a, b);
        CHECK((c >= -1.0 && c <= 1.0));
        CHECK_THAT(cosine_sim(sa, sb), WithinAbs(c, 1e-12));
    }
}

TEST_CASE("InfoNCE examples", "[contrastive]") {
    LossConfig unit;
    unit.temperature = 1.0;
    const auto eye = Tensor::from({2, 2}, {1, 0, 0, 1});
    CHECK_THAT(loss_value(eye, eye, unit), WithinAbs(std::log1p(std::exp(-1.0)), 1e-15));
    CHECK_THAT(info_nce_oracle(eye, eye, unit), WithinAbs(0.31326168751822286, 1e-15));

    const auto one = Tensor::from({1, 3}, {1, 2, 3}), other = Tensor::from({1, 3}, {-3, 0.5, 2});
    CHECK(loss_value(one, other, LossConfig{}) == 0.0);
    CHECK(info_nce_oracle(one, other, LossConfig{}) == 0.0);

    const auto zero = Tensor::from({2, 2}, {0, 0, 1, 1});
    CHECK_THROWS_AS(loss_value(zero, eye, LossConfig{}), ContractError);
    CHECK_THROWS_AS(info_nce_oracle(zero, eye, LossConfig{}), ContractError);
    CHECK_THROWS_AS(loss_value(eye, Tensor::zeros({3, 2}), LossConfig{}), DimensionError);
}

TEST_CASE("InfoNCE matches the scalar oracle", "[contrastive][property]") {
    RngGenerator gen(RngStream(2));
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + gen.next_below(8), d = 1 + gen.next_below(16);
        const auto h = random_matrix(gen, n, d), hp = random_matrix(gen, n, d);
        LossConfig cfg;
        cfg.temperature = gen.next_uniform(0.05, 2.0);
        cfg.denominator = t % 2 ? DenominatorMode::literal_hj : DenominatorMode::positives_of_all;
        CHECK_THAT(loss_value(h, hp, cfg), WithinAbs(info_nce_oracle(h, hp, cfg), 1e-12));
    }
}

TEST_CASE("InfoNCE is nonnegative and permutation invariant", "[contrastive][property]") {
    RngGenerator gen(RngStream(3));
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + gen.next_below(7), d = 2 + gen.next_below(10);
        const auto h = random_matrix(gen, n, d), hp = random_matrix(gen, n, d);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        shuffle_in_place(perm, gen);
        std::vector<double> ph(n * d), pp(n * d);
        for (std::size_t i = 0; i < n; ++i) {
            std::copy_n(h.data().begin() + perm[i] * d, d, ph.begin() + i * d);
            std::copy_n(hp.data().begin() + perm[i] * d, d, pp.begin() + i * d);
        }
        const LossConfig cfg;
        const double base = loss_value(h, hp, cfg);
        CHECK(base >= 0.0);
        CHECK_THAT(loss_value(Tensor::from({n, d}, ph), Tensor::from({n, d}, pp), cfg), WithinAbs(base, 1e-12));
    }
}

TEST_CASE("raising a positive similarity lowers the loss", "[contrastive][property]") {
    RngGenerator gen(RngStream(4));
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 2 + gen.next_below(6);
        std::vector<double> v(n * n);
        for (auto& x : v) x = gen.next_uniform(-1, 1);
        auto sim = Tensor::from({n, n}, v, true);
        Graph g;
        g.backward(info_nce_from_similarity(g, sim, 0.1));
        for (std::size_t i = 0; i < n; ++i) CHECK(sim.grad()[i * n + i] < 0.0);
    }
}

TEST_CASE("InfoNCE gradients match finite differences", "[contrastive]") {
    RngGenerator gen(RngStream(5));
    for (auto mode : {DenominatorMode::positives_of_all, DenominatorMode::literal_hj}) {
        auto h = random_matrix(gen, 5, 6, true), hp = random_matrix(gen, 5, 6, true);
        LossConfig cfg;
        cfg.denominator = mode;
        const auto report =
            grad_check([&](Graph& g) { return info_nce_loss(g, h, hp, cfg); }, {{"h", h}, {"h_plus", hp}});
        CHECK(report.passed);
    }
}

TEST_CASE("mean positive cosine and config parsing", "[contrastive]") {
    const auto a = Tensor::from({2, 2}, {1, 0, 0, 1}), b = Tensor::from({2, 2}, {1, 0, 1, 0});
    CHECK_THAT(mean_positive_cosine(a, b), WithinAbs(0.5, 1e-15));
    CHECK(parse_denominator_mode("literal_hj") == DenominatorMode::literal_hj);
    CHECK_THROWS_AS(parse_denominator_mode("hj"), ConfigError);
    LossConfig bad;
    bad.temperature = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}
