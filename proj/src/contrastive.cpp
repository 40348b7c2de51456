// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sscse/contrastive.hpp"

#include <algorithm>
#include <cmath>

#include "sscse/errors.hpp"

namespace sscse {

namespace {

void check_pair(const Tensor& h, const Tensor& h_plus) {
    if (h.rank() != 2 || h.shape() != h_plus.shape()) {
        throw DimensionError("InfoNCE expects two [N, d] tensors, got " + shape_to_string(h.shape()) + " and " +
                             shape_to_string(h_plus.shape()));
    }
}

// Per-row logsumexp of (logits - positive); the positive's own term becomes
// exactly zero, which keeps small losses free of cancellation.
Tensor mean_shifted_logsumexp(Graph& g, const Tensor& logits, const Tensor& positive) {
    const std::size_t n = logits.dim(0), m = logits.dim(1);
    const Tensor offsets = g.matmul(g.reshape(positive, {n, 1}), Tensor::full({1, m}, 1.0));
    return g.mean(g.logsumexp_rows(g.sub(logits, offsets)));
}

}  // namespace

std::string to_string(DenominatorMode mode) {
    return mode == DenominatorMode::positives_of_all ? "positives_of_all" : "literal_hj";
}

DenominatorMode parse_denominator_mode(const std::string& text) {
    if (text == "positives_of_all") return DenominatorMode::positives_of_all;
    if (text == "literal_hj") return DenominatorMode::literal_hj;
    throw ConfigError("unknown denominator mode '" + text + "' (expected positives_of_all or literal_hj)");
}

void LossConfig::validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be positive");
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) {
        throw DimensionError("cosine_sim: vectors of length " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()));
    }
    double dot = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) throw ContractError("cosine similarity of a zero-norm vector is undefined");
    return std::clamp(dot / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

Tensor info_nce_from_similarity(Graph& g, const Tensor& similarity, double temperature) {
    const Tensor logits = g.scale(similarity, 1.0 / temperature);
    return mean_shifted_logsumexp(g, logits, g.diagonal(logits));
}

Tensor info_nce_loss(Graph& g, const Tensor& h, const Tensor& h_plus, const LossConfig& config) {
    config.validate();
    check_pair(h, h_plus);
    const Tensor hn = g.l2_normalize_rows(h);
    const Tensor pn = g.l2_normalize_rows(h_plus);
    if (config.denominator == DenominatorMode::positives_of_all) {
        return info_nce_from_similarity(g, g.matmul(hn, g.transpose(pn)), config.temperature);
    }
    const double inv_t = 1.0 / config.temperature;
    const Tensor denominator = g.scale(g.matmul(hn, g.transpose(hn)), inv_t);
    const Tensor positive = g.scale(g.rowwise_dot(hn, pn), inv_t);
    return mean_shifted_logsumexp(g, denominator, positive);
}

double info_nce_oracle(const Tensor& h, const Tensor& h_plus, const LossConfig& config) {
    config.validate();
    check_pair(h, h_plus);
    const std::size_t n = h.dim(0), d = h.dim(1);
    const auto H = h.data();
    const auto P = h_plus.data();
    auto sim = [&](const double* a, const double* b) {
        double dot = 0.0, aa = 0.0, bb = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            dot += a[k] * b[k];
            aa += a[k] * a[k];
            bb += b[k] * b[k];
        }
        if (aa == 0.0 || bb == 0.0) throw ContractError("InfoNCE oracle: zero-norm row");
        return dot / std::sqrt(aa * bb);
    };
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double numerator = std::exp(sim(&H[i * d], &P[i * d]) / config.temperature);
        double denominator = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double* candidate = config.denominator == DenominatorMode::positives_of_all ? &P[j * d] : &H[j * d];
            denominator += std::exp(sim(&H[i * d], candidate) / config.temperature);
        }
        total += -std::log(numerator / denominator);
    }
    return total / static_cast<double>(n);
}

double mean_positive_cosine(const Tensor& h, const Tensor& h_plus) {
    check_pair(h, h_plus);
    const std::size_t n = h.dim(0), d = h.dim(1);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += cosine_sim(h.data().subspan(i * d, d), h_plus.data().subspan(i * d, d));
    }
    return total / static_cast<double>(n);
}

}  // namespace sscse
