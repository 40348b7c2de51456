// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0
//
// Cosine similarity and the temperature-scaled InfoNCE objective over a batch
// of positive pairs (h_i, h_i+):
//
//   l_i  = -log( exp(s(h_i, h_i+) / tau) / sum_j exp(s(h_i, c_j) / tau) )
//   loss = mean_i l_i
//
// with candidates c_j = h_j+ (positives_of_all, in-batch negatives) or
// c_j = h_j (literal_hj, where the j = i term is s(h_i, h_i) = 1).

#pragma once

#include <span>
#include <string>

#include "sscse/graph.hpp"

namespace sscse {

enum class DenominatorMode { positives_of_all, literal_hj };

std::string to_string(DenominatorMode mode);
DenominatorMode parse_denominator_mode(const std::string& text);

struct LossConfig {
    double temperature = 0.05;
    DenominatorMode denominator = DenominatorMode::positives_of_all;

    void validate() const;
};

// a.b / (|a||b|), clamped to [-1, 1]. Zero-norm input is a ContractError.
double cosine_sim(std::span<const double> a, std::span<const double> b);

// Differentiable batch loss; h and h_plus are [N, d]. Uses log-sum-exp.
Tensor info_nce_loss(Graph& graph, const Tensor& h, const Tensor& h_plus, const LossConfig& config);

// positives_of_all loss from an [N, N] cosine matrix whose diagonal holds the
// positive pairs: mean_i (logsumexp_j(S_ij / tau) - S_ii / tau).
Tensor info_nce_from_similarity(Graph& graph, const Tensor& similarity, double temperature);

// Reference value with plain scalar loops and direct exp/log (no log-sum-exp).
double info_nce_oracle(const Tensor& h, const Tensor& h_plus, const LossConfig& config);

// Mean of cosine(h_i, h_plus_i) over rows.
double mean_positive_cosine(const Tensor& h, const Tensor& h_plus);

}  // namespace sscse
