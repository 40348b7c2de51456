// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference verification of analytic gradients.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sscse/graph.hpp"

namespace sscse {

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

struct ParameterCheck {
    std::string name;
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    bool passed = true;
};

struct GradCheckReport {
    std::vector<ParameterCheck> parameters;
    double tolerance = 0.0;
    double step = 0.0;
    bool passed = true;

    const ParameterCheck& worst() const;
};

struct GradCheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
    // The floor keeps entries whose true gradient is ~0 from reporting pure
    // cancellation noise as relative error.
    double floor = 1e-6;
};

// Builds the scalar loss on the given graph. Must be deterministic.
using LossBuilder = std::function<Tensor(Graph&)>;

double relative_error(double analytic, double numeric, double floor);

// Compares analytic gradients of `build` against central differences for
// every element of every parameter. Throws ContractError if two forward
// evaluations at the same point disagree (a stochastic builder).
GradCheckReport grad_check(const LossBuilder& build, std::vector<NamedTensor> params,
                           const GradCheckOptions& options = {});

}  // namespace sscse
