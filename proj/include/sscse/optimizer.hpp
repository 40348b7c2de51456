// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "sscse/tensor.hpp"

namespace sscse {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& text);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

// Plain SGD or Adam (bias-corrected) over a fixed parameter list. step()
// consumes the accumulated gradients; zero_grad() clears them.
class Optimizer {
public:
    Optimizer(OptimizerConfig config, std::vector<Tensor> params);

    void step();
    void zero_grad();
    std::size_t steps_taken() const noexcept { return t_; }

private:
    OptimizerConfig config_;
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::size_t t_ = 0;
};

}  // namespace sscse
