// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sscse/optimizer.hpp"

#include <cmath>

#include "sscse/errors.hpp"

namespace sscse {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer_kind(const std::string& text) {
    if (text == "sgd") return OptimizerKind::sgd;
    if (text == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer '" + text + "' (expected sgd or adam)");
}

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
}

Optimizer::Optimizer(OptimizerConfig config, std::vector<Tensor> params)
    : config_(config), params_(std::move(params)) {
    config_.validate();
    for (const auto& p : params_) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
    }
}

void Optimizer::step() {
    ++t_;
    const double lr = config_.learning_rate;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        if (!p.has_grad()) continue;
        auto w = p.mutable_data();
        const auto g = p.grad();
        if (config_.kind == OptimizerKind::sgd) {
            for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * g[k];
            continue;
        }
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.eps);
        }
    }
}

void Optimizer::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

}  // namespace sscse
