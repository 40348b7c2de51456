// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sscse/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "sscse/errors.hpp"

namespace sscse {

const ParameterCheck& GradCheckReport::worst() const {
    if (parameters.empty()) throw StateError("empty gradient-check report");
    return *std::max_element(parameters.begin(), parameters.end(), [](const auto& a, const auto& b) {
        return a.max_relative_error < b.max_relative_error;
    });
}

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

namespace {

double evaluate(const LossBuilder& build) {
    Graph g(Graph::Mode::no_grad);
    const Tensor loss = build(g);
    if (loss.numel() != 1) throw ContractError("grad_check builder must return a scalar");
    return loss.item();
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& build, std::vector<NamedTensor> params,
                           const GradCheckOptions& options) {
    for (auto& p : params) {
        if (!p.tensor.requires_grad()) throw ContractError("parameter " + p.name + " does not require grad");
        p.tensor.zero_grad();
    }
    {
        Graph g;
        const Tensor loss = build(g);
        g.backward(loss);
    }
    const double f0 = evaluate(build);
    const double f1 = evaluate(build);
    if (f0 != f1) throw ContractError("loss builder is not deterministic; freeze or disable stochastic layers");

    GradCheckReport report;
    report.tolerance = options.tolerance;
    report.step = options.step;
    for (auto& p : params) {
        ParameterCheck check;
        check.name = p.name;
        const std::vector<double> analytic(p.tensor.mutable_grad().begin(), p.tensor.mutable_grad().end());
        auto values = p.tensor.mutable_data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + options.step;
            const double up = evaluate(build);
            values[i] = saved - options.step;
            const double down = evaluate(build);
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * options.step);
            const double err = relative_error(analytic[i], numeric, options.floor);
            if (err > check.max_relative_error || i == 0) {
                check.max_relative_error = err;
                check.worst_index = i;
                check.analytic_at_worst = analytic[i];
                check.numeric_at_worst = numeric;
            }
        }
        check.passed = check.max_relative_error < options.tolerance;
        report.passed = report.passed && check.passed;
        report.parameters.push_back(std::move(check));
    }
    return report;
}

}  // namespace sscse
