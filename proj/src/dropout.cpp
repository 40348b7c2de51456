// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sscse/dropout.hpp"

#include <cmath>
#include <sstream>

#include "sscse/errors.hpp"

namespace sscse {

namespace {

void check_rate(double rate, const char* what) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ContractError(std::string(what) + " must lie in [0, 1), got " + std::to_string(rate));
    }
}

}  // namespace

DropoutDistribution DropoutDistribution::degenerate(double rate) {
    check_rate(rate, "dropout rate");
    return {Kind::degenerate, rate, rate};
}

DropoutDistribution DropoutDistribution::uniform(double low, double high) {
    check_rate(low, "uniform lower bound");
    check_rate(high, "uniform upper bound");
    if (low > high) throw ContractError("uniform dropout distribution needs low <= high");
    return {Kind::uniform, low, high};
}

double DropoutDistribution::stddev() const noexcept { return (high_ - low_) / std::sqrt(12.0); }

std::string DropoutDistribution::describe() const {
    std::ostringstream os;
    os.precision(17);
    if (kind_ == Kind::degenerate) {
        os << "degenerate(" << low_ << ")";
    } else {
        os << "uniform(" << low_ << ", " << high_ << ")";
    }
    return os.str();
}

void MaskRecord::append(MaskRecord other) {
    for (auto& e : other.entries) entries.push_back(std::move(e));
}

std::vector<double> MaskRecord::all_rates() const {
    std::vector<double> out;
    for (const auto& e : entries) out.insert(out.end(), e.rates.begin(), e.rates.end());
    return out;
}

double MaskRecord::mean_rate() const {
    const auto rates = all_rates();
    if (rates.empty()) return 0.0;
    double total = 0.0;
    for (double r : rates) total += r;
    return total / static_cast<double>(rates.size());
}

double sample_rate(const DropoutDistribution& dist, const RngStream& stream) {
    if (dist.kind() == DropoutDistribution::Kind::degenerate) return dist.low();
    const double rate = dist.low() + (dist.high() - dist.low()) * stream.uniform(0);
    // Keep the interval half-open when rounding lands on the upper bound.
    if (rate >= dist.high() && dist.high() > dist.low()) return std::nextafter(dist.high(), dist.low());
    return rate;
}

Tensor sample_mask(double rate, const Shape& shape, const RngStream& stream) {
    check_rate(rate, "mask rate");
    Tensor mask = Tensor::zeros(shape);
    auto m = mask.mutable_data();
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = stream.uniform(k) < rate ? 0.0 : 1.0;
    return mask;
}

DropoutResult apply_dropout(Graph& graph, const Tensor& x, const DropoutSpec& spec, const RngStream& stream,
                            bool training, const std::string& site) {
    if (spec.sentence_wise && x.rank() < 2) {
        throw ContractError("sentence-wise dropout needs a batch-major tensor, got " + shape_to_string(x.shape()));
    }
    if (!training) return {x, {}};

    const std::size_t rows = x.rank() < 2 ? 1 : x.dim(0);
    const std::size_t row_size = x.numel() / rows;
    const RngStream rate_base =
        (spec.rate_scope == RateScope::per_forward ? stream.without({StreamAxis::layer, StreamAxis::site}) : stream)
            .fork(StreamPurpose::rate);
    const RngStream mask_base = stream.fork(StreamPurpose::mask);

    MaskEntry entry;
    entry.site = site;
    entry.stream = stream.describe();
    entry.mask = Tensor::zeros(x.shape());
    Tensor multiplier = Tensor::zeros(x.shape());
    auto mask = entry.mask.mutable_data();
    auto mult = multiplier.mutable_data();

    const double shared_rate = sample_rate(spec.distribution, rate_base.fork(StreamAxis::sentence, 0));
    if (!spec.sentence_wise) entry.rates.push_back(shared_rate);
    for (std::size_t i = 0; i < rows; ++i) {
        double rate = shared_rate;
        if (spec.sentence_wise) {
            rate = i == 0 ? shared_rate : sample_rate(spec.distribution, rate_base.fork(StreamAxis::sentence, i));
            entry.rates.push_back(rate);
        }
        const Tensor row_mask = sample_mask(rate, {row_size}, mask_base.fork(StreamAxis::sentence, i));
        const double keep_scale = spec.scaling == DropoutScaling::inverted ? 1.0 / (1.0 - rate) : 1.0;
        const auto rm = row_mask.data();
        for (std::size_t k = 0; k < row_size; ++k) {
            mask[i * row_size + k] = rm[k];
            mult[i * row_size + k] = rm[k] * keep_scale;
        }
    }

    DropoutResult result;
    result.output = graph.mul(x, multiplier);
    result.record.entries.push_back(std::move(entry));
    return result;
}

std::string to_string(RateScope scope) { return scope == RateScope::per_forward ? "per_forward" : "per_layer"; }

std::string to_string(DropoutScaling scaling) { return scaling == DropoutScaling::inverted ? "inverted" : "none"; }

RateScope parse_rate_scope(const std::string& text) {
    if (text == "per_forward") return RateScope::per_forward;
    if (text == "per_layer") return RateScope::per_layer;
    throw ConfigError("unknown rate scope '" + text + "' (expected per_forward or per_layer)");
}

DropoutScaling parse_scaling(const std::string& text) {
    if (text == "inverted") return DropoutScaling::inverted;
    if (text == "none") return DropoutScaling::none;
    throw ConfigError("unknown dropout scaling '" + text + "' (expected inverted or none)");
}

}  // namespace sscse
