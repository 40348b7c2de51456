// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dropout with a sampled rate.
//
// A "rate" is always the probability of DROPPING an element: each mask
// element is 0 with probability `rate` and 1 with probability 1 - rate.
//
// Stream layout used by apply_dropout, relative to the stream it is given:
//   rate of sentence i : R.fork(rate).fork(sentence, sentence_wise ? i : 0)
//   mask of sentence i : S.fork(mask).fork(sentence, i), element k -> uniform(k)
// where S is the given (per-site) stream and R is S for per_layer scope or S
// with its layer/site components removed for per_forward scope. A batch
// without sentence-wise sampling therefore shares sentence 0's rate, and
// masks are addressed per sentence so that padding never shifts them.

#pragma once

#include <string>
#include <vector>

#include "sscse/graph.hpp"
#include "sscse/rng.hpp"

namespace sscse {

class DropoutDistribution {
public:
    enum class Kind { degenerate, uniform };

    static DropoutDistribution degenerate(double rate);
    // Uniform on [low, high); low == high collapses to a point mass.
    static DropoutDistribution uniform(double low, double high);

    Kind kind() const noexcept { return kind_; }
    double low() const noexcept { return low_; }
    double high() const noexcept { return high_; }
    double mean() const noexcept { return 0.5 * (low_ + high_); }
    double stddev() const noexcept;

    // True when both describe the same law (degenerate(p) == uniform(p, p)).
    bool same_law(const DropoutDistribution& other) const noexcept {
        return low_ == other.low_ && high_ == other.high_;
    }

    std::string describe() const;

private:
    DropoutDistribution(Kind kind, double low, double high) : kind_(kind), low_(low), high_(high) {}

    Kind kind_;
    double low_;
    double high_;
};

enum class RateScope { per_forward, per_layer };
enum class DropoutScaling { inverted, none };

struct DropoutSpec {
    DropoutDistribution distribution = DropoutDistribution::uniform(0.0, 0.2);
    RateScope rate_scope = RateScope::per_layer;
    bool sentence_wise = false;
    DropoutScaling scaling = DropoutScaling::inverted;
};

// One dropout application.
struct MaskEntry {
    std::string site;
    // One rate per sentence when sentence-wise, otherwise a single rate.
    std::vector<double> rates;
    // Binary mask with the shape of the masked tensor.
    Tensor mask;
    std::string stream;
};

struct MaskRecord {
    std::vector<MaskEntry> entries;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }
    void append(MaskRecord other);
    std::vector<double> all_rates() const;
    // Mean over every recorded rate; 0 for an empty record.
    double mean_rate() const;
};

struct DropoutResult {
    Tensor output;
    MaskRecord record;
};

// Draws one rate from `stream` (uses the stream's first deviate).
double sample_rate(const DropoutDistribution& dist, const RngStream& stream);

// Binary mask: element k is 0 iff stream.uniform(k) < rate.
Tensor sample_mask(double rate, const Shape& shape, const RngStream& stream);

// Applies dropout to x whose first dimension indexes sentences (required when
// sentence_wise). The mask is a constant of the graph, so the gradient is
// mask * scale. training=false returns x unchanged with an empty record.
DropoutResult apply_dropout(Graph& graph, const Tensor& x, const DropoutSpec& spec, const RngStream& stream,
                            bool training, const std::string& site = "dropout");

std::string to_string(RateScope scope);
std::string to_string(DropoutScaling scaling);
RateScope parse_rate_scope(const std::string& text);
DropoutScaling parse_scaling(const std::string& text);

}  // namespace sscse
