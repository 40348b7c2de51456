// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0
//
// Semantic textual similarity evaluation: cosine of eval-mode embeddings per
// sentence pair, scored against gold labels with Spearman's rank correlation.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sscse/data_io.hpp"
#include "sscse/encoder.hpp"

namespace sscse {

// Fractional ranks 1..n; tied values share the mean of the ranks they span.
std::vector<double> rank_average_ties(std::span<const double> values);

// Pearson correlation. Throws UndefinedCorrelationError for constant input.
double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of the average-tie ranks of x and y.
double spearman(std::span<const double> x, std::span<const double> y);

struct DatasetScore {
    std::string dataset;
    double spearman = 0.0;
    std::size_t n_pairs = 0;
};

struct EvalReport {
    std::vector<DatasetScore> datasets;  // sorted by name
    double aggregate = 0.0;              // arithmetic mean of datasets[].spearman
    std::uint64_t seed = 0;
    std::string config_fingerprint;
    std::vector<std::string> warnings;

    std::string to_json() const;
    // dataset,spearman,n_pairs rows plus a final __aggregate__ row.
    std::string to_csv() const;
    static EvalReport from_json(const std::string& text);
    void write(const std::filesystem::path& json_path, const std::filesystem::path& csv_path) const;
};

struct Tokenizer {
    const Vocabulary& vocab;
    std::size_t max_seq_len;
};

// Cosine similarity of each pair under eval-mode encoding.
std::vector<double> predict_similarities(const EncoderWeights& weights, const EncoderConfig& config,
                                         const std::vector<StsExample>& examples, const Tokenizer& tokenizer);

// Datasets with fewer than two pairs, or whose correlation is undefined, are
// skipped with a warning. Throws DataError if no dataset could be scored.
EvalReport evaluate(const EncoderWeights& weights, const EncoderConfig& config,
                    const std::map<std::string, std::vector<StsExample>>& datasets, const Tokenizer& tokenizer,
                    std::uint64_t seed = 0, const std::string& config_fingerprint = "");

}  // namespace sscse
