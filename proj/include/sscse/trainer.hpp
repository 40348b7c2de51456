// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0
//
// Unsupervised contrastive training: every step encodes a batch twice with
// independently sampled dropout, scores the pairs with InfoNCE and takes one
// optimizer step. Random streams are addressed by (seed, step, forward,
// layer, site, sentence), so a run is a pure function of its configuration.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sscse/contrastive.hpp"
#include "sscse/data_io.hpp"
#include "sscse/encoder.hpp"
#include "sscse/grad_check.hpp"
#include "sscse/optimizer.hpp"
#include "sscse/sts_eval.hpp"

namespace sscse {

// fixed: one constant rate (standard SimCSE). sampled: rate drawn from
// uniform(dropout_low, dropout_high). sampled_sentence_wise: additionally a
// separate rate and mask per sentence.
enum class DropoutMethod { fixed, sampled, sampled_sentence_wise };

std::string to_string(DropoutMethod method);
DropoutMethod parse_dropout_method(const std::string& text);

struct TrainConfig {
    std::filesystem::path corpus;
    std::map<std::string, std::filesystem::path> sts;  // "sts.<name> = path"
    std::size_t vocab_min_count = 1;
    std::size_t vocab_max_size = 50000;

    // vocab_size and dropout are filled in from the vocabulary and the
    // dropout fields below when training starts.
    EncoderConfig encoder;

    DropoutMethod method = DropoutMethod::sampled_sentence_wise;
    double dropout_rate = 0.1;
    double dropout_low = 0.0;
    double dropout_high = 0.2;
    RateScope rate_scope = RateScope::per_layer;
    DropoutScaling scaling = DropoutScaling::inverted;

    LossConfig loss;
    OptimizerConfig optimizer;

    std::size_t batch_size = 16;
    std::size_t steps = 200;
    std::size_t epochs = 0;  // when > 0, overrides steps
    std::size_t eval_every = 0;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "run";

    // Applies one "key = value" setting; unknown keys are ConfigErrors.
    void set(const std::string& key, const std::string& value);
    // Relative paths are resolved against base_dir.
    static TrainConfig parse(std::string_view text, const std::filesystem::path& base_dir = {},
                             const std::string& source = "<config>");
    static TrainConfig load(const std::filesystem::path& path);
    // Canonical text covering every key (output_dir included).
    std::string to_text() const;
    // Fingerprint of everything that influences results (excludes output_dir).
    std::string fingerprint() const;

    DropoutSpec dropout_spec() const;
    EncoderConfig encoder_config(std::size_t vocab_size) const;
    void validate(bool check_paths) const;
};

struct TrainingData {
    std::vector<std::string> corpus;
    std::map<std::string, std::vector<StsExample>> sts;

    // Reads the corpus and every STS file named by the config.
    static TrainingData load(const TrainConfig& config);
};

struct StepLog {
    std::size_t step = 0;
    double loss = 0.0;
    double mean_rate = 0.0;
    double positive_cosine = 0.0;  // mean cos(h_i, h_i+) of the step's batch
};

struct RunRecord {
    std::vector<StepLog> steps;
    std::vector<std::pair<std::size_t, EvalReport>> evaluations;
    std::optional<EvalReport> final_report;
    double wall_clock_seconds = 0.0;
    std::filesystem::path checkpoint;  // empty when outputs were not written

    EncoderConfig encoder;
    EncoderWeights weights;
    std::optional<Vocabulary> vocab;

    // "step,loss,mean_rate" lines with round-trip exact numbers.
    std::string loss_log_csv() const;
    std::string to_json() const;
};

struct TrainOptions {
    bool write_outputs = true;
    bool verbose = false;
};

RunRecord train(const TrainConfig& config, const TrainingData& data, const TrainOptions& options = {});
RunRecord train(const TrainConfig& config);

struct ModelGradCheckOptions {
    // 0 disables dropout; a positive rate runs fixed-rate dropout with masks
    // frozen by a fixed stream.
    double dropout_rate = 0.0;
    // Appends an identity operation whose backward is wrong by 50%.
    bool negative_control = false;
    GradCheckOptions check;
};

// Finite-difference check of every encoder parameter under the InfoNCE loss
// on a two-sentence batch (lengths 4 and 3). Vocabulary size is taken from
// the corpus when one is given, otherwise 16.
GradCheckReport model_grad_check(const TrainConfig& config, const std::vector<std::string>& corpus,
                                 const ModelGradCheckOptions& options = {});

}  // namespace sscse
