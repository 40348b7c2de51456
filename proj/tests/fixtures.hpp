// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "sscse/data_io.hpp"
#include "sscse/rng.hpp"
#include "sscse/synthetic.hpp"
#include "sscse/trainer.hpp"

namespace sscse::testing {

// Toy setup shared by the end-to-end checks: 200 template sentences and a
// 200-pair Jaccard-scored STS set over the corpus vocabulary.
struct ToyData {
    TrainingData data;
    Vocabulary vocab;
};

inline ToyData make_toy_data(std::uint64_t seed = 7, std::size_t n_sentences = 200, std::size_t n_pairs = 200) {
    const RngStream synth = RngStream(seed).fork(StreamPurpose::synthetic);
    TrainingData data;
    data.corpus = make_synthetic_corpus(synth, n_sentences);
    Vocabulary vocab = Vocabulary::build(data.corpus);
    data.sts["synth"] = make_synthetic_sts(synth.fork(StreamAxis::index, 1), n_pairs, vocab);
    return {std::move(data), std::move(vocab)};
}

inline TrainConfig toy_config(const std::filesystem::path& output_dir, std::uint64_t seed = 1) {
    TrainConfig cfg;
    cfg.sts["synth"] = "synth.tsv";
    cfg.seed = seed;
    cfg.output_dir = output_dir;
    return cfg;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("sscse_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace sscse::testing
