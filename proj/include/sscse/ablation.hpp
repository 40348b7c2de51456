// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0
//
// Method x seed sweeps. Each row reports the mean and sample standard
// deviation of the best `top_k` seeds ranked by aggregate Spearman, plus
// the best seed overall.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sscse/trainer.hpp"

namespace sscse {

struct AblationCell {
    DropoutMethod method = DropoutMethod::fixed;
    std::uint64_t seed = 0;
    bool completed = false;
    double aggregate = 0.0;
    double final_loss = 0.0;
    std::string error;
};

struct AblationRow {
    DropoutMethod method = DropoutMethod::fixed;
    std::size_t n_completed = 0;
    std::size_t n_top = 0;
    double avg = 0.0;  // mean over the top seeds
    double std = 0.0;  // sample standard deviation over the top seeds
    double max = 0.0;
};

struct AblationTable {
    std::vector<AblationCell> cells;
    std::vector<AblationRow> rows;
    std::size_t top_k = 3;

    // method,avg,std,max,n_top,n_completed
    std::string to_csv() const;
    // method,seed,status,aggregate,final_loss,error
    std::string cells_csv() const;
};

struct AblationOptions {
    std::size_t top_k = 3;
    std::size_t jobs = 1;
    // When set, each cell writes its run under <output_dir>/<method>/seed_<n>.
    bool write_outputs = false;
};

// Mean / sample std / max over the top_k largest values.
AblationRow summarize_scores(DropoutMethod method, std::vector<double> scores, std::size_t top_k);

AblationTable ablate(const TrainConfig& base, const TrainingData& data, const std::vector<DropoutMethod>& methods,
                     const std::vector<std::uint64_t>& seeds, const AblationOptions& options = {});

}  // namespace sscse
