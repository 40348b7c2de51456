// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sscse/ablation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <sstream>
#include <thread>

#include "sscse/config.hpp"
#include "sscse/errors.hpp"

namespace sscse {

AblationRow summarize_scores(DropoutMethod method, std::vector<double> scores, std::size_t top_k) {
    AblationRow row;
    row.method = method;
    row.n_completed = scores.size();
    if (scores.empty()) return row;
    std::sort(scores.begin(), scores.end(), std::greater<>());
    row.max = scores.front();
    row.n_top = std::min(top_k, scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < row.n_top; ++i) sum += scores[i];
    row.avg = sum / static_cast<double>(row.n_top);
    if (row.n_top > 1) {
        double ss = 0.0;
        for (std::size_t i = 0; i < row.n_top; ++i) ss += (scores[i] - row.avg) * (scores[i] - row.avg);
        row.std = std::sqrt(ss / static_cast<double>(row.n_top - 1));
    }
    return row;
}

std::string AblationTable::to_csv() const {
    std::ostringstream os;
    os << "method,avg,std,max,n_top,n_completed\n";
    for (const auto& r : rows) {
        os << to_string(r.method) << ",";
        if (r.n_completed == 0) {
            os << ",,," << r.n_top << "," << r.n_completed << "\n";
            continue;
        }
        os << format_double(r.avg) << "," << format_double(r.std) << "," << format_double(r.max) << "," << r.n_top
           << "," << r.n_completed << "\n";
    }
    return os.str();
}

std::string AblationTable::cells_csv() const {
    std::ostringstream os;
    os << "method,seed,status,aggregate,final_loss,error\n";
    for (const auto& c : cells) {
        os << to_string(c.method) << "," << c.seed << "," << (c.completed ? "ok" : "failed") << ",";
        if (c.completed) os << format_double(c.aggregate) << "," << format_double(c.final_loss);
        else os << ",";
        std::string err = c.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        os << "," << err << "\n";
    }
    return os.str();
}

AblationTable ablate(const TrainConfig& base, const TrainingData& data, const std::vector<DropoutMethod>& methods,
                     const std::vector<std::uint64_t>& seeds, const AblationOptions& options) {
    if (methods.empty() || seeds.empty()) throw ConfigError("ablation needs at least one method and one seed");
    if (data.sts.empty()) throw ConfigError("ablation needs at least one STS dataset to score runs");

    AblationTable table;
    table.top_k = options.top_k;
    for (auto m : methods)
        for (auto s : seeds) table.cells.push_back({m, s, false, 0.0, 0.0, {}});

    auto run_cell = [&](AblationCell& cell) {
        TrainConfig cfg = base;
        cfg.method = cell.method;
        cfg.seed = cell.seed;
        cfg.output_dir = base.output_dir / to_string(cell.method) / ("seed_" + std::to_string(cell.seed));
        try {
            const RunRecord run = train(cfg, data, {options.write_outputs, false});
            cell.aggregate = run.final_report->aggregate;
            cell.final_loss = run.steps.back().loss;
            cell.completed = true;
        } catch (const Error& e) {
            cell.error = e.kind() + ": " + e.what();
        } catch (const std::exception& e) {
            cell.error = std::string("internal: ") + e.what();
        }
    };

    // Cells share nothing mutable, so scheduling cannot change their results.
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < table.cells.size(); i = next++) run_cell(table.cells[i]);
    };
    const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, table.cells.size());
    std::vector<std::thread> pool;
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (auto m : methods) {
        std::vector<double> scores;
        for (const auto& c : table.cells) {
            if (c.method == m && c.completed) scores.push_back(c.aggregate);
        }
        table.rows.push_back(summarize_scores(m, std::move(scores), options.top_k));
    }
    return table;
}

}  // namespace sscse
