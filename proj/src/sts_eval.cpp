// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sscse/sts_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "sscse/config.hpp"
#include "sscse/contrastive.hpp"
#include "sscse/errors.hpp"

namespace sscse {

std::vector<double> rank_average_ties(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) throw ContractError("ranking needs at least two values");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t start = 0; start < n;) {
        std::size_t end = start + 1;
        while (end < n && values[order[end]] == values[order[start]]) ++end;
        // Positions start..end-1 hold ranks start+1..end.
        const double shared = 0.5 * static_cast<double>(start + 1 + end);
        for (std::size_t k = start; k < end; ++k) ranks[order[k]] = shared;
        start = end;
    }
    return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ContractError("correlation needs two lists of equal length >= 2");
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelationError("correlation with a constant list is undefined");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ContractError("spearman needs lists of equal length");
    const auto rx = rank_average_ties(x);
    const auto ry = rank_average_ties(y);
    return pearson(rx, ry);
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["datasets"] = nlohmann::ordered_json::array();
    for (const auto& d : datasets) {
        j["datasets"].push_back({{"dataset", d.dataset}, {"spearman", d.spearman}, {"n_pairs", d.n_pairs}});
    }
    j["aggregate"] = aggregate;
    j["seed"] = seed;
    j["config_fingerprint"] = config_fingerprint;
    j["warnings"] = warnings;
    return j.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
    EvalReport r;
    try {
        const auto j = nlohmann::json::parse(text);
        for (const auto& d : j.at("datasets")) {
            r.datasets.push_back({d.at("dataset").get<std::string>(), d.at("spearman").get<double>(),
                                  d.at("n_pairs").get<std::size_t>()});
        }
        r.aggregate = j.at("aggregate").get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
        if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed evaluation report: ") + e.what());
    }
    return r;
}

std::string EvalReport::to_csv() const {
    std::ostringstream os;
    os << "dataset,spearman,n_pairs\n";
    std::size_t total = 0;
    for (const auto& d : datasets) {
        os << d.dataset << "," << format_double(d.spearman) << "," << d.n_pairs << "\n";
        total += d.n_pairs;
    }
    os << "__aggregate__," << format_double(aggregate) << "," << total << "\n";
    return os.str();
}

void EvalReport::write(const std::filesystem::path& json_path, const std::filesystem::path& csv_path) const {
    // Render both before touching the filesystem so a failure leaves no partial report.
    const std::string json = to_json();
    const std::string csv = to_csv();
    for (const auto& [path, text] : {std::pair{json_path, json}, std::pair{csv_path, csv}}) {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!(out << text)) throw DataError("cannot write " + path.string());
    }
}

std::vector<double> predict_similarities(const EncoderWeights& weights, const EncoderConfig& config,
                                         const std::vector<StsExample>& examples, const Tokenizer& tokenizer) {
    // Encode each distinct sentence once.
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<std::vector<std::int32_t>> sequences;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    auto intern = [&](const std::string& s) {
        const auto [it, inserted] = slot.emplace(s, sequences.size());
        if (inserted) sequences.push_back(tokenize(s, tokenizer.vocab, tokenizer.max_seq_len));
        return it->second;
    };
    for (const auto& ex : examples) pairs.emplace_back(intern(ex.sentence_a), intern(ex.sentence_b));
    const auto embeddings = embed_sequences(sequences, weights, config);
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& [a, b] : pairs) out.push_back(cosine_sim(embeddings[a], embeddings[b]));
    return out;
}

EvalReport evaluate(const EncoderWeights& weights, const EncoderConfig& config,
                    const std::map<std::string, std::vector<StsExample>>& datasets, const Tokenizer& tokenizer,
                    std::uint64_t seed, const std::string& config_fingerprint) {
    EvalReport report;
    report.seed = seed;
    report.config_fingerprint = config_fingerprint;
    double total = 0.0;
    for (const auto& [name, examples] : datasets) {
        if (examples.size() < 2) {
            report.warnings.push_back(name + ": skipped, fewer than 2 pairs");
            continue;
        }
        const auto predicted = predict_similarities(weights, config, examples, tokenizer);
        std::vector<double> gold;
        gold.reserve(examples.size());
        for (const auto& ex : examples) gold.push_back(ex.gold_score);
        try {
            const double rho = spearman(predicted, gold);
            report.datasets.push_back({name, rho, examples.size()});
            total += rho;
        } catch (const UndefinedCorrelationError& e) {
            report.warnings.push_back(name + ": skipped, " + e.what());
        }
    }
    if (report.datasets.empty()) throw DataError("no dataset could be scored");
    report.aggregate = total / static_cast<double>(report.datasets.size());
    return report;
}

}  // namespace sscse
