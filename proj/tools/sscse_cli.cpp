// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0
//
// sscse: train, evaluate and ablate contrastive sentence encoders with
// sampled dropout rates.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sscse/ablation.hpp"
#include "sscse/checkpoint.hpp"
#include "sscse/config.hpp"
#include "sscse/errors.hpp"
#include "sscse/synthetic.hpp"
#include "sscse/trainer.hpp"

namespace fs = std::filesystem;
using namespace sscse;

namespace {

TrainConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
    TrainConfig cfg = TrainConfig::load(path);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("override '" + kv + "' is not key=value");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

std::map<std::string, std::vector<StsExample>> load_sts_args(const std::vector<std::string>& specs) {
    std::map<std::string, std::vector<StsExample>> out;
    for (const auto& s : specs) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--sts expects name=path, got '" + s + "'");
        out[s.substr(0, eq)] = parse_sts_tsv(fs::path(s.substr(eq + 1)));
    }
    return out;
}

fs::path sibling_vocab(const fs::path& checkpoint, const std::string& given) {
    return given.empty() ? checkpoint.parent_path() / "vocab.txt" : fs::path(given);
}

template <typename T>
std::vector<T> split_list(const std::string& text, T (*parse)(const std::string&)) {
    std::vector<T> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) out.push_back(parse(item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contrastive sentence-embedding training with sampled dropout rates"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train an encoder from a config file");
    std::string train_config;
    std::vector<std::string> train_overrides;
    bool quiet = false;
    train_cmd->add_option("--config", train_config, "Config file (key = value lines)")->required();
    train_cmd->add_option("--set", train_overrides, "Override a config key (key=value)");
    train_cmd->add_flag("--quiet", quiet, "No progress output");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on STS datasets");
    std::string eval_checkpoint, eval_vocab, eval_out;
    std::vector<std::string> eval_sts;
    std::uint64_t eval_seed = 0;
    eval_cmd->add_option("--checkpoint", eval_checkpoint)->required();
    eval_cmd->add_option("--vocab", eval_vocab, "Vocabulary file (default: vocab.txt next to the checkpoint)");
    eval_cmd->add_option("--sts", eval_sts, "Dataset as name=path.tsv (repeatable)")->required();
    eval_cmd->add_option("--out", eval_out, "Report prefix; writes <prefix>.json and <prefix>.csv")->required();
    eval_cmd->add_option("--seed", eval_seed, "Seed recorded in the report");

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "Train and evaluate every method x seed");
    std::string ablate_config, ablate_methods = "fixed,sampled,sampled_sentence_wise", ablate_seeds = "1,2,3";
    std::vector<std::string> ablate_overrides;
    std::size_t ablate_jobs = 1, ablate_top_k = 3;
    ablate_cmd->add_option("--config", ablate_config)->required();
    ablate_cmd->add_option("--set", ablate_overrides, "Override a config key (key=value)");
    ablate_cmd->add_option("--methods", ablate_methods, "Comma-separated methods");
    ablate_cmd->add_option("--seeds", ablate_seeds, "Comma-separated seeds");
    ablate_cmd->add_option("--jobs", ablate_jobs, "Cells trained concurrently");
    ablate_cmd->add_option("--top-k", ablate_top_k, "Seeds averaged per method (best by aggregate)");

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every model gradient");
    std::string grad_config;
    double grad_rate = 0.0, grad_tol = 1e-4;
    bool negative_control = false;
    grad_cmd->add_option("--config", grad_config)->required();
    grad_cmd->add_option("--dropout-rate", grad_rate, "Freeze masks at this fixed rate (0 disables dropout)");
    grad_cmd->add_option("--tol", grad_tol, "Maximum relative error");
    grad_cmd->add_flag("--negative-control", negative_control, "Inject a wrong gradient rule; the check must fail");

    // make-synth-sts
    auto* synth_cmd = app.add_subcommand("make-synth-sts", "Write a synthetic Jaccard-scored STS set");
    std::string synth_vocab, synth_corpus, synth_out, synth_corpus_out;
    std::size_t synth_pairs = 200, synth_sentences = 200;
    std::uint64_t synth_seed = 1;
    synth_cmd->add_option("--vocab", synth_vocab, "Vocabulary file");
    synth_cmd->add_option("--corpus", synth_corpus, "Build the vocabulary from this corpus");
    synth_cmd->add_option("--corpus-out", synth_corpus_out, "Also generate a template corpus here");
    synth_cmd->add_option("--n-sentences", synth_sentences, "Sentences in the generated corpus");
    synth_cmd->add_option("--n-pairs", synth_pairs, "Pairs to generate");
    synth_cmd->add_option("--seed", synth_seed);
    synth_cmd->add_option("--out", synth_out, "Output TSV")->required();

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "Write eval-mode embeddings of a sentence file as CSV");
    std::string embed_checkpoint, embed_vocab, embed_input, embed_out;
    embed_cmd->add_option("--checkpoint", embed_checkpoint)->required();
    embed_cmd->add_option("--vocab", embed_vocab);
    embed_cmd->add_option("--input", embed_input, "One sentence per line")->required();
    embed_cmd->add_option("--out", embed_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*train_cmd) {
            const TrainConfig cfg = load_config(train_config, train_overrides);
            const RunRecord run = train(cfg, TrainingData::load(cfg), {true, !quiet});
            std::cout << "final_loss=" << format_double(run.steps.back().loss)
                      << " checkpoint=" << run.checkpoint.string();
            if (run.final_report) std::cout << " aggregate_spearman=" << format_double(run.final_report->aggregate);
            std::cout << "\n";
        } else if (*eval_cmd) {
            // Load everything before writing, so a bad checkpoint leaves no report behind.
            const Checkpoint ck = load_checkpoint(eval_checkpoint);
            const Vocabulary vocab = Vocabulary::load(sibling_vocab(eval_checkpoint, eval_vocab));
            if (vocab.size() != ck.config.vocab_size) {
                throw LoadError("vocabulary has " + std::to_string(vocab.size()) + " entries, checkpoint expects " +
                                std::to_string(ck.config.vocab_size));
            }
            const auto datasets = load_sts_args(eval_sts);
            const EvalReport report = evaluate(ck.weights, ck.config, datasets, {vocab, ck.config.max_seq_len},
                                               eval_seed, fingerprint(encoder_config_to_text(ck.config)));
            report.write(eval_out + ".json", eval_out + ".csv");
            std::cout << report.to_csv();
        } else if (*ablate_cmd) {
            const TrainConfig cfg = load_config(ablate_config, ablate_overrides);
            const auto methods = split_list<DropoutMethod>(ablate_methods, &parse_dropout_method);
            const auto seeds = split_list<std::uint64_t>(
                ablate_seeds, +[](const std::string& s) { return parse_u64("seeds", s); });
            const AblationTable table =
                ablate(cfg, TrainingData::load(cfg), methods, seeds, {ablate_top_k, ablate_jobs, true});
            fs::create_directories(cfg.output_dir);
            write_file(cfg.output_dir / "ablation.csv", table.to_csv());
            write_file(cfg.output_dir / "ablation_cells.csv", table.cells_csv());
            std::cout << table.to_csv();
            for (const auto& c : table.cells) {
                if (!c.completed) std::cerr << "cell " << to_string(c.method) << "/" << c.seed << " failed: " << c.error << "\n";
            }
        } else if (*grad_cmd) {
            const TrainConfig cfg = TrainConfig::load(grad_config);
            std::vector<std::string> corpus;
            if (!cfg.corpus.empty() && fs::exists(cfg.corpus)) corpus = read_corpus(cfg.corpus);
            ModelGradCheckOptions opts;
            opts.dropout_rate = grad_rate;
            opts.negative_control = negative_control;
            opts.check.tolerance = grad_tol;
            const GradCheckReport report = model_grad_check(cfg, corpus, opts);
            for (const auto& p : report.parameters) {
                std::cout << (p.passed ? "PASS " : "FAIL ") << p.name << " max_rel_err=" << p.max_relative_error
                          << "\n";
            }
            if (!report.passed) {
                const auto& w = report.worst();
                std::cerr << "error: gradcheck: worst parameter " << w.name << "[" << w.worst_index
                          << "] relative error " << w.max_relative_error << " exceeds " << report.tolerance << "\n";
                return 1;
            }
        } else if (*synth_cmd) {
            std::vector<std::string> corpus;
            if (!synth_corpus_out.empty()) {
                corpus = make_synthetic_corpus(RngStream(synth_seed).fork(StreamPurpose::synthetic), synth_sentences);
                std::string text;
                for (const auto& s : corpus) text += s + "\n";
                write_file(synth_corpus_out, text);
            }
            std::optional<Vocabulary> vocab;
            if (!synth_vocab.empty()) vocab = Vocabulary::load(synth_vocab);
            else if (!synth_corpus.empty()) vocab = Vocabulary::build(read_corpus(synth_corpus));
            else if (!corpus.empty()) vocab = Vocabulary::build(corpus);
            else throw ConfigError("make-synth-sts needs --vocab, --corpus or --corpus-out");
            const auto pairs =
                make_synthetic_sts(RngStream(synth_seed).fork(StreamPurpose::synthetic).fork(StreamAxis::index, 1),
                                   synth_pairs, *vocab);
            write_sts_tsv(synth_out, pairs);
            std::cout << "wrote " << pairs.size() << " pairs to " << synth_out << "\n";
        } else if (*embed_cmd) {
            const Checkpoint ck = load_checkpoint(embed_checkpoint);
            const Vocabulary vocab = Vocabulary::load(sibling_vocab(embed_checkpoint, embed_vocab));
            std::vector<std::vector<std::int32_t>> sequences;
            for (const auto& line : read_corpus(embed_input)) {
                sequences.push_back(tokenize(line, vocab, ck.config.max_seq_len));
            }
            const auto rows = embed_sequences(sequences, ck.weights, ck.config);
            std::string csv;
            for (const auto& row : rows) {
                for (std::size_t j = 0; j < row.size(); ++j) csv += (j ? "," : "") + format_double(row[j]);
                csv += "\n";
            }
            write_file(embed_out, csv);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
