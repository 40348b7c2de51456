// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sscse/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "sscse/checkpoint.hpp"
#include "sscse/config.hpp"
#include "sscse/errors.hpp"

namespace sscse {

namespace fs = std::filesystem;

std::string to_string(DropoutMethod method) {
    switch (method) {
        case DropoutMethod::fixed: return "fixed";
        case DropoutMethod::sampled: return "sampled";
        case DropoutMethod::sampled_sentence_wise: return "sampled_sentence_wise";
    }
    return "?";
}

DropoutMethod parse_dropout_method(const std::string& text) {
    if (text == "fixed") return DropoutMethod::fixed;
    if (text == "sampled") return DropoutMethod::sampled;
    if (text == "sampled_sentence_wise") return DropoutMethod::sampled_sentence_wise;
    throw ConfigError("unknown method '" + text + "' (expected fixed, sampled or sampled_sentence_wise)");
}

void TrainConfig::set(const std::string& key, const std::string& value) {
    auto size = [&] { return static_cast<std::size_t>(parse_u64(key, value)); };
    auto real = [&] { return parse_double(key, value); };
    if (key == "corpus") corpus = value;
    else if (key.rfind("sts.", 0) == 0 && key.size() > 4) sts[key.substr(4)] = value;
    else if (key == "vocab_min_count") vocab_min_count = size();
    else if (key == "vocab_max_size") vocab_max_size = size();
    else if (key == "d_model") encoder.d_model = size();
    else if (key == "n_layers") encoder.n_layers = size();
    else if (key == "n_heads") encoder.n_heads = size();
    else if (key == "d_ff") encoder.d_ff = size();
    else if (key == "max_seq_len") encoder.max_seq_len = size();
    else if (key == "pooling") encoder.pooling = parse_pooling(value);
    else if (key == "method") method = parse_dropout_method(value);
    else if (key == "dropout_rate") dropout_rate = real();
    else if (key == "dropout_low") dropout_low = real();
    else if (key == "dropout_high") dropout_high = real();
    else if (key == "rate_scope") rate_scope = parse_rate_scope(value);
    else if (key == "scaling") scaling = parse_scaling(value);
    else if (key == "temperature") loss.temperature = real();
    else if (key == "denominator") loss.denominator = parse_denominator_mode(value);
    else if (key == "optimizer") optimizer.kind = parse_optimizer_kind(value);
    else if (key == "learning_rate") optimizer.learning_rate = real();
    else if (key == "beta1") optimizer.beta1 = real();
    else if (key == "beta2") optimizer.beta2 = real();
    else if (key == "adam_eps") optimizer.eps = real();
    else if (key == "batch_size") batch_size = size();
    else if (key == "steps") steps = size();
    else if (key == "epochs") epochs = size();
    else if (key == "eval_every") eval_every = size();
    else if (key == "seed") seed = parse_u64(key, value);
    else if (key == "output_dir") output_dir = value;
    else throw ConfigError("unknown configuration key '" + key + "'");
}

TrainConfig TrainConfig::parse(std::string_view text, const fs::path& base_dir, const std::string& source) {
    TrainConfig c;
    for (const auto& e : parse_key_values(text, source)) {
        try {
            c.set(e.key, e.value);
        } catch (const ConfigError& err) {
            throw ConfigError(source + ":" + std::to_string(e.line) + ": " + err.what());
        }
    }
    auto resolve = [&](fs::path& p) {
        if (!p.empty() && p.is_relative() && !base_dir.empty()) p = base_dir / p;
    };
    resolve(c.corpus);
    for (auto& [name, path] : c.sts) resolve(path);
    resolve(c.output_dir);
    return c;
}

TrainConfig TrainConfig::load(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return parse(os.str(), path.parent_path(), path.string());
}

namespace {

std::string results_text(const TrainConfig& c) {
    std::ostringstream os;
    os << "corpus = " << c.corpus.string() << "\n";
    for (const auto& [name, path] : c.sts) os << "sts." << name << " = " << path.string() << "\n";
    os << "vocab_min_count = " << c.vocab_min_count << "\n"
       << "vocab_max_size = " << c.vocab_max_size << "\n"
       << "d_model = " << c.encoder.d_model << "\n"
       << "n_layers = " << c.encoder.n_layers << "\n"
       << "n_heads = " << c.encoder.n_heads << "\n"
       << "d_ff = " << c.encoder.d_ff << "\n"
       << "max_seq_len = " << c.encoder.max_seq_len << "\n"
       << "pooling = " << to_string(c.encoder.pooling) << "\n"
       << "method = " << to_string(c.method) << "\n"
       << "dropout_rate = " << format_double(c.dropout_rate) << "\n"
       << "dropout_low = " << format_double(c.dropout_low) << "\n"
       << "dropout_high = " << format_double(c.dropout_high) << "\n"
       << "rate_scope = " << to_string(c.rate_scope) << "\n"
       << "scaling = " << to_string(c.scaling) << "\n"
       << "temperature = " << format_double(c.loss.temperature) << "\n"
       << "denominator = " << to_string(c.loss.denominator) << "\n"
       << "optimizer = " << to_string(c.optimizer.kind) << "\n"
       << "learning_rate = " << format_double(c.optimizer.learning_rate) << "\n"
       << "beta1 = " << format_double(c.optimizer.beta1) << "\n"
       << "beta2 = " << format_double(c.optimizer.beta2) << "\n"
       << "adam_eps = " << format_double(c.optimizer.eps) << "\n"
       << "batch_size = " << c.batch_size << "\n"
       << "steps = " << c.steps << "\n"
       << "epochs = " << c.epochs << "\n"
       << "eval_every = " << c.eval_every << "\n"
       << "seed = " << c.seed << "\n";
    return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

}  // namespace

std::string TrainConfig::to_text() const { return results_text(*this) + "output_dir = " + output_dir.string() + "\n"; }

std::string TrainConfig::fingerprint() const { return sscse::fingerprint(results_text(*this)); }

DropoutSpec TrainConfig::dropout_spec() const {
    DropoutSpec spec;
    spec.rate_scope = rate_scope;
    spec.scaling = scaling;
    spec.sentence_wise = method == DropoutMethod::sampled_sentence_wise;
    spec.distribution = method == DropoutMethod::fixed ? DropoutDistribution::degenerate(dropout_rate)
                                                       : DropoutDistribution::uniform(dropout_low, dropout_high);
    return spec;
}

EncoderConfig TrainConfig::encoder_config(std::size_t vocab_size) const {
    EncoderConfig c = encoder;
    c.vocab_size = vocab_size;
    c.dropout = dropout_spec();
    c.validate();
    return c;
}

void TrainConfig::validate(bool check_paths) const {
    (void)dropout_spec();  // rate range checks
    encoder_config(std::max<std::size_t>(encoder.vocab_size, 2));
    loss.validate();
    optimizer.validate();
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (steps < 1 && epochs < 1) throw ConfigError("either steps or epochs must be positive");
    if (vocab_min_count < 1) throw ConfigError("vocab_min_count must be at least 1");
    if (vocab_max_size < 3) throw ConfigError("vocab_max_size must be at least 3");
    if (!check_paths) return;
    if (corpus.empty()) throw ConfigError("corpus path is required");
    if (!fs::exists(corpus)) throw ConfigError("corpus file does not exist: " + corpus.string());
    for (const auto& [name, path] : sts) {
        if (!fs::exists(path)) throw ConfigError("STS file for '" + name + "' does not exist: " + path.string());
    }
}

TrainingData TrainingData::load(const TrainConfig& config) {
    config.validate(true);
    TrainingData data;
    data.corpus = read_corpus(config.corpus);
    for (const auto& [name, path] : config.sts) data.sts[name] = parse_sts_tsv(path);
    return data;
}

std::string RunRecord::loss_log_csv() const {
    std::string out = "step,loss,mean_rate\n";
    for (const auto& s : steps) {
        out += std::to_string(s.step) + "," + format_double(s.loss) + "," + format_double(s.mean_rate) + "\n";
    }
    return out;
}

std::string RunRecord::to_json() const {
    nlohmann::ordered_json j;
    j["steps"] = steps.size();
    if (!steps.empty()) {
        j["first_loss"] = steps.front().loss;
        j["final_loss"] = steps.back().loss;
        j["first_positive_cosine"] = steps.front().positive_cosine;
        j["final_positive_cosine"] = steps.back().positive_cosine;
    }
    j["evaluations"] = nlohmann::ordered_json::array();
    for (const auto& [step, report] : evaluations) {
        j["evaluations"].push_back({{"step", step}, {"aggregate", report.aggregate}});
    }
    if (final_report) j["final_aggregate"] = final_report->aggregate;
    j["wall_clock_seconds"] = wall_clock_seconds;
    j["checkpoint"] = checkpoint.string();
    return j.dump(2) + "\n";
}

RunRecord train(const TrainConfig& config, const TrainingData& data, const TrainOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    config.validate(false);
    if (data.corpus.empty()) throw DataError("training corpus is empty");

    RunRecord record;
    record.vocab = Vocabulary::build(data.corpus, config.vocab_min_count, config.vocab_max_size);
    const Vocabulary& vocab = *record.vocab;
    record.encoder = config.encoder_config(vocab.size());
    const EncoderConfig& enc = record.encoder;

    const RngStream root(config.seed);
    record.weights = EncoderWeights::initialize(enc, root.fork(StreamPurpose::init));
    EncoderWeights& weights = record.weights;
    Optimizer optimizer(config.optimizer, weights.parameters());

    std::vector<std::vector<std::int32_t>> sequences;
    for (const auto& line : data.corpus) sequences.push_back(tokenize(line, vocab, enc.max_seq_len));
    const std::size_t per_epoch = (sequences.size() + config.batch_size - 1) / config.batch_size;
    const std::size_t total_steps = config.epochs > 0 ? config.epochs * per_epoch : config.steps;
    const Tokenizer tokenizer{vocab, enc.max_seq_len};

    const fs::path out_dir = config.output_dir;
    if (options.write_outputs) {
        fs::create_directories(out_dir);
        vocab.save(out_dir / "vocab.txt");
        write_text(out_dir / "config.txt", config.to_text());
    }

    std::vector<Batch> batches;
    std::size_t cursor = 0, epoch = 0;
    double last_finite = 0.0;
    for (std::size_t step = 1; step <= total_steps; ++step) {
        if (cursor == batches.size()) {
            batches = make_batches(sequences, config.batch_size,
                                   root.fork(StreamPurpose::shuffle).fork(StreamAxis::index, epoch++));
            cursor = 0;
        }
        const Batch& batch = batches[cursor++];

        Graph graph;
        const auto pair =
            dual_forward(graph, batch, weights, enc, root.fork(StreamPurpose::dropout).fork(StreamAxis::step, step));
        const Tensor loss = info_nce_loss(graph, pair.h, pair.h_plus, config.loss);
        const double value = loss.item();
        if (!std::isfinite(value)) throw DivergenceError(step, last_finite);
        last_finite = value;
        graph.backward(loss);
        optimizer.step();
        optimizer.zero_grad();

        auto rates = pair.first.all_rates();
        const auto second = pair.second.all_rates();
        rates.insert(rates.end(), second.begin(), second.end());
        double rate_sum = 0.0;
        for (double r : rates) rate_sum += r;
        record.steps.push_back({step, value, rates.empty() ? 0.0 : rate_sum / static_cast<double>(rates.size()),
                                mean_positive_cosine(pair.h, pair.h_plus)});

        if (options.verbose && (step % 50 == 0 || step == 1)) {
            std::cerr << "step " << step << "/" << total_steps << " loss " << value << "\n";
        }
        if (config.eval_every > 0 && step % config.eval_every == 0 && step != total_steps) {
            if (!data.sts.empty()) {
                record.evaluations.emplace_back(
                    step, evaluate(weights, enc, data.sts, tokenizer, config.seed, config.fingerprint()));
            }
            if (options.write_outputs) {
                save_checkpoint(out_dir / ("checkpoint_step" + std::to_string(step) + ".bin"), enc, weights);
            }
        }
    }

    if (!data.sts.empty()) {
        record.final_report = evaluate(weights, enc, data.sts, tokenizer, config.seed, config.fingerprint());
        record.evaluations.emplace_back(total_steps, *record.final_report);
    }
    record.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (options.write_outputs) {
        record.checkpoint = out_dir / "checkpoint.bin";
        save_checkpoint(record.checkpoint, enc, weights);
        write_text(out_dir / "loss_log.csv", record.loss_log_csv());
        if (record.final_report) record.final_report->write(out_dir / "eval_report.json", out_dir / "eval_report.csv");
        write_text(out_dir / "run.json", record.to_json());
    }
    return record;
}

RunRecord train(const TrainConfig& config) { return train(config, TrainingData::load(config)); }

GradCheckReport model_grad_check(const TrainConfig& config, const std::vector<std::string>& corpus,
                                 const ModelGradCheckOptions& options) {
    const std::size_t vocab_size =
        corpus.empty() ? 16 : Vocabulary::build(corpus, config.vocab_min_count, config.vocab_max_size).size();
    EncoderConfig enc = config.encoder_config(vocab_size);
    if (enc.max_seq_len < 4) throw ConfigError("gradcheck needs max_seq_len >= 4");
    const bool dropout = options.dropout_rate > 0.0;
    enc.dropout = DropoutSpec{};
    enc.dropout.distribution = DropoutDistribution::degenerate(options.dropout_rate);
    enc.dropout.rate_scope = RateScope::per_forward;

    const RngStream root(config.seed);
    const EncoderWeights weights = EncoderWeights::initialize(enc, root.fork(StreamPurpose::init));
    const std::size_t usable = vocab_size - Vocabulary::kReserved;
    std::vector<std::vector<std::int32_t>> rows(2);
    for (std::size_t t = 0; t < 4; ++t) rows[0].push_back(static_cast<std::int32_t>(2 + t % usable));
    for (std::size_t t = 0; t < 3; ++t) rows[1].push_back(static_cast<std::int32_t>(2 + (4 + 3 * t) % usable));
    const Batch batch = Batch::from_sequences(rows);
    const RngStream frozen = root.fork(StreamPurpose::dropout).fork(StreamAxis::step, 0);

    const LossBuilder build = [&](Graph& g) {
        Tensor h, h_plus;
        if (dropout) {
            auto pair = dual_forward(g, batch, weights, enc, frozen);
            h = pair.h;
            h_plus = pair.h_plus;
        } else {
            h = encode(g, batch, weights, enc, frozen, false).embeddings;
            h_plus = encode(g, batch, weights, enc, frozen, false).embeddings;
        }
        Tensor loss = info_nce_loss(g, h, h_plus, config.loss);
        if (options.negative_control) {
            loss = g.custom({loss}, {1}, {loss.item()}, [loss](std::span<const double> grad) {
                Tensor(loss).mutable_grad()[0] += 1.5 * grad[0];
            });
        }
        return loss;
    };
    return grad_check(build, weights.named_parameters(), options.check);
}

}  // namespace sscse
