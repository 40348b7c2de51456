// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "fixtures.hpp"
#include "sscse/ablation.hpp"
#include "sscse/checkpoint.hpp"
#include "sscse/contrastive.hpp"
#include "sscse/errors.hpp"
#include "sscse/sts_eval.hpp"
#include "sscse/trainer.hpp"

using namespace sscse;
using namespace sscse::testing;
using Catch::Matchers::WithinAbs;

namespace {

// A smaller setup than the acceptance run so that these tests stay quick.
TrainConfig quick_config(const std::filesystem::path& out, std::uint64_t seed = 1) {
    TrainConfig c = toy_config(out, seed);
    c.encoder.d_model = 8;
    c.encoder.n_heads = 2;
    c.encoder.d_ff = 16;
    c.batch_size = 8;
    c.steps = 12;
    return c;
}

const ToyData& quick_data() {
    static const ToyData toy = make_toy_data(11, 48, 30);
    return toy;
}

bool same_losses(const RunRecord& a, const RunRecord& b) {
    if (a.steps.size() != b.steps.size()) return false;
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        if (std::memcmp(&a.steps[i].loss, &b.steps[i].loss, sizeof(double)) != 0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("config text parsing", "[trainer][config]") {
    const auto c = TrainConfig::parse("corpus = data/c.txt\nsts.dev = d.tsv\nd_model = 16\nmethod = fixed\n"
                                      "dropout_rate = 0.2\nlearning_rate = 5e-4\n",
                                      "/base", "cfg");
    CHECK(c.corpus == std::filesystem::path("/base/data/c.txt"));
    CHECK(c.sts.at("dev") == std::filesystem::path("/base/d.tsv"));
    CHECK(c.encoder.d_model == 16);
    CHECK(c.method == DropoutMethod::fixed);
    CHECK(c.optimizer.learning_rate == 5e-4);
    const auto spec = c.dropout_spec();
    CHECK(spec.distribution.kind() == DropoutDistribution::Kind::degenerate);
    CHECK(spec.distribution.low() == 0.2);
    CHECK_FALSE(spec.sentence_wise);

    const auto round = TrainConfig::parse(c.to_text(), "/elsewhere", "round");
    CHECK(round.to_text() == c.to_text());
    CHECK(round.fingerprint() == c.fingerprint());

    CHECK_THROWS_AS(TrainConfig::parse("d_modle = 16\n", ".", "cfg"), ConfigError);
    CHECK_THROWS_AS(TrainConfig::parse("method = sampled_token_wise\n", ".", "cfg"), ConfigError);
    CHECK_THROWS_AS(TrainConfig::parse("batch_size = -3\n", ".", "cfg"), ConfigError);
}

TEST_CASE("config validation", "[trainer][config]") {
    TrainConfig c;
    CHECK_THROWS_AS(c.validate(true), ConfigError);
    c.corpus = "/nonexistent/corpus.txt";
    CHECK_THROWS_AS(c.validate(true), ConfigError);
    CHECK_NOTHROW(c.validate(false));
    c.dropout_low = 0.3;
    c.dropout_high = 0.1;
    CHECK_THROWS(c.validate(false));
    c = TrainConfig{};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(false), ConfigError);
}

TEST_CASE("sampled methods map to dropout specs", "[trainer]") {
    TrainConfig c;
    c.method = DropoutMethod::sampled;
    CHECK_FALSE(c.dropout_spec().sentence_wise);
    CHECK(c.dropout_spec().distribution.high() == 0.2);
    c.method = DropoutMethod::sampled_sentence_wise;
    CHECK(c.dropout_spec().sentence_wise);
    for (auto m : {DropoutMethod::fixed, DropoutMethod::sampled, DropoutMethod::sampled_sentence_wise}) {
        CHECK(parse_dropout_method(to_string(m)) == m);
    }
}

TEST_CASE("training is deterministic and writes its outputs", "[trainer]") {
    const auto dir = scratch_dir("train_outputs");
    auto cfg = quick_config(dir / "a");
    cfg.eval_every = 5;
    const auto a = train(cfg, quick_data().data);
    cfg.output_dir = dir / "b";
    const auto b = train(cfg, quick_data().data);
    CHECK(same_losses(a, b));
    for (const char* f : {"vocab.txt", "config.txt", "checkpoint.bin", "loss_log.csv", "eval_report.json",
                          "eval_report.csv", "run.json", "checkpoint_step5.bin", "checkpoint_step10.bin"}) {
        CHECK(std::filesystem::exists(dir / "a" / f));
    }
    CHECK(read_bytes(dir / "a" / "checkpoint.bin") == read_bytes(dir / "b" / "checkpoint.bin"));
    CHECK(read_bytes(dir / "a" / "loss_log.csv") == read_bytes(dir / "b" / "loss_log.csv"));
    CHECK(read_bytes(dir / "a" / "loss_log.csv").rfind("step,loss,mean_rate\n1,", 0) == 0);
    CHECK(a.evaluations.size() == 3);
    CHECK(a.steps.size() == 12);
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        CHECK(a.steps[i].step == i + 1);
        CHECK(std::isfinite(a.steps[i].loss));
    }

    const auto other_seed = train(quick_config("unused", 2), quick_data().data, {false, false});
    CHECK_FALSE(same_losses(a, other_seed));
    std::filesystem::remove_all(dir);
}

TEST_CASE("collapsed sampled training equals fixed-rate training", "[trainer]") {
    auto fixed = quick_config("unused");
    fixed.method = DropoutMethod::fixed;
    fixed.dropout_rate = 0.15;
    auto sampled = fixed;
    sampled.method = DropoutMethod::sampled;
    sampled.dropout_low = sampled.dropout_high = 0.15;
    const auto a = train(fixed, quick_data().data, {false, false});
    const auto b = train(sampled, quick_data().data, {false, false});
    CHECK(same_losses(a, b));
}

TEST_CASE("checkpoint round trip preserves evaluation", "[trainer][checkpoint]") {
    const auto dir = scratch_dir("train_ckpt");
    const auto run = train(quick_config(dir), quick_data().data);
    const auto ck = load_checkpoint(run.checkpoint);
    const auto vocab = Vocabulary::load(dir / "vocab.txt");
    const Tokenizer before{*run.vocab, run.encoder.max_seq_len}, after{vocab, ck.config.max_seq_len};
    const auto r1 = evaluate(run.weights, run.encoder, quick_data().data.sts, before, 1, "x");
    const auto r2 = evaluate(ck.weights, ck.config, quick_data().data.sts, after, 1, "x");
    CHECK(r1.to_json() == r2.to_json());
    CHECK(r1.to_json() == run.final_report->to_json().replace(run.final_report->to_json().find(run.final_report->config_fingerprint), run.final_report->config_fingerprint.size(), "x"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("mean sampled rate converges to the distribution mean", "[trainer][property]") {
    auto cfg = quick_config("unused");
    cfg.method = DropoutMethod::sampled;
    cfg.steps = 60;
    cfg.dropout_low = 0.05;
    cfg.dropout_high = 0.35;
    const auto run = train(cfg, quick_data().data, {false, false});
    double total = 0.0;
    for (const auto& s : run.steps) total += s.mean_rate;
    const double mean = total / static_cast<double>(run.steps.size());
    const double sigma = (0.35 - 0.05) / std::sqrt(12.0);
    CHECK(std::abs(mean - 0.2) <= 3.0 * sigma / std::sqrt(static_cast<double>(run.steps.size())));
}

TEST_CASE("divergence aborts with the step and last finite loss", "[trainer]") {
    auto cfg = quick_config("unused");
    cfg.optimizer.learning_rate = 1e300;
    try {
        train(cfg, quick_data().data, {false, false});
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK(e.step() >= 2);
        CHECK(std::isfinite(e.last_finite_loss()));
    }
}

TEST_CASE("trained positives beat independent random encoders", "[trainer]") {
    auto cfg = quick_config("unused");
    cfg.steps = 30;
    const auto run = train(cfg, quick_data().data, {false, false});
    const auto& enc = run.encoder;
    std::vector<std::vector<std::int32_t>> seqs;
    for (std::size_t i = 0; i < 16; ++i) seqs.push_back(tokenize(quick_data().data.corpus[i], *run.vocab, 32));
    const auto batch = Batch::from_sequences(seqs);
    Graph g(Graph::Mode::no_grad);
    const auto pair = dual_forward(g, batch, run.weights, enc, RngStream(5).fork(StreamPurpose::dropout));
    const auto w1 = EncoderWeights::initialize(enc, RngStream(101).fork(StreamPurpose::init));
    const auto w2 = EncoderWeights::initialize(enc, RngStream(102).fork(StreamPurpose::init));
    const auto e1 = encode(g, batch, w1, enc, RngStream(1), true).embeddings;
    const auto e2 = encode(g, batch, w2, enc, RngStream(2), true).embeddings;
    CHECK(mean_positive_cosine(pair.h, pair.h_plus) > mean_positive_cosine(e1, e2));
}

TEST_CASE("model gradient check", "[trainer][gradcheck]") {
    TrainConfig cfg;
    cfg.encoder.d_model = 8;
    cfg.encoder.n_heads = 2;
    cfg.encoder.d_ff = 12;
    const auto off = model_grad_check(cfg, {});
    CHECK(off.passed);
    CHECK(off.parameters.size() == 4 + 16 * cfg.encoder.n_layers);

    ModelGradCheckOptions frozen;
    frozen.dropout_rate = 0.2;
    CHECK(model_grad_check(cfg, {}, frozen).passed);

    ModelGradCheckOptions broken;
    broken.negative_control = true;
    const auto bad = model_grad_check(cfg, {}, broken);
    CHECK_FALSE(bad.passed);
    CHECK(bad.worst().max_relative_error > 1e-4);
}

TEST_CASE("summarize_scores semantics", "[ablation]") {
    const auto one = summarize_scores(DropoutMethod::fixed, {0.4}, 3);
    CHECK(one.avg == one.max);
    CHECK(one.n_top == 1);
    CHECK(one.std == 0.0);

    RngGenerator gen(RngStream(3));
    for (int t = 0; t < 100; ++t) {
        std::vector<double> s(7);
        for (auto& v : s) v = gen.next_uniform(-1, 1);
        const auto row = summarize_scores(DropoutMethod::sampled, s, 3);
        const double all = std::accumulate(s.begin(), s.end(), 0.0) / 7.0;
        CHECK(row.avg >= all);
        CHECK(row.max == *std::max_element(s.begin(), s.end()));
        CHECK(row.n_top == 3);
        CHECK(row.n_completed == 7);
    }
    const auto three = summarize_scores(DropoutMethod::fixed, {0.1, 0.2, 0.6}, 3);
    CHECK_THAT(three.avg, WithinAbs(0.3, 1e-15));
    CHECK_THAT(three.std, WithinAbs(std::sqrt(((0.2 * 0.2) + (0.1 * 0.1) + (0.3 * 0.3)) / 2.0), 1e-15));
}

TEST_CASE("ablation table and scheduling independence", "[ablation]") {
    const auto dir = scratch_dir("ablate");
    auto base = quick_config(dir);
    base.steps = 6;
    const std::vector<DropoutMethod> methods{DropoutMethod::fixed, DropoutMethod::sampled_sentence_wise};
    const auto serial = ablate(base, quick_data().data, methods, {1, 2}, {3, 1, false});
    const auto parallel = ablate(base, quick_data().data, methods, {1, 2}, {3, 4, true});
    CHECK(serial.to_csv() == parallel.to_csv());
    CHECK(serial.cells_csv() == parallel.cells_csv());
    CHECK(serial.rows.size() == 2);
    CHECK(std::filesystem::exists(dir / "fixed" / "seed_2" / "checkpoint.bin"));

    auto fixed = base;
    fixed.method = DropoutMethod::fixed;
    const auto standalone = train(fixed, quick_data().data, {false, false});
    CHECK(serial.cells.at(0).method == DropoutMethod::fixed);
    CHECK(serial.cells.at(0).seed == 1);
    CHECK(serial.cells.at(0).final_loss == standalone.steps.back().loss);
    CHECK(serial.cells.at(0).aggregate == standalone.final_report->aggregate);

    const auto single = ablate(base, quick_data().data, {DropoutMethod::sampled}, {4});
    REQUIRE(single.rows.size() == 1);
    CHECK(single.rows[0].avg == single.rows[0].max);
    std::filesystem::remove_all(dir);
}

TEST_CASE("ablation records failed cells and still emits a table", "[ablation]") {
    auto base = quick_config("unused");
    base.optimizer.learning_rate = 1e300;
    const auto table = ablate(base, quick_data().data, {DropoutMethod::fixed}, {1, 2});
    REQUIRE(table.cells.size() == 2);
    for (const auto& c : table.cells) {
        CHECK_FALSE(c.completed);
        CHECK(c.error.find("divergence") != std::string::npos);
    }
    CHECK(table.rows.at(0).n_completed == 0);
    CHECK(table.to_csv().find("fixed") != std::string::npos);

    TrainingData no_sts = quick_data().data;
    no_sts.sts.clear();
    CHECK_THROWS_AS(ablate(base, no_sts, {DropoutMethod::fixed}, {1}), ConfigError);
    CHECK_THROWS(ablate(base, quick_data().data, {}, {1}));
}
