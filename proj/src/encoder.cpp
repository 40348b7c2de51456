// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sscse/encoder.hpp"

#include <cmath>
#include <map>

#include "sscse/errors.hpp"

namespace sscse {

namespace {

// Added to attention scores of padded keys; exp() of it underflows to 0.
constexpr double kMaskedScore = -1e30;

Tensor uniform_param(const Shape& shape, double bound, RngGenerator gen) {
    Tensor t = Tensor::zeros(shape, true);
    for (double& v : t.mutable_data()) v = gen.next_uniform(-bound, bound);
    return t;
}

Tensor linear(Graph& g, const Tensor& x, const Tensor& weight, const Tensor& bias) {
    return g.add(g.matmul(x, weight), bias);
}

template <typename Fn>
void for_each_layer_param(LayerWeights& l, Fn&& fn) {
    fn("attention.query.weight", l.query_weight);
    fn("attention.query.bias", l.query_bias);
    fn("attention.key.weight", l.key_weight);
    fn("attention.key.bias", l.key_bias);
    fn("attention.value.weight", l.value_weight);
    fn("attention.value.bias", l.value_bias);
    fn("attention.output.weight", l.output_weight);
    fn("attention.output.bias", l.output_bias);
    fn("attention_norm.gain", l.attention_norm_gain);
    fn("attention_norm.bias", l.attention_norm_bias);
    fn("ffn.in.weight", l.ffn_in_weight);
    fn("ffn.in.bias", l.ffn_in_bias);
    fn("ffn.out.weight", l.ffn_out_weight);
    fn("ffn.out.bias", l.ffn_out_bias);
    fn("ffn_norm.gain", l.ffn_norm_gain);
    fn("ffn_norm.bias", l.ffn_norm_bias);
}

template <typename Fn>
void for_each_param(EncoderWeights& w, Fn&& fn) {
    fn(std::string("token_embedding"), w.token_embedding);
    fn(std::string("position_embedding"), w.position_embedding);
    fn(std::string("embedding_norm.gain"), w.embedding_norm_gain);
    fn(std::string("embedding_norm.bias"), w.embedding_norm_bias);
    for (std::size_t i = 0; i < w.layers.size(); ++i) {
        const std::string prefix = "layers." + std::to_string(i) + ".";
        for_each_layer_param(w.layers[i], [&](const char* name, Tensor& t) { fn(prefix + name, t); });
    }
}

// Expected shape and init bound (0 = zeros, <0 = ones) for every parameter.
struct ParamSpec {
    Shape shape;
    double bound;
};

EncoderWeights shaped(const EncoderConfig& c, const std::function<Tensor(const std::string&, const ParamSpec&)>& make) {
    const double d = static_cast<double>(c.d_model);
    const double ff = static_cast<double>(c.d_ff);
    const double emb_bound = 1.0 / std::sqrt(d);
    EncoderWeights w;
    w.token_embedding = make("token_embedding", {{c.vocab_size, c.d_model}, emb_bound});
    w.position_embedding = make("position_embedding", {{c.max_seq_len, c.d_model}, emb_bound});
    w.embedding_norm_gain = make("embedding_norm.gain", {{c.d_model}, -1.0});
    w.embedding_norm_bias = make("embedding_norm.bias", {{c.d_model}, 0.0});
    for (std::size_t i = 0; i < c.n_layers; ++i) {
        const std::string p = "layers." + std::to_string(i) + ".";
        LayerWeights l;
        const ParamSpec square{{c.d_model, c.d_model}, 1.0 / std::sqrt(d)};
        const ParamSpec bias_d{{c.d_model}, 0.0};
        const ParamSpec gain_d{{c.d_model}, -1.0};
        l.query_weight = make(p + "attention.query.weight", square);
        l.query_bias = make(p + "attention.query.bias", bias_d);
        l.key_weight = make(p + "attention.key.weight", square);
        l.key_bias = make(p + "attention.key.bias", bias_d);
        l.value_weight = make(p + "attention.value.weight", square);
        l.value_bias = make(p + "attention.value.bias", bias_d);
        l.output_weight = make(p + "attention.output.weight", square);
        l.output_bias = make(p + "attention.output.bias", bias_d);
        l.attention_norm_gain = make(p + "attention_norm.gain", gain_d);
        l.attention_norm_bias = make(p + "attention_norm.bias", bias_d);
        l.ffn_in_weight = make(p + "ffn.in.weight", {{c.d_model, c.d_ff}, 1.0 / std::sqrt(d)});
        l.ffn_in_bias = make(p + "ffn.in.bias", {{c.d_ff}, 0.0});
        l.ffn_out_weight = make(p + "ffn.out.weight", {{c.d_ff, c.d_model}, 1.0 / std::sqrt(ff)});
        l.ffn_out_bias = make(p + "ffn.out.bias", bias_d);
        l.ffn_norm_gain = make(p + "ffn_norm.gain", gain_d);
        l.ffn_norm_bias = make(p + "ffn_norm.bias", bias_d);
        w.layers.push_back(std::move(l));
    }
    return w;
}

}  // namespace

std::string to_string(Pooling pooling) {
    return pooling == Pooling::mean_over_tokens ? "mean_over_tokens" : "first_token";
}

Pooling parse_pooling(const std::string& text) {
    if (text == "mean_over_tokens") return Pooling::mean_over_tokens;
    if (text == "first_token") return Pooling::first_token;
    throw ConfigError("unknown pooling '" + text + "' (expected mean_over_tokens or first_token)");
}

void EncoderConfig::validate() const {
    if (vocab_size < 2) throw ConfigError("vocab_size must be at least 2 (PAD and UNK)");
    if (d_model < 2 || n_layers < 1 || n_heads < 1 || d_ff < 1) {
        throw ConfigError("d_model >= 2, n_layers >= 1, n_heads >= 1 and d_ff >= 1 are required");
    }
    if (d_model % n_heads != 0) {
        throw ConfigError("d_model (" + std::to_string(d_model) + ") must be divisible by n_heads (" +
                          std::to_string(n_heads) + ")");
    }
    if (max_seq_len < 1) throw ConfigError("max_seq_len must be at least 1");
}

EncoderWeights EncoderWeights::initialize(const EncoderConfig& config, const RngStream& init_stream) {
    config.validate();
    std::uint64_t index = 0;
    return shaped(config, [&](const std::string&, const ParamSpec& spec) {
        RngGenerator gen(init_stream.fork(StreamAxis::index, index++));
        if (spec.bound > 0.0) return uniform_param(spec.shape, spec.bound, gen);
        return Tensor::full(spec.shape, spec.bound < 0.0 ? 1.0 : 0.0, true);
    });
}

EncoderWeights EncoderWeights::from_named(const EncoderConfig& config, const std::vector<NamedTensor>& tensors) {
    config.validate();
    std::map<std::string, Tensor> by_name;
    for (const auto& nt : tensors) {
        if (!by_name.emplace(nt.name, nt.tensor).second) throw LoadError("duplicate tensor '" + nt.name + "'");
    }
    std::size_t used = 0;
    auto w = shaped(config, [&](const std::string& name, const ParamSpec& spec) {
        const auto it = by_name.find(name);
        if (it == by_name.end()) throw LoadError("missing tensor '" + name + "'");
        if (it->second.shape() != spec.shape) {
            throw LoadError("tensor '" + name + "' has shape " + shape_to_string(it->second.shape()) + ", expected " +
                            shape_to_string(spec.shape));
        }
        ++used;
        Tensor t = it->second.clone();
        t.clear_grad();
        t.set_requires_grad(true);
        return t;
    });
    if (used != by_name.size()) throw LoadError("unexpected extra tensors for this configuration");
    return w;
}

std::vector<NamedTensor> EncoderWeights::named_parameters() const {
    std::vector<NamedTensor> out;
    for_each_param(const_cast<EncoderWeights&>(*this),
                   [&](const std::string& name, Tensor& t) { out.push_back({name, t}); });
    return out;
}

std::vector<Tensor> EncoderWeights::parameters() const {
    std::vector<Tensor> out;
    for (auto& nt : named_parameters()) out.push_back(nt.tensor);
    return out;
}

EncoderWeights EncoderWeights::clone() const {
    EncoderWeights copy = *this;
    for_each_param(copy, [](const std::string&, Tensor& t) { t = t.clone(); });
    return copy;
}

void EncoderWeights::zero_grad() {
    for_each_param(*this, [](const std::string&, Tensor& t) { t.zero_grad(); });
}

void EncoderWeights::validate(const EncoderConfig& config) const {
    // from_named performs every shape check.
    (void)from_named(config, named_parameters());
    for (const auto& nt : named_parameters()) {
        if (!nt.tensor.all_finite()) throw DataError("parameter '" + nt.name + "' holds non-finite values");
    }
}

Tensor pool(Graph& graph, const Tensor& hidden, std::span<const std::size_t> lengths, Pooling mode) {
    for (std::size_t len : lengths) {
        if (len == 0) throw DataError("cannot pool a zero-length sentence");
    }
    if (mode == Pooling::first_token) return graph.select_position(hidden, 0);
    return graph.masked_mean(hidden, lengths);
}

EncodeResult encode(Graph& g, const Batch& batch, const EncoderWeights& w, const EncoderConfig& config,
                    const RngStream& stream, bool training) {
    batch.validate();
    if (batch.width > config.max_seq_len) {
        throw DataError("sequence length " + std::to_string(batch.width) + " exceeds max_seq_len " +
                        std::to_string(config.max_seq_len));
    }
    for (std::int32_t id : batch.token_ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= config.vocab_size) {
            throw DataError("token id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(config.vocab_size));
        }
    }
    const std::size_t N = batch.size, T = batch.width, d = config.d_model, H = config.n_heads, dh = d / H;

    std::vector<std::int32_t> positions(N * T);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t t = 0; t < T; ++t) positions[i * T + t] = static_cast<std::int32_t>(t);

    Tensor x = g.add(g.embedding(w.token_embedding, batch.token_ids), g.embedding(w.position_embedding, positions));
    x = g.layer_norm(g.reshape(x, {N, T, d}), w.embedding_norm_gain, w.embedding_norm_bias);

    Tensor key_bias = Tensor::zeros({N * H, T, T});
    {
        auto kb = key_bias.mutable_data();
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t q = 0; q < T; ++q)
                    for (std::size_t k = batch.lengths[i]; k < T; ++k) kb[((i * H + h) * T + q) * T + k] = kMaskedScore;
    }
    const double score_scale = 1.0 / std::sqrt(static_cast<double>(dh));

    auto heads = [&](const Tensor& t) { return g.reshape(g.swap_axes12(g.reshape(t, {N, T, H, dh})), {N * H, T, dh}); };

    EncodeResult result;
    auto drop = [&](const Tensor& t, std::size_t layer, DropoutSite site, const char* name) {
        const RngStream s = stream.fork(StreamAxis::layer, layer).fork(StreamAxis::site, static_cast<std::size_t>(site));
        auto r = apply_dropout(g, t, config.dropout, s, training, "layers." + std::to_string(layer) + "." + name);
        result.masks.append(std::move(r.record));
        return r.output;
    };

    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        const LayerWeights& lw = w.layers[l];
        const Tensor q = heads(linear(g, x, lw.query_weight, lw.query_bias));
        const Tensor k = heads(linear(g, x, lw.key_weight, lw.key_bias));
        const Tensor v = heads(linear(g, x, lw.value_weight, lw.value_bias));
        const Tensor scores = g.add(g.scale(g.bmm(q, k, true), score_scale), key_bias);
        const Tensor ctx_heads = g.bmm(g.softmax_rows(scores), v);
        const Tensor ctx = g.reshape(g.swap_axes12(g.reshape(ctx_heads, {N, H, T, dh})), {N, T, d});

        const Tensor attn = linear(g, drop(ctx, l, DropoutSite::attention_output, "attention_output"),
                                   lw.output_weight, lw.output_bias);
        x = g.layer_norm(g.add(x, attn), lw.attention_norm_gain, lw.attention_norm_bias);

        Tensor f = g.gelu(linear(g, drop(x, l, DropoutSite::ffn_input, "ffn_input"), lw.ffn_in_weight, lw.ffn_in_bias));
        f = linear(g, drop(f, l, DropoutSite::ffn_hidden, "ffn_hidden"), lw.ffn_out_weight, lw.ffn_out_bias);
        x = g.layer_norm(g.add(x, f), lw.ffn_norm_gain, lw.ffn_norm_bias);
    }

    result.hidden = x;
    result.embeddings = pool(g, x, batch.lengths, config.pooling);
    return result;
}

DualForwardResult dual_forward(Graph& graph, const Batch& batch, const EncoderWeights& weights,
                               const EncoderConfig& config, const RngStream& stream) {
    auto first = encode(graph, batch, weights, config, stream.fork(StreamAxis::forward, 0), true);
    auto second = encode(graph, batch, weights, config, stream.fork(StreamAxis::forward, 1), true);
    return {first.embeddings, second.embeddings, std::move(first.masks), std::move(second.masks)};
}

std::vector<std::vector<double>> embed_sequences(const std::vector<std::vector<std::int32_t>>& sequences,
                                                 const EncoderWeights& weights, const EncoderConfig& config,
                                                 std::size_t chunk_size) {
    if (chunk_size < 1) throw ContractError("chunk_size must be at least 1");
    std::vector<std::vector<double>> out;
    out.reserve(sequences.size());
    const RngStream unused(0);
    for (std::size_t start = 0; start < sequences.size(); start += chunk_size) {
        const std::size_t end = std::min(sequences.size(), start + chunk_size);
        const std::vector<std::vector<std::int32_t>> chunk(sequences.begin() + static_cast<std::ptrdiff_t>(start),
                                                          sequences.begin() + static_cast<std::ptrdiff_t>(end));
        Graph g(Graph::Mode::no_grad);
        const auto emb = encode(g, Batch::from_sequences(chunk), weights, config, unused, false).embeddings;
        const auto data = emb.data();
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            out.emplace_back(data.begin() + static_cast<std::ptrdiff_t>(i * config.d_model),
                             data.begin() + static_cast<std::ptrdiff_t>((i + 1) * config.d_model));
        }
    }
    return out;
}

}  // namespace sscse
