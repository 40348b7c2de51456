// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0
//
// Toy post-LN transformer sentence encoder.
//
//   x = LayerNorm(token_embedding[id] + position_embedding[t])
//   per layer:
//     ctx = MultiHeadAttention(x)               (padded keys masked out)
//     x   = LayerNorm(x + Dropout(ctx) Wo + bo)
//     f   = Dropout(GELU(Dropout(x) W1 + b1)) W2 + b2
//     x   = LayerNorm(x + f)
//   embedding = pool(x)
//
// Dropout sits only in front of the fully connected layers: the attention
// output projection and both feed-forward projections, i.e. three sites per
// layer. Attention probabilities are never dropped.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sscse/batch.hpp"
#include "sscse/dropout.hpp"
#include "sscse/grad_check.hpp"
#include "sscse/graph.hpp"
#include "sscse/rng.hpp"

namespace sscse {

enum class Pooling { mean_over_tokens, first_token };

std::string to_string(Pooling pooling);
Pooling parse_pooling(const std::string& text);

struct EncoderConfig {
    std::size_t vocab_size = 0;
    std::size_t d_model = 32;
    std::size_t n_layers = 2;
    std::size_t n_heads = 4;
    std::size_t d_ff = 64;
    std::size_t max_seq_len = 32;
    Pooling pooling = Pooling::mean_over_tokens;
    DropoutSpec dropout;

    void validate() const;
};

inline constexpr std::size_t kDropoutSitesPerLayer = 3;

enum class DropoutSite : std::size_t { attention_output = 0, ffn_input = 1, ffn_hidden = 2 };

struct LayerWeights {
    Tensor query_weight, query_bias;
    Tensor key_weight, key_bias;
    Tensor value_weight, value_bias;
    Tensor output_weight, output_bias;
    Tensor attention_norm_gain, attention_norm_bias;
    Tensor ffn_in_weight, ffn_in_bias;
    Tensor ffn_out_weight, ffn_out_bias;
    Tensor ffn_norm_gain, ffn_norm_bias;
};

struct EncoderWeights {
    Tensor token_embedding;
    Tensor position_embedding;
    Tensor embedding_norm_gain, embedding_norm_bias;
    std::vector<LayerWeights> layers;

    // Matrices and embedding tables ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
    // with d_model as the fan-in of embedding tables; biases 0, gains 1.
    static EncoderWeights initialize(const EncoderConfig& config, const RngStream& init_stream);
    // Shapes taken from config, values from `tensors` (matched by name).
    static EncoderWeights from_named(const EncoderConfig& config, const std::vector<NamedTensor>& tensors);

    // Stable order; names are used by the checkpoint format.
    std::vector<NamedTensor> named_parameters() const;
    std::vector<Tensor> parameters() const;
    EncoderWeights clone() const;
    void zero_grad();
    void validate(const EncoderConfig& config) const;
};

struct EncodeResult {
    Tensor embeddings;  // [N, d_model]
    Tensor hidden;      // [N, T, d_model], last block output
    MaskRecord masks;
};

// Pools [N, T, d] hidden states into [N, d] using the batch's lengths.
Tensor pool(Graph& graph, const Tensor& hidden, std::span<const std::size_t> lengths, Pooling mode);

// The stream is the forward-level stream; each dropout site uses
// stream.fork(layer, l).fork(site, s).
EncodeResult encode(Graph& graph, const Batch& batch, const EncoderWeights& weights, const EncoderConfig& config,
                    const RngStream& stream, bool training);

struct DualForwardResult {
    Tensor h;
    Tensor h_plus;
    MaskRecord first;
    MaskRecord second;
};

// Two training-mode encodes of the same batch with stream.fork(forward, 0)
// and stream.fork(forward, 1).
DualForwardResult dual_forward(Graph& graph, const Batch& batch, const EncoderWeights& weights,
                               const EncoderConfig& config, const RngStream& stream);

// Eval-mode embeddings for many sequences, encoded in chunks. Row i of the
// result belongs to sequences[i].
std::vector<std::vector<double>> embed_sequences(const std::vector<std::vector<std::int32_t>>& sequences,
                                                 const EncoderWeights& weights, const EncoderConfig& config,
                                                 std::size_t chunk_size = 64);

}  // namespace sscse
