// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0
//
// Define-by-run reverse-mode differentiation.
//
// Every operation executed through a Graph whose inputs require gradients is
// appended to the graph's tape. backward() walks the tape in reverse, which is
// a reverse topological order by construction, and accumulates dLoss/dInput
// into each input's gradient buffer. A graph is single-use: reset() it (or
// make a new one) before building the next loss.
//
// Graphs share no mutable state with each other, so separate graphs over
// separate tensors may be driven from separate threads.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sscse/tensor.hpp"

namespace sscse {

// GELU (tanh approximation) is the only activation.
enum class ElementwiseKind { add, sub, mul, scale, gelu };

class Graph {
public:
    enum class Mode { record, no_grad };

    using BackwardFn = std::function<void(std::span<const double> grad_out)>;

    explicit Graph(Mode mode = Mode::record) : mode_(mode) {}
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // [..., k] x [k, n] -> [..., n]. Leading dimensions are flattened into rows.
    Tensor matmul(const Tensor& a, const Tensor& b);

    // b may equal a's shape or any trailing suffix of it (broadcast over the
    // leading dimensions). `constant` is used by scale only.
    Tensor elementwise(ElementwiseKind kind, const Tensor& a, const Tensor& b = {}, double constant = 1.0);
    Tensor add(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseKind::add, a, b); }
    Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseKind::sub, a, b); }
    Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseKind::mul, a, b); }
    Tensor scale(const Tensor& a, double c) { return elementwise(ElementwiseKind::scale, a, {}, c); }
    Tensor gelu(const Tensor& a) { return elementwise(ElementwiseKind::gelu, a); }

    Tensor log(const Tensor& a);

    Tensor transpose(const Tensor& a);
    Tensor reshape(const Tensor& a, Shape shape);
    // [A, B, C, D] -> [A, C, B, D]
    Tensor swap_axes12(const Tensor& a);
    // [B, m, k] x [B, k, n], or x [B, n, k] transposed when transpose_b.
    Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b = false);

    // Row-wise operations act on the last dimension. Stabilised by subtracting
    // the row maximum.
    Tensor softmax_rows(const Tensor& a);
    Tensor log_softmax_rows(const Tensor& a);
    // Drops the last dimension; a rank-1 input yields shape [1].
    Tensor logsumexp_rows(const Tensor& a);

    Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

    // Gathers rows of table [V, d]; result is [ids.size(), d].
    Tensor embedding(const Tensor& table, std::span<const std::int32_t> ids);

    Tensor l2_normalize_rows(const Tensor& a);
    Tensor rowwise_dot(const Tensor& a, const Tensor& b);
    Tensor diagonal(const Tensor& a);

    // h is [N, T, d]; averages positions [0, lengths[i]) of each sentence.
    Tensor masked_mean(const Tensor& h, std::span<const std::size_t> lengths);
    Tensor select_position(const Tensor& h, std::size_t position);

    Tensor sum(const Tensor& a);
    Tensor mean(const Tensor& a);

    // Records an operation defined by the caller. `backward` must accumulate
    // into the gradients of `inputs` that require them.
    Tensor custom(std::vector<Tensor> inputs, Shape shape, std::vector<double> values, BackwardFn backward);

    void backward(const Tensor& loss);
    void reset();

    bool recording() const noexcept { return mode_ == Mode::record; }
    std::size_t size() const noexcept { return tape_.size(); }
    std::size_t last_backward_visits() const noexcept { return visits_; }

private:
    struct Node {
        Tensor output;
        BackwardFn backward;
    };

    Tensor record(const std::vector<const Tensor*>& inputs, Shape shape, std::vector<double> values,
                  const std::function<BackwardFn(const Tensor& out)>& make_backward);

    Mode mode_;
    std::vector<Node> tape_;
    std::uint64_t next_id_ = 1;
    bool backward_done_ = false;
    std::size_t visits_ = 0;
};

}  // namespace sscse
