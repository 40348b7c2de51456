// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major float64 tensor with an optional gradient buffer.
//
// A Tensor is a cheap handle: copies share the same storage. Use clone() for
// a deep copy. Leaves created with requires_grad=true are the learnable
// parameters; every other tensor with requires_grad=true was produced by an
// operation recorded on a Graph.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sscse {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

class Graph;

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const noexcept { return impl_ != nullptr; }

    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const;

    std::span<const double> data() const;
    std::span<double> mutable_data();
    double item() const;

    bool requires_grad() const;
    void set_requires_grad(bool flag);

    bool has_grad() const;
    std::span<const double> grad() const;
    // Allocates a zero-filled gradient buffer on first use.
    std::span<double> mutable_grad();
    void zero_grad();
    void clear_grad();

    // Identity of the node within the graph that produced it; 0 for leaves.
    std::uint64_t node_id() const;
    const Graph* graph() const;

    Tensor clone() const;
    bool all_finite() const;

    bool same_storage(const Tensor& other) const noexcept { return impl_ == other.impl_; }

private:
    friend class Graph;

    struct Impl {
        Shape shape;
        std::vector<double> data;
        std::vector<double> grad;
        bool requires_grad = false;
        std::uint64_t node_id = 0;
        const Graph* graph = nullptr;
    };

    explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
    Impl& impl() const;

    std::shared_ptr<Impl> impl_;
};

}  // namespace sscse
