// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sscse/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "sscse/errors.hpp"

namespace sscse {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

namespace {

void check_shape(const Shape& shape) {
    for (std::size_t d : shape) {
        if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_to_string(shape));
    }
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    check_shape(shape);
    auto impl = std::make_shared<Impl>();
    impl->data.assign(shape_numel(shape), value);
    impl->shape = std::move(shape);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    check_shape(shape);
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("shape " + shape_to_string(shape) + " does not match " +
                             std::to_string(values.size()) + " values");
    }
    auto impl = std::make_shared<Impl>();
    impl->shape = std::move(shape);
    impl->data = std::move(values);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

Tensor::Impl& Tensor::impl() const {
    if (!impl_) throw StateError("use of an undefined tensor");
    return *impl_;
}

const Shape& Tensor::shape() const { return impl().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    const auto& s = shape();
    if (axis >= s.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_to_string(s));
    }
    return s[axis];
}

std::size_t Tensor::numel() const { return impl().data.size(); }

std::span<const double> Tensor::data() const { return impl().data; }
std::span<double> Tensor::mutable_data() { return impl().data; }

double Tensor::item() const {
    if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_to_string(shape()));
    return impl().data[0];
}

bool Tensor::requires_grad() const { return impl().requires_grad; }
void Tensor::set_requires_grad(bool flag) { impl().requires_grad = flag; }

bool Tensor::has_grad() const { return !impl().grad.empty(); }
std::span<const double> Tensor::grad() const { return impl().grad; }

std::span<double> Tensor::mutable_grad() {
    auto& i = impl();
    if (i.grad.empty()) i.grad.assign(i.data.size(), 0.0);
    return i.grad;
}

void Tensor::zero_grad() {
    auto& g = impl().grad;
    std::fill(g.begin(), g.end(), 0.0);
}

void Tensor::clear_grad() { impl().grad.clear(); }

std::uint64_t Tensor::node_id() const { return impl().node_id; }
const Graph* Tensor::graph() const { return impl().graph; }

Tensor Tensor::clone() const {
    auto copy = std::make_shared<Impl>();
    copy->shape = impl().shape;
    copy->data = impl().data;
    copy->grad = impl().grad;
    copy->requires_grad = impl().requires_grad;
    return Tensor(std::move(copy));
}

bool Tensor::all_finite() const {
    const auto& i = impl();
    auto finite = [](double v) { return std::isfinite(v); };
    return std::all_of(i.data.begin(), i.data.end(), finite) && std::all_of(i.grad.begin(), i.grad.end(), finite);
}

}  // namespace sscse
