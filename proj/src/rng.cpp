// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sscse/rng.hpp"

#include <algorithm>

#include "sscse/errors.hpp"

namespace sscse {

namespace {

std::uint64_t fold(std::uint64_t key, StreamAxis axis, std::uint64_t index) {
    const std::uint64_t component = (static_cast<std::uint64_t>(axis) << 56) ^ index;
    return splitmix64_mix(key ^ (splitmix64_mix(component) + kSplitMixGamma));
}

const char* axis_name(StreamAxis axis) {
    switch (axis) {
        case StreamAxis::purpose: return "purpose";
        case StreamAxis::step: return "step";
        case StreamAxis::forward: return "forward";
        case StreamAxis::layer: return "layer";
        case StreamAxis::site: return "site";
        case StreamAxis::sentence: return "sentence";
        case StreamAxis::index: return "index";
    }
    return "?";
}

}  // namespace

RngStream::RngStream(std::uint64_t root_seed) : root_(root_seed), key_(splitmix64_mix(root_seed)) {}

RngStream RngStream::fork(StreamAxis axis, std::uint64_t index) const {
    RngStream child = *this;
    child.key_ = fold(key_, axis, index);
    child.path_.emplace_back(axis, index);
    return child;
}

RngStream RngStream::without(std::initializer_list<StreamAxis> axes) const {
    RngStream out(root_);
    for (const auto& [axis, index] : path_) {
        if (std::find(axes.begin(), axes.end(), axis) == axes.end()) out = out.fork(axis, index);
    }
    return out;
}

std::string RngStream::describe() const {
    std::string out = "seed=" + std::to_string(root_);
    for (const auto& [axis, index] : path_) {
        out += "/";
        out += axis_name(axis);
        out += "=" + std::to_string(index);
    }
    return out;
}

std::uint64_t RngGenerator::next_below(std::uint64_t n) {
    if (n == 0) throw ContractError("next_below requires a positive bound");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

}  // namespace sscse
