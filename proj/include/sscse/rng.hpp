// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hierarchical, counter-based random streams.
//
// A stream is identified by a 64-bit root seed and a path of (axis, index)
// components, e.g. (step 12, forward 1, layer 0, site 2, sentence 5). The
// stream key is derived by folding the path through the SplitMix64 finaliser:
//
//   key_0     = mix(seed)
//   key_{n+1} = mix(key_n ^ mix((axis << 56) ^ index) + GAMMA)
//
// and the c-th 64-bit output of a stream is mix(key + (c + 1) * GAMMA), i.e.
// the SplitMix64 sequence seeded with the key. Outputs are random access, so
// a mask element's value depends only on (seed, path, element index), never
// on how many draws happened before it. All arithmetic is on uint64_t, so
// streams are bit-reproducible across platforms.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

namespace sscse {

inline constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

enum class StreamAxis : std::uint8_t {
    purpose = 1,
    step = 2,
    forward = 3,
    layer = 4,
    site = 5,
    sentence = 6,
    index = 7,
};

// Values for StreamAxis::purpose.
enum class StreamPurpose : std::uint64_t {
    init = 1,
    dropout = 2,
    shuffle = 3,
    rate = 4,
    mask = 5,
    synthetic = 6,
};

class RngStream {
public:
    explicit RngStream(std::uint64_t root_seed = 0);

    RngStream fork(StreamAxis axis, std::uint64_t index) const;
    RngStream fork(StreamPurpose purpose) const {
        return fork(StreamAxis::purpose, static_cast<std::uint64_t>(purpose));
    }
    // The stream obtained by replaying this path with the given axes removed.
    RngStream without(std::initializer_list<StreamAxis> axes) const;

    std::uint64_t bits(std::uint64_t counter) const { return splitmix64_mix(key_ + (counter + 1) * kSplitMixGamma); }
    // Uniform deviate in [0, 1) with 53 random mantissa bits.
    double uniform(std::uint64_t counter) const { return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53; }

    std::uint64_t root_seed() const noexcept { return root_; }
    std::uint64_t key() const noexcept { return key_; }
    const std::vector<std::pair<StreamAxis, std::uint64_t>>& path() const noexcept { return path_; }
    // Human-readable path, e.g. "seed=7/step=3/forward=1".
    std::string describe() const;

    friend bool operator==(const RngStream& a, const RngStream& b) { return a.root_ == b.root_ && a.key_ == b.key_; }

private:
    std::uint64_t root_;
    std::uint64_t key_;
    std::vector<std::pair<StreamAxis, std::uint64_t>> path_;
};

// Sequential view over a stream for code that wants "next" semantics
// (shuffling, weight initialisation, data generation).
class RngGenerator {
public:
    explicit RngGenerator(RngStream stream) : stream_(std::move(stream)) {}

    std::uint64_t next_u64() { return stream_.bits(counter_++); }
    double next_uniform() { return stream_.uniform(counter_++); }
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }
    // Unbiased integer in [0, n); n must be positive.
    std::uint64_t next_below(std::uint64_t n);

    std::uint64_t consumed() const noexcept { return counter_; }

private:
    RngStream stream_;
    std::uint64_t counter_ = 0;
};

// Fisher-Yates shuffle driven by a generator (std::shuffle's algorithm is
// implementation-defined, which would break cross-platform reproducibility).
template <typename T>
void shuffle_in_place(std::vector<T>& items, RngGenerator& gen) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(gen.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace sscse
