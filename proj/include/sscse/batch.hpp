// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace sscse {

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;

// Row-major [size x width] token matrix. Row i holds lengths[i] real tokens
// followed by PAD; attention_mask is 1 exactly on the real tokens.
struct Batch {
    std::size_t size = 0;
    std::size_t width = 0;
    std::vector<std::int32_t> token_ids;
    std::vector<std::uint8_t> attention_mask;
    std::vector<std::size_t> lengths;

    // Pads every sequence to max(pad_to, longest sequence).
    static Batch from_sequences(const std::vector<std::vector<std::int32_t>>& sequences, std::size_t pad_to = 0);

    std::int32_t token(std::size_t row, std::size_t position) const { return token_ids[row * width + position]; }

    // Throws DataError when the shape/mask/length invariants do not hold.
    void validate() const;
};

}  // namespace sscse
