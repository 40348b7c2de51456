// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint, all integers little-endian:
//
//   "SSCSE"                       5 bytes
//   version                       u32 (kCheckpointVersion)
//   config length, config text    u32, UTF-8 "key = value" lines
//   tensor count                  u32
//   per tensor:
//     name length, name bytes     u32, UTF-8
//     rank, dims                  u32, rank x u64
//     values                      product(dims) x IEEE-754 binary64

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "sscse/encoder.hpp"

namespace sscse {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "SSCSE";

struct Checkpoint {
    EncoderConfig config;
    EncoderWeights weights;
};

std::string encoder_config_to_text(const EncoderConfig& config);
EncoderConfig encoder_config_from_text(std::string_view text);

std::string serialize_checkpoint(const EncoderConfig& config, const EncoderWeights& weights);
Checkpoint deserialize_checkpoint(std::string_view bytes);

// Writes to a temporary sibling and renames, so readers never see a partial file.
void save_checkpoint(const std::filesystem::path& path, const EncoderConfig& config, const EncoderWeights& weights);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sscse
