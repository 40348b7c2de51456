// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat "key = value" configuration text. '#' starts a comment; blank lines
// are ignored. Values are trimmed; keys may contain dots.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sscse {

struct ConfigEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

std::vector<ConfigEntry> parse_key_values(std::string_view text, const std::string& source = "<config>");

// Strict scalar parsers; throw ConfigError naming `key` on failure.
double parse_double(const std::string& key, const std::string& value);
std::uint64_t parse_u64(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);

// Shortest text that parses back to the identical double.
std::string format_double(double value);

// 64-bit FNV-1a of the text as 16 lowercase hex digits.
std::string fingerprint(std::string_view text);

}  // namespace sscse
