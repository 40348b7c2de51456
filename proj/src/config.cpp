// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sscse/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "sscse/errors.hpp"

namespace sscse {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<ConfigEntry> parse_key_values(std::string_view text, const std::string& source) {
    std::vector<ConfigEntry> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(n) + ": expected 'key = value'");
        }
        ConfigEntry e{trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)), n};
        if (e.key.empty()) throw ConfigError(source + ":" + std::to_string(n) + ": empty key");
        for (const auto& prev : out) {
            if (prev.key == e.key) {
                throw ConfigError(source + ":" + std::to_string(n) + ": key '" + e.key + "' already set on line " +
                                  std::to_string(prev.line));
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end || value.empty() || !std::isfinite(out)) {
        throw ConfigError(key + ": '" + value + "' is not a finite number");
    }
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end || value.empty()) {
        throw ConfigError(key + ": '" + value + "' is not a non-negative integer");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key + ": '" + value + "' is not a boolean (true/false)");
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::string fingerprint(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    return out;
}

}  // namespace sscse
