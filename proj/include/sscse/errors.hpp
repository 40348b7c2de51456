// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sscse {

// Every error carries a short machine-readable kind ("dimension", "data", ...)
// so the CLI can print a single parseable line.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

// Incompatible tensor shapes.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& m) : Error("dimension", m) {}
};

// A caller violated a documented precondition.
class ContractError : public Error {
public:
    explicit ContractError(const std::string& m) : Error("contract", m) {}
};

// An object was used in the wrong lifecycle state (e.g. double backward).
class StateError : public Error {
public:
    explicit StateError(const std::string& m) : Error("state", m) {}
};

// Malformed or out-of-range input data.
class DataError : public Error {
public:
    explicit DataError(const std::string& m) : Error("data", m) {}
};

// Unreadable, corrupted or incompatible files.
class LoadError : public Error {
public:
    explicit LoadError(const std::string& m) : Error("load", m) {}
};

// A correlation with a constant argument has no value.
class UndefinedCorrelationError : public Error {
public:
    explicit UndefinedCorrelationError(const std::string& m) : Error("undefined_correlation", m) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& m) : Error("config", m) {}
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(std::size_t step, double last_finite_loss)
        : Error("divergence", "loss became non-finite at step " + std::to_string(step) +
                                  " (last finite loss " + std::to_string(last_finite_loss) + ")"),
          step_(step),
          last_finite_loss_(last_finite_loss) {}

    std::size_t step() const noexcept { return step_; }
    double last_finite_loss() const noexcept { return last_finite_loss_; }

private:
    std::size_t step_;
    double last_finite_loss_;
};

}  // namespace sscse
