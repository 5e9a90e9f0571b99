// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fixcert {

/// @brief Matrix is singular or too badly conditioned to invert reliably.
class SingularMatrix : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// @brief An iterative method did not reach its tolerance.
class NonConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// @brief Operand dimensions are inconsistent.
class ShapeMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// @brief A ReLU slope outside [0, 1] was supplied.
class InvalidSlope : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// @brief Malformed model or dataset file.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t line = 0, std::string field = {})
        : std::runtime_error(msg), line_(line), field_(std::move(field)) {}

    std::size_t line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

} // namespace fixcert
