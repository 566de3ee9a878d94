// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#pragma once

#include <stdexcept>
#include <string>

namespace empathy {

/// Broad failure classes. The CLI maps these onto exit codes
/// (validation -> 1, io -> 2).
enum class ErrorKind { validation, io, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

/// Raised when training produces a non-finite loss, gradient or objective.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

}  // namespace empathy
