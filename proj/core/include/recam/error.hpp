// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace recam {

enum class ErrorKind {
    InvalidPose,
    BehindCamera,
    InvalidParams,
    Curation,
    CorruptContainer,
    Io,
    Config,
    Numeric,
    IncompatibleConfig,
    Usage,
};

const char* to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. The kind is what
/// callers switch on; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace recam
