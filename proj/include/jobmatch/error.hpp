// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jobmatch {

enum class ErrorKind {
    ingestion,
    conflict,
    spec,
    capacity,
    integrity,
    shape,
    config,
    strategy,
    empty_input,
    training,
    divergence,
    fit,
    undefined_metric,
    degenerate_test,
    input,
    build,
    io,
    usage,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::ingestion: return "ingestion";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::spec: return "spec";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::integrity: return "integrity";
    case ErrorKind::shape: return "shape";
    case ErrorKind::config: return "config";
    case ErrorKind::strategy: return "strategy";
    case ErrorKind::empty_input: return "empty_input";
    case ErrorKind::training: return "training";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::fit: return "fit";
    case ErrorKind::undefined_metric: return "undefined_metric";
    case ErrorKind::degenerate_test: return "degenerate_test";
    case ErrorKind::input: return "input";
    case ErrorKind::build: return "build";
    case ErrorKind::io: return "io";
    case ErrorKind::usage: return "usage";
    }
    return "unknown";
}

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace jobmatch
