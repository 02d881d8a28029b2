// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#pragma once

#include <stdexcept>
#include <string>

namespace tracebayes {

enum class ErrorKind {
  kInvalidArgument,
  kNotFound,
  kParse,
  kIo,
  kNumerical,
};

/// Single exception type for the library. The kind lets the CLI and the
/// HTTP layer map failures onto exit codes and status codes.
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

}  // namespace tracebayes
