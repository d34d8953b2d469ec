// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace cachesched {

/// Invalid user-supplied configuration (bad parameter, malformed scenario file).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input outside the mathematical domain of a function (e.g. zero distance).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A search space exceeds its configured cap; the caller must pick another method.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
[[noreturn]] inline void check_failed(const char* expr, const char* file, int line,
                                      const std::string& msg) {
  std::fprintf(stderr, "%s:%d: invariant violated: %s (%s)\n", file, line, expr, msg.c_str());
  std::abort();
}
}  // namespace detail

}  // namespace cachesched

// Internal invariants. Violations are programming errors and abort the process.
#define CACHESCHED_CHECK(cond, msg)                                             \
  do {                                                                          \
    if (!(cond)) ::cachesched::detail::check_failed(#cond, __FILE__, __LINE__, (msg)); \
  } while (0)
