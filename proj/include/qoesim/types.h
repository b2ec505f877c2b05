// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qoesim {

using RequestId = std::uint64_t;

// Timestamps and durations are plain seconds on the simulated clock.
using Seconds = double;

// Absolute tolerance for every timestamp comparison.
inline constexpr double kTimeTolerance = 1e-9;

// Invalid user-supplied configuration (bad profile file, contradictory flags).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A broken engine invariant. Never expected from valid inputs.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace qoesim
