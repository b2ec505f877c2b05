// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

// Client-side pacing buffer. Tokens pushed by the server are held and handed
// to the reader along the consumption model: never before the ideal slot and
// never faster than the reading speed.

#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qoesim/qoe.h"
#include "qoesim/types.h"

namespace qoesim {

class PacerFinishedError : public std::logic_error {
 public:
  PacerFinishedError() : std::logic_error("push after the response finished") {}
};

class TokenPacer {
 public:
  static constexpr Seconds kUnbounded = std::numeric_limits<Seconds>::infinity();

  // With `bypass` set the client shows tokens as soon as they arrive; the
  // paced timeline is still what the metric scores.
  TokenPacer(Seconds arrival, const QoeParams& params, bool bypass = false);

  void push(std::size_t tokens, Seconds at);

  // Marks end-of-response and shows everything still buffered at `at`.
  void flush_on_finish(Seconds at);

  // Time until the buffer runs dry if the reader keeps consuming.
  Seconds surplus(Seconds at) const;

  // Tokens received by `at` whose paced release is at or after `at`.
  std::size_t buffered(Seconds at) const;

  bool finished() const { return finished_; }
  std::size_t received() const { return receive_.size(); }
  const std::vector<Seconds>& receive_times() const { return receive_; }
  // Paced consumption instants, one per received token.
  const std::vector<Seconds>& release_times() const { return release_; }
  // What the user actually sees: paced release, pulled in by a final flush or
  // replaced by arrival times in bypass mode.
  std::vector<Seconds> display_times() const;

  // QoE scored on the paced release timeline.
  QoeScore score() const;

 private:
  Seconds arrival_;
  QoeParams params_;
  bool bypass_;
  bool finished_ = false;
  Seconds flush_at_ = kUnbounded;
  std::vector<Seconds> receive_;
  std::vector<Seconds> release_;
};

}  // namespace qoesim
