// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "qoesim/types.h"

namespace qoesim {

struct QoeParams {
  Seconds ttft_target = 1.0;
  double consumption_speed = 4.8;  // tokens per second

  // Throws ConfigError unless both fields are strictly positive.
  void validate() const;
};

// Delivery history of one request as seen by its client.
struct TokenTimeline {
  Seconds arrival_time = 0.0;
  std::vector<Seconds> delivery_times;  // nondecreasing
};

struct QoeScore {
  double s_delay = 0.0;  // token-seconds
  double s_whole = 0.0;  // token-seconds
  double value = 1.0;    // in [0, 1]
};

// Raised when a full-timeline QoE is requested for a request that has not
// delivered anything yet; evaluate_partial covers that case.
class EmptyTimelineError : public std::invalid_argument {
 public:
  EmptyTimelineError()
      : std::invalid_argument(
            "qoe() needs at least one consumed token; use evaluate_partial") {}
};

// Ideal consumption instants: the first token is due at the TTFT target and
// every following one 1/speed later.
std::vector<Seconds> ideal_timeline(Seconds arrival, const QoeParams& params,
                                    std::size_t n);

// Earliest instants at which the user can read each token: never before the
// token is delivered, never before its ideal slot, and never faster than the
// reading speed.
std::vector<Seconds> actual_consumption(std::span<const Seconds> delivery_times,
                                        std::span<const Seconds> ideal_times,
                                        double speed);

// Scores a pair of consumption timelines. `actual` and `ideal` must have the
// same nonzero length.
QoeScore score_timelines(std::span<const Seconds> actual,
                         std::span<const Seconds> ideal);

// QoE over every delivered token.
QoeScore qoe(const TokenTimeline& timeline, const QoeParams& params);

// QoE of a request in any state, evaluated at `eval_time`.
//
// Only tokens whose ideal instant has passed by `eval_time` are scored (at
// least one, at most `total_expected`). Tokens the user cannot have read by
// `eval_time` are pinned to `eval_time` without cascading, so a request that
// never delivers scores 0 once its second ideal slot has passed.
QoeScore evaluate_partial(const TokenTimeline& timeline,
                          const QoeParams& params, Seconds eval_time,
                          std::size_t total_expected);

// Number of ideal slots that fall at or before `eval_time`, clipped to
// [1, total_expected] (0 only when total_expected is 0).
std::size_t due_token_count(Seconds ideal_start, double speed,
                            Seconds eval_time, std::size_t total_expected);

}  // namespace qoesim
