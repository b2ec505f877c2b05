// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "qoesim/qoe.h"
#include "qoesim/types.h"

namespace qoesim {

// Incremental form of the consumption model for one request.
//
// The user's lateness behind the ideal line only ever grows, so the actual
// consumption time of token i is ideal(i) + delay(i) where delay is the running
// maximum of (delivery - ideal). Keeping delay and its prefix sums lets the
// scheduler evaluate partial QoE in O(log n) plus the projected tokens, which
// it does for every request and batch size at every scheduling quantum.
class ConsumptionTrack {
 public:
  static constexpr std::size_t kAll = std::numeric_limits<std::size_t>::max();

  // Tokens generated at first, first + interval, ... (count of them).
  struct Projection {
    Seconds first = 0.0;
    Seconds interval = 0.0;
    std::size_t count = 0;
  };

  ConsumptionTrack(Seconds arrival, const QoeParams& params);

  // Deliveries must be nondecreasing.
  void append(Seconds delivery);

  std::size_t delivered() const { return deliveries_.size(); }
  Seconds arrival() const { return arrival_; }
  const QoeParams& params() const { return params_; }
  Seconds ideal_start() const { return start_; }
  Seconds ideal(std::size_t i) const {
    return start_ + static_cast<double>(i) / params_.consumption_speed;
  }
  std::span<const Seconds> deliveries() const { return deliveries_; }
  // Consumption instant of delivered token i (0-based).
  Seconds consumption(std::size_t i) const { return ideal(i) + delay_[i]; }

  // Same semantics as evaluate_partial, restricted to the first `visible`
  // deliveries and optionally extended with projected future deliveries.
  QoeScore evaluate(Seconds eval_time, std::size_t total_expected,
                    std::size_t visible = kAll,
                    const std::optional<Projection>& projection = {}) const;

 private:
  Seconds arrival_;
  QoeParams params_;
  Seconds start_;
  double gap_;
  std::vector<Seconds> deliveries_;
  std::vector<double> delay_;         // nondecreasing, >= 0
  std::vector<double> delay_prefix_;  // delay_prefix_[i] = sum of delay_[0..i)
};

}  // namespace qoesim
