// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include "qoesim/consumption_track.h"

#include <algorithm>
#include <stdexcept>

namespace qoesim {

ConsumptionTrack::ConsumptionTrack(Seconds arrival, const QoeParams& params)
    : arrival_(arrival),
      params_(params),
      start_(arrival + params.ttft_target),
      gap_(1.0 / params.consumption_speed),
      delay_prefix_{0.0} {
  params_.validate();
}

void ConsumptionTrack::append(Seconds delivery) {
  if (!deliveries_.empty() && delivery < deliveries_.back() - kTimeTolerance) {
    throw std::invalid_argument("ConsumptionTrack: deliveries must not go back");
  }
  const double lateness = delivery - ideal(deliveries_.size());
  const double previous = delay_.empty() ? 0.0 : delay_.back();
  const double delay =
      std::max(previous, lateness > kTimeTolerance ? lateness : 0.0);
  deliveries_.push_back(delivery);
  delay_.push_back(delay);
  delay_prefix_.push_back(delay_prefix_.back() + delay);
}

QoeScore ConsumptionTrack::evaluate(
    Seconds eval_time, std::size_t total_expected, std::size_t visible,
    const std::optional<Projection>& projection) const {
  if (total_expected == 0) {
    throw std::invalid_argument("ConsumptionTrack: total_expected is 0");
  }
  if (eval_time <= start_ + kTimeTolerance) return QoeScore{};

  const std::size_t m = due_token_count(start_, params_.consumption_speed,
                                        eval_time, total_expected);
  const double horizon = eval_time + kTimeTolerance;

  const std::size_t shown = std::min(visible, deliveries_.size());
  const auto arrived = static_cast<std::size_t>(
      std::upper_bound(deliveries_.begin(), deliveries_.begin() + shown,
                       horizon) -
      deliveries_.begin());
  const std::size_t upto = std::min(m, arrived);

  // Consumption instants are strictly increasing, so the tokens read by
  // eval_time form a prefix.
  std::size_t consumed = 0;
  {
    std::size_t lo = 0;
    std::size_t hi = upto;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (ideal(mid) + delay_[mid] <= horizon) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    consumed = lo;
  }

  double s_delay = delay_prefix_[consumed];
  double last_delay = consumed > 0 ? delay_[consumed - 1] : 0.0;

  if (projection && consumed == upto && upto == shown && shown < m) {
    double running = shown > 0 ? delay_[shown - 1] : 0.0;
    for (std::size_t j = 0; j < projection->count && consumed < m; ++j) {
      const Seconds d =
          projection->first + static_cast<double>(j) * projection->interval;
      if (d > horizon) break;
      const std::size_t i = shown + j;
      const double lateness = d - ideal(i);
      running = std::max(running, lateness > kTimeTolerance ? lateness : 0.0);
      if (ideal(i) + running > horizon) break;
      s_delay += running;
      last_delay = running;
      ++consumed;
    }
  }

  const double md = static_cast<double>(m);
  const double spread = gap_ * md * (md - 1.0) / 2.0;
  const Seconds ideal_last = ideal(m - 1);
  QoeScore score;
  if (consumed < m) {
    const double pinned = static_cast<double>(m - consumed);
    const double behind = eval_time - ideal_last;
    if (consumed == 0) {
      // Same expression on both sides so a silent request scores exactly 0.
      score.s_delay = md * behind + spread;
      score.s_whole = md * behind + spread;
    } else {
      score.s_delay =
          s_delay + pinned * behind + gap_ * pinned * (pinned - 1.0) / 2.0;
      score.s_whole = md * behind + spread;
    }
  } else {
    score.s_delay = s_delay;
    score.s_whole = md * last_delay + spread;
  }
  score.s_delay = std::max(score.s_delay, 0.0);
  score.s_whole = std::max(score.s_whole, score.s_delay);
  score.value = score.s_whole > 0.0
                    ? std::clamp(1.0 - score.s_delay / score.s_whole, 0.0, 1.0)
                    : 1.0;
  return score;
}

}  // namespace qoesim
