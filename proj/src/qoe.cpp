// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include "qoesim/qoe.h"

#include <algorithm>
#include <cmath>

#include "qoesim/kernels.h"

namespace qoesim {

void QoeParams::validate() const {
  if (!(ttft_target > 0.0)) throw ConfigError("ttft_target must be > 0");
  if (!(consumption_speed > 0.0)) {
    throw ConfigError("consumption_speed must be > 0");
  }
}

std::vector<Seconds> ideal_timeline(Seconds arrival, const QoeParams& params,
                                    std::size_t n) {
  std::vector<Seconds> ideal(n);
  const Seconds start = arrival + params.ttft_target;
  for (std::size_t i = 0; i < n; ++i) {
    ideal[i] = start + static_cast<double>(i) / params.consumption_speed;
  }
  return ideal;
}

std::vector<Seconds> actual_consumption(std::span<const Seconds> delivery_times,
                                        std::span<const Seconds> ideal_times,
                                        double speed) {
  const std::size_t n = std::min(delivery_times.size(), ideal_times.size());
  std::vector<Seconds> actual(n);
  const double gap = 1.0 / speed;
  for (std::size_t i = 0; i < n; ++i) {
    Seconds t = std::max(delivery_times[i], ideal_times[i]);
    if (i > 0) t = std::max(t, actual[i - 1] + gap);
    // Snap rounding noise back onto the ideal line so on-time schedules
    // score exactly 1.
    if (t <= ideal_times[i] + kTimeTolerance) t = ideal_times[i];
    actual[i] = t;
  }
  return actual;
}

QoeScore score_timelines(std::span<const Seconds> actual,
                         std::span<const Seconds> ideal) {
  QoeScore score;
  if (actual.empty()) return score;
  const auto sums = kernels::area_sums(actual, ideal);
  score.s_delay = std::max(sums.delay, 0.0);
  score.s_whole = std::max(sums.whole, score.s_delay);
  if (score.s_whole > 0.0) {
    score.value = std::clamp(1.0 - score.s_delay / score.s_whole, 0.0, 1.0);
  } else {
    score.value = 1.0;
  }
  return score;
}

QoeScore qoe(const TokenTimeline& timeline, const QoeParams& params) {
  const std::size_t n = timeline.delivery_times.size();
  if (n == 0) throw EmptyTimelineError();
  const auto ideal = ideal_timeline(timeline.arrival_time, params, n);
  const auto actual = actual_consumption(timeline.delivery_times, ideal,
                                         params.consumption_speed);
  return score_timelines(actual, ideal);
}

std::size_t due_token_count(Seconds ideal_start, double speed,
                            Seconds eval_time, std::size_t total_expected) {
  if (total_expected == 0) return 0;
  if (eval_time < ideal_start + kTimeTolerance) return 1;
  auto slot = [&](std::size_t i) {
    return ideal_start + static_cast<double>(i) / speed;
  };
  const double approx = std::floor((eval_time - ideal_start) * speed);
  std::size_t last = approx >= static_cast<double>(total_expected)
                         ? total_expected - 1
                         : static_cast<std::size_t>(approx);
  // Correct the float estimate against the exact slot formula.
  while (last + 1 < total_expected &&
         slot(last + 1) <= eval_time + kTimeTolerance) {
    ++last;
  }
  while (last > 0 && slot(last) > eval_time + kTimeTolerance) --last;
  return last + 1;
}

QoeScore evaluate_partial(const TokenTimeline& timeline,
                          const QoeParams& params, Seconds eval_time,
                          std::size_t total_expected) {
  if (eval_time < timeline.arrival_time - kTimeTolerance) {
    throw std::invalid_argument("evaluate_partial: eval_time before arrival");
  }
  if (total_expected == 0) {
    throw std::invalid_argument("evaluate_partial: total_expected is 0");
  }
  const Seconds start = timeline.arrival_time + params.ttft_target;
  // Nothing is due yet.
  if (eval_time <= start + kTimeTolerance) return QoeScore{};

  const std::size_t m = due_token_count(start, params.consumption_speed,
                                        eval_time, total_expected);
  const auto ideal = ideal_timeline(timeline.arrival_time, params, m);

  std::size_t delivered = 0;
  while (delivered < m && delivered < timeline.delivery_times.size() &&
         timeline.delivery_times[delivered] <= eval_time + kTimeTolerance) {
    ++delivered;
  }
  auto actual = actual_consumption(
      std::span(timeline.delivery_times).first(delivered),
      std::span(ideal).first(delivered), params.consumption_speed);
  actual.resize(m, eval_time);
  for (auto& t : actual) {
    if (t > eval_time + kTimeTolerance) t = eval_time;
  }
  return score_timelines(actual, ideal);
}

}  // namespace qoesim
