// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include "qoesim/token_pacer.h"

#include <algorithm>

namespace qoesim {

TokenPacer::TokenPacer(Seconds arrival, const QoeParams& params, bool bypass)
    : arrival_(arrival), params_(params), bypass_(bypass) {
  params_.validate();
}

void TokenPacer::push(std::size_t tokens, Seconds at) {
  if (finished_) throw PacerFinishedError();
  if (at < arrival_ - kTimeTolerance) {
    throw std::invalid_argument("push before the request arrived");
  }
  if (!receive_.empty() && at < receive_.back() - kTimeTolerance) {
    throw std::invalid_argument("pushes must be in time order");
  }
  const double gap = 1.0 / params_.consumption_speed;
  for (std::size_t k = 0; k < tokens; ++k) {
    const std::size_t i = release_.size();
    const Seconds ideal =
        arrival_ + params_.ttft_target +
        static_cast<double>(i) / params_.consumption_speed;
    Seconds t = std::max(at, ideal);
    if (i > 0) t = std::max(t, release_.back() + gap);
    if (t <= ideal + kTimeTolerance) t = ideal;
    receive_.push_back(at);
    release_.push_back(t);
  }
}

void TokenPacer::flush_on_finish(Seconds at) {
  finished_ = true;
  flush_at_ = at;
}

std::size_t TokenPacer::buffered(Seconds at) const {
  // Release times are increasing, receive times nondecreasing.
  const auto first_unreleased =
      std::lower_bound(release_.begin(), release_.end(), at - kTimeTolerance);
  const auto received_end =
      std::upper_bound(receive_.begin(), receive_.end(), at + kTimeTolerance);
  const auto lo = static_cast<std::size_t>(first_unreleased - release_.begin());
  const auto hi = static_cast<std::size_t>(received_end - receive_.begin());
  return hi > lo ? hi - lo : 0;
}

Seconds TokenPacer::surplus(Seconds at) const {
  if (finished_) return kUnbounded;
  const std::size_t n = buffered(at);
  if (n == 0) return 0.0;
  const auto received_end =
      std::upper_bound(receive_.begin(), receive_.end(), at + kTimeTolerance);
  const auto last =
      static_cast<std::size_t>(received_end - receive_.begin()) - 1;
  return std::max(0.0, release_[last] + 1.0 / params_.consumption_speed - at);
}

std::vector<Seconds> TokenPacer::display_times() const {
  if (bypass_) return receive_;
  std::vector<Seconds> shown = release_;
  if (finished_) {
    for (std::size_t i = 0; i < shown.size(); ++i) {
      shown[i] = std::max(receive_[i], std::min(shown[i], flush_at_));
    }
  }
  return shown;
}

QoeScore TokenPacer::score() const {
  if (release_.empty()) throw EmptyTimelineError();
  const auto ideal = ideal_timeline(arrival_, params_, release_.size());
  return score_timelines(release_, ideal);
}

}  // namespace qoesim
