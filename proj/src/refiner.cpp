// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <map>
#include <set>

#include "qoesim/consumption_track.h"
#include "qoesim/scheduler.h"

namespace qoesim {

namespace {

// QoE at `eval` if decoding resumes at `start` with one token per `tau`.
double projected(const RequestSnapshot& s, Seconds start, Seconds tau,
                 Seconds eval) {
  const std::size_t total = std::max<std::size_t>(s.expected_total, 1);
  const std::size_t remaining =
      total > s.generated ? total - s.generated : 0;
  return s.track
      ->evaluate(eval, total, s.visible_tokens,
                 ConsumptionTrack::Projection{start + tau, tau, remaining})
      .value;
}

}  // namespace

ScheduleDecision refine(const ScheduleDecision& decision,
                        std::span<const RequestSnapshot> snapshots,
                        const LatencyProfile& profile, std::size_t capacity,
                        Seconds now, const RefineOptions& options) {
  std::map<RequestId, const RequestSnapshot*> by_id;
  std::size_t used = 0;
  for (const auto& s : snapshots) {
    by_id[s.id] = &s;
    if (s.running()) used += s.context_len;
  }
  const std::size_t batch = std::max<std::size_t>(decision.batch_size, 1);
  auto snap = [&](RequestId id) -> const RequestSnapshot& {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw std::invalid_argument("decision refers to an unknown request");
    }
    return *it->second;
  };
  auto gain_of = [&](RequestId id) {
    const auto it = decision.gain.find(id);
    return it == decision.gain.end() ? 0.0 : it->second;
  };
  auto preempt_cost = [&](const RequestSnapshot& s) {
    const std::size_t held = std::max<std::size_t>(s.input_len + s.generated, 1);
    const auto mech = options.mechanism.value_or(select_mechanism(profile, held));
    return preemption_overhead(profile, held, mech).preempt;
  };

  std::set<RequestId> stopped;
  std::vector<RequestId> kept_preempts;
  std::vector<RequestId> kept_admits;
  std::size_t next = 0;
  Seconds stall_so_far = 0.0;

  auto take_preempt = [&]() {
    const auto& s = snap(decision.preempt_list[next++]);
    used -= s.context_len;
    stopped.insert(s.id);
    kept_preempts.push_back(s.id);
    return preempt_cost(s);
  };

  // Running requests that cannot stay under the capacity are preempted
  // regardless; their cost is already committed.
  while (used > capacity && next < decision.preempt_list.size()) {
    stall_so_far += take_preempt();
  }

  bool rejected = false;
  for (RequestId admit_id : decision.admit_list) {
    const auto& admit = snap(admit_id);
    std::size_t take = next;
    std::size_t freed = 0;
    while (used - freed + admit.context_len > capacity &&
           take < decision.preempt_list.size()) {
      freed += snap(decision.preempt_list[take++]).context_len;
    }
    if (used - freed + admit.context_len > capacity) {
      rejected = true;
      break;
    }
    Seconds stall = resume_delay(admit, profile);
    std::set<RequestId> pair_stopped;
    for (std::size_t k = next; k < take; ++k) {
      const auto& p = snap(decision.preempt_list[k]);
      stall += preempt_cost(p);
      pair_stopped.insert(p.id);
    }
    double loss = 0.0;
    // An admit that fits in free slots displaces nobody; its prefill or
    // swap-in is owed regardless of when it runs.
    if (take > next && stall > 0.0) {
      const Seconds before = now + stall_so_far;
      const Seconds eval = before + stall + options.horizon;
      const Seconds tau = decode_latency(profile, batch);
      for (const auto& s : snapshots) {
        if (!s.running() || stopped.count(s.id) || pair_stopped.count(s.id)) {
          continue;
        }
        loss += projected(s, before, tau, eval) -
                projected(s, before + stall, tau, eval);
      }
      if (!(gain_of(admit_id) > loss)) {
        rejected = true;
        break;
      }
    }
    while (next < take) take_preempt();
    used += admit.context_len;
    stall_so_far += stall;
    kept_admits.push_back(admit_id);
  }
  if (!rejected) {
    while (next < decision.preempt_list.size()) take_preempt();
  }

  ScheduleDecision out;
  out.gain = decision.gain;
  out.priority = decision.priority;
  out.admit_list = kept_admits;
  out.preempt_list = kept_preempts;
  for (const auto& s : snapshots) {
    if (s.running() && !stopped.count(s.id)) out.serve_set.push_back(s.id);
  }
  out.serve_set.insert(out.serve_set.end(), kept_admits.begin(),
                       kept_admits.end());
  std::sort(out.serve_set.begin(), out.serve_set.end());
  out.batch_size = out.serve_set.size();
  for (RequestId id : out.serve_set) out.objective_value += gain_of(id);
  return out;
}

}  // namespace qoesim
