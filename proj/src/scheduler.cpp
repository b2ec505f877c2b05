// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include "qoesim/scheduler.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "qoesim/kernels.h"

namespace qoesim {

namespace {

constexpr double kValueTolerance = 1e-12;

bool is_perfect(double q) { return q >= 1.0 - kValueTolerance; }

// Position of each snapshot in (arrival, id) order; used as the tie-break.
std::vector<std::size_t> arrival_ranks(
    std::span<const RequestSnapshot> snapshots) {
  std::vector<std::size_t> idx(snapshots.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (snapshots[a].arrival != snapshots[b].arrival) {
      return snapshots[a].arrival < snapshots[b].arrival;
    }
    return snapshots[a].id < snapshots[b].id;
  });
  std::vector<std::size_t> rank(snapshots.size());
  for (std::size_t r = 0; r < idx.size(); ++r) rank[idx[r]] = r;
  return rank;
}

std::vector<std::size_t> weights_of(
    std::span<const RequestSnapshot> snapshots) {
  std::vector<std::size_t> w(snapshots.size());
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    w[i] = snapshots[i].context_len;
  }
  return w;
}

// Takes items in the given order until the count or capacity runs out.
KnapsackSolution pack_in_order(std::span<const std::size_t> order,
                               std::span<const std::size_t> weights,
                               std::span<const double> values,
                               std::size_t batch_size, std::size_t capacity,
                               bool skip_variant) {
  KnapsackSolution sol;
  std::size_t used = 0;
  for (std::size_t i : order) {
    if (sol.selected.size() >= batch_size) break;
    if (used + weights[i] <= capacity) {
      sol.selected.push_back(i);
      used += weights[i];
      sol.objective += values[i];
    } else if (!skip_variant) {
      break;
    }
  }
  std::sort(sol.selected.begin(), sol.selected.end());
  return sol;
}

ScheduleDecision decision_from(std::span<const RequestSnapshot> snapshots,
                               std::span<const double> values,
                               const KnapsackSolution& sol) {
  ScheduleDecision d;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    d.gain[snapshots[i].id] = values[i];
    d.priority[snapshots[i].id] =
        values[i] / static_cast<double>(snapshots[i].context_len);
  }
  for (std::size_t i : sol.selected) d.serve_set.push_back(snapshots[i].id);
  std::sort(d.serve_set.begin(), d.serve_set.end());
  d.batch_size = d.serve_set.size();
  d.objective_value = sol.objective;
  finalize_lists(d, snapshots);
  return d;
}

}  // namespace

const char* to_string(SolverKind solver) {
  return solver == SolverKind::kGreedy ? "greedy" : "dp";
}

const char* to_string(Objective objective) {
  switch (objective) {
    case Objective::kAverage:
      return "average";
    case Objective::kMaxMin:
      return "maxmin";
    case Objective::kPerfectCount:
      return "perfect-count";
  }
  return "?";
}

RequestSnapshot make_snapshot(RequestId id, const TokenTimeline& timeline,
                              const QoeParams& params, std::size_t input_len,
                              std::size_t generated,
                              std::size_t expected_total, RequestState state,
                              KvLocation kv) {
  auto track = std::make_shared<ConsumptionTrack>(timeline.arrival_time, params);
  for (Seconds t : timeline.delivery_times) track->append(t);
  RequestSnapshot s;
  s.id = id;
  s.arrival = timeline.arrival_time;
  s.input_len = input_len;
  s.context_len = input_len + generated;
  s.generated = generated;
  s.expected_total = expected_total;
  s.params = params;
  s.state = state;
  s.kv = kv;
  s.track = std::move(track);
  return s;
}

double GainEstimate::q_serve_at(std::size_t batch_size) const {
  if (q_serve.empty()) return q_wait;
  if (q_serve.size() == 1 || batch_size <= b_lo) return q_serve.front();
  const std::size_t i = batch_size - b_lo;
  return i < q_serve.size() ? q_serve[i] : q_serve.back();
}

Seconds resume_delay(const RequestSnapshot& req, const LatencyProfile& profile) {
  if (req.running() || req.kv == KvLocation::kDevice) return 0.0;
  const std::size_t held = req.input_len + req.generated;
  if (req.kv == KvLocation::kHost) {
    return static_cast<double>(held) / profile.swap_bandwidth;
  }
  return prefill_latency(profile, held);
}

GainEstimate estimate_gain(const RequestSnapshot& req, Seconds now,
                           Seconds horizon, const LatencyProfile& profile,
                           std::size_t b_lo, std::size_t b_hi) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
  b_lo = std::max<std::size_t>(b_lo, 1);
  b_hi = std::max(b_hi, b_lo);
  const auto& track = *req.track;
  const Seconds eval = now + horizon;
  const std::size_t total = std::max<std::size_t>(req.expected_total, 1);

  GainEstimate g;
  g.horizon = horizon;
  g.b_lo = b_lo;
  g.q_current = track.evaluate(now, total, req.visible_tokens).value;
  g.q_wait = track.evaluate(eval, total, req.visible_tokens).value;

  const std::size_t remaining =
      req.expected_total > req.generated ? req.expected_total - req.generated
                                         : 0;
  if (remaining == 0) {
    g.q_serve = {g.q_wait};
    return g;
  }
  const Seconds start = now + resume_delay(req, profile);
  auto served_at = [&](std::size_t b) {
    const Seconds tau = decode_latency(profile, b);
    return track
        .evaluate(eval, total, req.visible_tokens,
                  ConsumptionTrack::Projection{start + tau, tau, remaining})
        .value;
  };

  const double fastest = served_at(b_lo);
  if (b_lo == b_hi || start + decode_latency(profile, b_lo) > eval) {
    g.q_serve = {fastest};
    return g;
  }
  const double slowest = served_at(b_hi);
  if (is_perfect(fastest) && is_perfect(slowest)) {
    g.q_serve = {fastest};
    return g;
  }
  g.q_serve.resize(b_hi - b_lo + 1);
  g.q_serve.front() = fastest;
  g.q_serve.back() = slowest;
  for (std::size_t b = b_lo + 1; b < b_hi; ++b) {
    g.q_serve[b - b_lo] = served_at(b);
  }
  return g;
}

double priority(const GainEstimate& gain, std::size_t batch_size,
                std::size_t context_len) {
  if (context_len == 0) throw std::invalid_argument("context_len must be >= 1");
  return (gain.q_serve_at(batch_size) - gain.q_wait) /
         static_cast<double>(context_len);
}

double objective_value(const GainEstimate& gain, std::size_t batch_size,
                       Objective objective, double q_min) {
  switch (objective) {
    case Objective::kAverage:
      return gain.q_serve_at(batch_size) - gain.q_wait;
    case Objective::kMaxMin:
      return std::max(q_min - gain.q_wait, 0.0);
    case Objective::kPerfectCount: {
      if (!is_perfect(gain.q_current)) return 0.0;
      const double serve = is_perfect(gain.q_serve_at(batch_size)) ? 1.0 : 0.0;
      const double wait = is_perfect(gain.q_wait) ? 1.0 : 0.0;
      return serve - wait;
    }
  }
  return 0.0;
}

double gain_maxmin(const RequestSnapshot& req,
                   std::span<const RequestSnapshot> snapshots, Seconds now,
                   Seconds horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
  double q_min = 1.0;
  for (const auto& s : snapshots) {
    q_min = std::min(
        q_min,
        s.track->evaluate(now, std::max<std::size_t>(s.expected_total, 1),
                          s.visible_tokens)
            .value);
  }
  const double q_wait =
      req.track
          ->evaluate(now + horizon, std::max<std::size_t>(req.expected_total, 1),
                     req.visible_tokens)
          .value;
  return std::max(q_min - q_wait, 0.0);
}

double gain_perfect_count(const RequestSnapshot& req, Seconds now,
                          Seconds horizon, const LatencyProfile& profile,
                          std::size_t batch_size) {
  const auto g =
      estimate_gain(req, now, horizon, profile, batch_size, batch_size);
  return objective_value(g, batch_size, Objective::kPerfectCount, 0.0);
}

KnapsackSolution greedy_knapsack(std::span<const std::size_t> weights,
                                 std::span<const double> values,
                                 std::span<const std::size_t> order,
                                 std::size_t batch_size, std::size_t capacity,
                                 bool skip_variant) {
  const std::size_t n = weights.size();
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = values[i] / static_cast<double>(std::max<std::size_t>(weights[i], 1));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (p[a] != p[b]) return p[a] > p[b];
    const std::size_t oa = order.empty() ? a : order[a];
    const std::size_t ob = order.empty() ? b : order[b];
    return oa < ob;
  });
  return pack_in_order(idx, weights, values, batch_size, capacity,
                       skip_variant);
}

std::optional<KnapsackSolution> dp_knapsack(
    std::span<const std::size_t> weights, std::span<const double> values,
    std::size_t batch_size, std::size_t capacity, double budget) {
  const std::size_t n = weights.size();
  if (batch_size == 0 || batch_size > n) return std::nullopt;
  const double work = static_cast<double>(capacity) * static_cast<double>(n) *
                      static_cast<double>(n);
  if (work > budget) {
    std::ostringstream msg;
    msg << "DP solver budget exceeded: M*N^2 = " << work << " > " << budget
        << "; use the greedy solver or raise the DP budget";
    throw DpBudgetExceeded(msg.str());
  }

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const std::size_t width = capacity + 1;
  const std::size_t rows = batch_size + 1;
  std::vector<double> prev(rows * width, kNegInf);
  std::vector<double> cur(rows * width, kNegInf);
  std::vector<std::uint8_t> choice(n * rows * width, 0);
  prev[0] = 0.0;

  const auto& k = kernels::active();
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t w = weights[i - 1];
    const double q = values[i - 1];
    std::uint8_t* layer = choice.data() + (i - 1) * rows * width;
    const std::size_t reach = std::min(i, batch_size);
    std::copy_n(prev.begin(), width, cur.begin());  // b = 0: never served
    for (std::size_t b = 1; b <= reach; ++b) {
      k.knapsack_relax(prev.data() + b * width, prev.data() + (b - 1) * width,
                       q, w, cur.data() + b * width, layer + b * width, width);
    }
    for (std::size_t b = reach + 1; b < rows; ++b) {
      std::fill_n(cur.begin() + b * width, width, kNegInf);
    }
    std::swap(prev, cur);
  }

  const double* last = prev.data() + batch_size * width;
  const auto best = std::max_element(last, last + width);
  if (*best == kNegInf) return std::nullopt;

  KnapsackSolution sol;
  sol.objective = *best;
  std::size_t m = static_cast<std::size_t>(best - last);
  std::size_t b = batch_size;
  for (std::size_t i = n; i >= 1; --i) {
    if (choice[(i - 1) * rows * width + b * width + m] != 0) {
      sol.selected.push_back(i - 1);
      m -= weights[i - 1];
      --b;
    }
  }
  std::reverse(sol.selected.begin(), sol.selected.end());
  return sol;
}

ScheduleDecision greedy_pack(std::span<const RequestSnapshot> snapshots,
                             std::span<const double> values,
                             std::size_t batch_size, std::size_t capacity,
                             bool skip_variant) {
  const auto w = weights_of(snapshots);
  const auto rank = arrival_ranks(snapshots);
  const auto sol =
      greedy_knapsack(w, values, rank, batch_size, capacity, skip_variant);
  return decision_from(snapshots, values, sol);
}

std::optional<ScheduleDecision> dp_solve(
    std::span<const RequestSnapshot> snapshots, std::span<const double> values,
    std::size_t batch_size, std::size_t capacity, double budget) {
  const auto w = weights_of(snapshots);
  const auto sol = dp_knapsack(w, values, batch_size, capacity, budget);
  if (!sol) return std::nullopt;
  return decision_from(snapshots, values, *sol);
}

SolverBounds batch_bounds(std::span<const RequestSnapshot> snapshots,
                          const LatencyProfile& profile, std::size_t capacity) {
  SolverBounds bounds;
  if (snapshots.empty()) return bounds;
  auto w = weights_of(snapshots);
  std::sort(w.begin(), w.end());
  std::size_t used = 0;
  for (std::size_t len : w) {
    if (used + len > capacity) break;
    used += len;
    ++bounds.b_max;
  }
  if (bounds.b_max == 0) return bounds;

  double fastest = 0.0;
  for (const auto& s : snapshots) {
    fastest = std::max(fastest, s.params.consumption_speed);
  }
  // Largest B whose decode rate still keeps up with the fastest reader.
  auto keeps_up = [&](std::size_t b) {
    return 1.0 / decode_latency(profile, b) >= fastest;
  };
  std::size_t lo = 1;
  std::size_t hi = bounds.b_max;
  if (!keeps_up(1)) {
    bounds.b_min = 1;
  } else {
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo + 1) / 2;
      if (keeps_up(mid)) {
        lo = mid;
      } else {
        hi = mid - 1;
      }
    }
    bounds.b_min = lo;
  }
  bounds.b_min = std::clamp<std::size_t>(bounds.b_min, 1, bounds.b_max);
  return bounds;
}

bool should_trigger(double kv_occupancy, Seconds current_decode_latency,
                    std::span<const RequestSnapshot> snapshots,
                    double watermark) {
  if (kv_occupancy >= watermark) return true;
  double fastest = 0.0;
  bool any_running = false;
  for (const auto& s : snapshots) {
    if (s.running()) {
      any_running = true;
      fastest = std::max(fastest, s.params.consumption_speed);
    }
  }
  if (!any_running) return false;
  return current_decode_latency > 1.0 / fastest;
}

ScheduleDecision solve(std::span<const RequestSnapshot> snapshots,
                       const LatencyProfile& profile, std::size_t capacity,
                       Seconds now, const SolveOptions& options) {
  if (snapshots.empty()) return {};
  const auto bounds = batch_bounds(snapshots, profile, capacity);
  if (bounds.b_max == 0) return {};

  std::vector<GainEstimate> gains;
  gains.reserve(snapshots.size());
  double q_min = 1.0;
  for (const auto& s : snapshots) {
    gains.push_back(estimate_gain(s, now, options.horizon, profile,
                                  bounds.b_min, bounds.b_max));
    q_min = std::min(q_min, gains.back().q_current);
  }

  const auto w = weights_of(snapshots);
  const auto rank = arrival_ranks(snapshots);
  std::vector<double> values(snapshots.size());
  std::optional<KnapsackSolution> best;
  std::vector<double> best_values;
  for (std::size_t b = bounds.b_min; b <= bounds.b_max; ++b) {
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
      values[i] = objective_value(gains[i], b, options.objective, q_min);
    }
    std::optional<KnapsackSolution> sol;
    if (options.solver == SolverKind::kGreedy) {
      sol = greedy_knapsack(w, values, rank, b, capacity,
                            options.greedy_skip_variant);
    } else {
      sol = dp_knapsack(w, values, b, capacity, options.dp_budget);
    }
    if (!sol) continue;
    // Ties go to the larger batch.
    if (!best || sol->objective >= best->objective - kValueTolerance) {
      best = std::move(sol);
      best_values = values;
    }
  }
  if (!best) return {};
  return decision_from(snapshots, best_values, *best);
}

void finalize_lists(ScheduleDecision& decision,
                    std::span<const RequestSnapshot> snapshots) {
  const std::set<RequestId> serve(decision.serve_set.begin(),
                                  decision.serve_set.end());
  auto prio = [&](const RequestSnapshot& s) {
    const auto it = decision.priority.find(s.id);
    return it == decision.priority.end() ? 0.0 : it->second;
  };
  std::vector<const RequestSnapshot*> admits;
  std::vector<const RequestSnapshot*> preempts;
  for (const auto& s : snapshots) {
    const bool chosen = serve.count(s.id) != 0;
    if (chosen && !s.running()) admits.push_back(&s);
    if (!chosen && s.running()) preempts.push_back(&s);
  }
  std::sort(admits.begin(), admits.end(),
            [&](const RequestSnapshot* a, const RequestSnapshot* b) {
              if (prio(*a) != prio(*b)) return prio(*a) > prio(*b);
              if (a->arrival != b->arrival) return a->arrival < b->arrival;
              return a->id < b->id;
            });
  // Lowest priority first; among equals the newest and largest go first.
  std::sort(preempts.begin(), preempts.end(),
            [&](const RequestSnapshot* a, const RequestSnapshot* b) {
              if (prio(*a) != prio(*b)) return prio(*a) < prio(*b);
              if (a->arrival != b->arrival) return a->arrival > b->arrival;
              return a->id > b->id;
            });
  decision.admit_list.clear();
  decision.preempt_list.clear();
  for (const auto* s : admits) decision.admit_list.push_back(s->id);
  for (const auto* s : preempts) decision.preempt_list.push_back(s->id);
}

std::size_t footprint(std::span<const RequestSnapshot> snapshots,
                      std::span<const RequestId> ids) {
  const std::set<RequestId> wanted(ids.begin(), ids.end());
  std::size_t total = 0;
  for (const auto& s : snapshots) {
    if (wanted.count(s.id) != 0) total += s.context_len;
  }
  return total;
}

ScheduleDecision fcfs_policy(std::span<const RequestSnapshot> snapshots,
                             std::size_t capacity) {
  std::vector<const RequestSnapshot*> running;
  std::vector<const RequestSnapshot*> waiting;
  for (const auto& s : snapshots) {
    if (s.running()) {
      running.push_back(&s);
    } else if (s.state != RequestState::kFinished) {
      waiting.push_back(&s);
    }
  }
  auto by_arrival = [](const RequestSnapshot* a, const RequestSnapshot* b) {
    if (a->arrival != b->arrival) return a->arrival < b->arrival;
    return a->id < b->id;
  };
  std::sort(running.begin(), running.end(), by_arrival);
  std::sort(waiting.begin(), waiting.end(), by_arrival);

  ScheduleDecision d;
  std::size_t used = 0;
  for (const auto* s : running) used += s->context_len;
  while (used > capacity && !running.empty()) {
    used -= running.back()->context_len;
    d.preempt_list.push_back(running.back()->id);
    running.pop_back();
  }
  for (const auto* s : waiting) {
    if (used + s->context_len > capacity) break;
    used += s->context_len;
    d.admit_list.push_back(s->id);
  }
  for (const auto* s : running) d.serve_set.push_back(s->id);
  d.serve_set.insert(d.serve_set.end(), d.admit_list.begin(),
                     d.admit_list.end());
  std::sort(d.serve_set.begin(), d.serve_set.end());
  d.batch_size = d.serve_set.size();
  return d;
}

ScheduleDecision lqsf_policy(std::span<const RequestSnapshot> snapshots,
                             std::span<const double> values,
                             std::size_t capacity) {
  const bool all_zero =
      std::all_of(values.begin(), values.end(),
                  [](double v) { return std::abs(v) <= kValueTolerance; });
  if (all_zero) return fcfs_policy(snapshots, capacity);

  const auto w = weights_of(snapshots);
  const auto rank = arrival_ranks(snapshots);
  std::vector<std::size_t> idx(snapshots.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return rank[a] < rank[b];
  });
  const auto sol = pack_in_order(idx, w, values, snapshots.size(), capacity,
                                 /*skip_variant=*/false);
  ScheduleDecision d;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    d.gain[snapshots[i].id] = values[i];
    // Raw gain is the ordering key for this policy.
    d.priority[snapshots[i].id] = values[i];
  }
  for (std::size_t i : sol.selected) d.serve_set.push_back(snapshots[i].id);
  std::sort(d.serve_set.begin(), d.serve_set.end());
  d.batch_size = d.serve_set.size();
  d.objective_value = sol.objective;
  finalize_lists(d, snapshots);
  return d;
}

}  // namespace qoesim
