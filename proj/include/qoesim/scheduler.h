// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

// QoE-aware token-level scheduling.
//
// At every scheduling quantum the scheduler picks which ongoing requests to
// serve. Each request is a knapsack item whose value is the QoE it gains from
// being served over the next `horizon` seconds and whose weight is its KV
// footprint; the value itself depends on how many items end up in the knapsack
// because larger batches decode more slowly. The batch size is therefore
// searched over a pruned range and the best packing across sizes wins.

#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qoesim/consumption_track.h"
#include "qoesim/latency_model.h"
#include "qoesim/qoe.h"
#include "qoesim/types.h"

namespace qoesim {

enum class RequestState { kQueued, kRunning, kPreempted, kFinished };

// Where a request's KV state lives between quanta.
enum class KvLocation {
  kNone,    // never prefilled, or dropped for recomputation
  kDevice,  // resident in the KV cache
  kHost,    // swapped out
};

struct RequestSnapshot {
  RequestId id = 0;
  Seconds arrival = 0.0;
  std::size_t input_len = 1;
  // KV slots the request holds once it has run the upcoming quantum.
  std::size_t context_len = 1;
  std::size_t generated = 0;
  std::size_t expected_total = 1;
  QoeParams params;
  RequestState state = RequestState::kQueued;
  KvLocation kv = KvLocation::kNone;
  std::shared_ptr<const ConsumptionTrack> track;
  // Deliveries the server knows about (all of them unless modelling stale
  // client feedback).
  std::size_t visible_tokens = ConsumptionTrack::kAll;

  bool running() const { return state == RequestState::kRunning; }
};

// Builds a snapshot whose deliveries are copied from a plain timeline.
RequestSnapshot make_snapshot(RequestId id, const TokenTimeline& timeline,
                              const QoeParams& params, std::size_t input_len,
                              std::size_t generated,
                              std::size_t expected_total, RequestState state,
                              KvLocation kv = KvLocation::kNone);

struct GainEstimate {
  Seconds horizon = 0.0;
  double q_wait = 0.0;
  double q_current = 1.0;
  std::size_t b_lo = 1;
  // q_serve[i] is the QoE when served at batch size b_lo + i. A single entry
  // means q_serve does not depend on the batch size in range.
  std::vector<double> q_serve;

  double q_serve_at(std::size_t batch_size) const;
};

struct SolverBounds {
  std::size_t b_min = 0;
  std::size_t b_max = 0;
};

struct ScheduleDecision {
  std::vector<RequestId> serve_set;     // ascending id
  std::size_t batch_size = 0;
  std::vector<RequestId> admit_list;    // descending priority
  std::vector<RequestId> preempt_list;  // ascending priority
  double objective_value = 0.0;
  std::map<RequestId, double> gain;      // item value at batch_size
  std::map<RequestId, double> priority;  // gain / context_len
};

enum class SolverKind { kGreedy, kDp };
enum class Objective { kAverage, kMaxMin, kPerfectCount };

const char* to_string(SolverKind solver);
const char* to_string(Objective objective);

class DpBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolveOptions {
  Seconds horizon = 2.0;
  SolverKind solver = SolverKind::kGreedy;
  Objective objective = Objective::kAverage;
  // Skip a non-fitting request instead of stopping at it.
  bool greedy_skip_variant = false;
  // Largest M * N^2 the DP solver may take on.
  double dp_budget = 1e8;
};

// Time before a non-running request would emit its first token when admitted:
// prefill for fresh or dropped state, swap-in for host-resident state.
Seconds resume_delay(const RequestSnapshot& req, const LatencyProfile& profile);

GainEstimate estimate_gain(const RequestSnapshot& req, Seconds now,
                           Seconds horizon, const LatencyProfile& profile,
                           std::size_t b_lo, std::size_t b_hi);

double priority(const GainEstimate& gain, std::size_t batch_size,
                std::size_t context_len);

// Item value of a request under the chosen objective. `q_min` is the lowest
// current QoE across ongoing requests (max-min objective only).
double objective_value(const GainEstimate& gain, std::size_t batch_size,
                       Objective objective, double q_min);

double gain_maxmin(const RequestSnapshot& req,
                   std::span<const RequestSnapshot> snapshots, Seconds now,
                   Seconds horizon);

double gain_perfect_count(const RequestSnapshot& req, Seconds now,
                          Seconds horizon, const LatencyProfile& profile,
                          std::size_t batch_size);

// Plain knapsack solutions over index positions.
struct KnapsackSolution {
  std::vector<std::size_t> selected;  // ascending index
  double objective = 0.0;
};

// Priority-ordered packing: sort by value/weight descending (ties by `order`
// ascending), take items while both the count and capacity allow, stop at the
// first one that does not fit unless `skip_variant` is set.
KnapsackSolution greedy_knapsack(std::span<const std::size_t> weights,
                                 std::span<const double> values,
                                 std::span<const std::size_t> order,
                                 std::size_t batch_size, std::size_t capacity,
                                 bool skip_variant = false);

// Exact optimum with exactly `batch_size` items via the 3D table over
// (items, count, capacity). nullopt when no subset of that size fits.
std::optional<KnapsackSolution> dp_knapsack(
    std::span<const std::size_t> weights, std::span<const double> values,
    std::size_t batch_size, std::size_t capacity,
    double budget = 1e18);

// Snapshot-level wrappers. `values` is aligned with `snapshots`.
ScheduleDecision greedy_pack(std::span<const RequestSnapshot> snapshots,
                             std::span<const double> values,
                             std::size_t batch_size, std::size_t capacity,
                             bool skip_variant = false);
std::optional<ScheduleDecision> dp_solve(
    std::span<const RequestSnapshot> snapshots, std::span<const double> values,
    std::size_t batch_size, std::size_t capacity, double budget = 1e18);

SolverBounds batch_bounds(std::span<const RequestSnapshot> snapshots,
                          const LatencyProfile& profile, std::size_t capacity);

bool should_trigger(double kv_occupancy, Seconds current_decode_latency,
                    std::span<const RequestSnapshot> snapshots,
                    double watermark = 0.90);

ScheduleDecision solve(std::span<const RequestSnapshot> snapshots,
                       const LatencyProfile& profile, std::size_t capacity,
                       Seconds now, const SolveOptions& options);

struct RefineOptions {
  // Forced mechanism for preemptions; nullopt picks the cheaper one.
  std::optional<PreemptionMechanism> mechanism;
  // Lookahead over which a stall's damage to running requests is measured.
  Seconds horizon = 2.0;
};

// Overhead-aware pruning of a solve() decision. Admits are visited in
// priority order; each is paired with just enough of the lowest-priority
// preemptions to make room, and the pair is kept only when the admit's gain
// beats the QoE the added stall costs the requests that keep running, both
// measured `horizon` ahead. Admits that fit without preempting anyone are
// always kept. The first rejected pair cancels everything after it.
ScheduleDecision refine(const ScheduleDecision& decision,
                        std::span<const RequestSnapshot> snapshots,
                        const LatencyProfile& profile, std::size_t capacity,
                        Seconds now, const RefineOptions& options = {});

// Arrival order; on overflow the most recently arrived running request is
// preempted; waiting requests are admitted until the first that does not fit.
ScheduleDecision fcfs_policy(std::span<const RequestSnapshot> snapshots,
                             std::size_t capacity);

// Packs by raw gain without dividing by footprint. `values` is aligned with
// `snapshots`. All-zero gains keep the current serve set.
ScheduleDecision lqsf_policy(std::span<const RequestSnapshot> snapshots,
                             std::span<const double> values,
                             std::size_t capacity);

// Fills in admit/preempt lists for a chosen serve set.
void finalize_lists(ScheduleDecision& decision,
                    std::span<const RequestSnapshot> snapshots);

// Sum of context_len over a set of ids.
std::size_t footprint(std::span<const RequestSnapshot> snapshots,
                      std::span<const RequestId> ids);

}  // namespace qoesim
