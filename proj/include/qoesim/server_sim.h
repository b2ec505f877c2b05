// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

// Discrete-event model of a continuous-batching serving engine.
//
// The engine is one serial resource. At every iteration boundary the policy
// may preempt and admit requests; preemption and prefill/resume work then
// runs as a stall before the next decode iteration, which produces one token
// for every running request. A running request holds one KV slot per context
// token plus one for the token being generated.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <queue>
#include <unordered_map>
#include <vector>

#include "qoesim/consumption_track.h"
#include "qoesim/latency_model.h"
#include "qoesim/policy.h"
#include "qoesim/report.h"
#include "qoesim/token_pacer.h"
#include "qoesim/workload.h"

namespace qoesim {

struct SimConfig {
  LatencyProfile profile = LatencyProfile::synthetic_default();
  PolicyConfig policy;
  Seconds network_delay = 0.0;
  // Tokens held back on the server until a full chunk can be sent.
  std::size_t chunk = 1;
  // The scheduler only sees deliveries at least this old.
  Seconds staleness = 0.0;
  // Clients display tokens on arrival instead of pacing them.
  bool bypass_pacing = false;

  void validate() const;
};

enum class EventKind : std::uint8_t {
  kArrival = 0,
  kSwapComplete = 1,
  kPrefillComplete = 2,
  kIterationComplete = 3,
  kScheduleTick = 4,
};

struct SimEvent {
  Seconds time = 0.0;
  EventKind kind = EventKind::kArrival;
  RequestId id = 0;

  // Earliest first; ties by kind rank, then id.
  bool operator>(const SimEvent& other) const;
};

struct TokenEvent {
  RequestId id = 0;
  std::size_t index = 0;  // 0-based within the response
  Seconds generated_at = 0.0;
};

struct AppliedDecision {
  Seconds time = 0.0;
  std::vector<RequestId> admitted;
  std::vector<RequestId> preempted;
  bool triggered = false;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Simulator {
 public:
  Simulator(SimConfig config, std::vector<Request> requests);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  bool done() const { return events_.empty(); }
  Seconds clock() const { return clock_; }
  // Time of the next pending event; infinity when none.
  Seconds next_event_time() const;

  // Processes the earliest event.
  std::vector<TokenEvent> step();

  // Steps until no event at or before `until` remains.
  void run_until(Seconds until);

  std::size_t kv_used() const { return kv_used_; }
  // Arrived requests holding no KV state: never started or dropped by a
  // recompute preemption. Swapped-out requests are counted separately.
  std::size_t queue_len() const;
  std::size_t swapped_count() const;
  std::size_t running_count() const;
  RequestState state(RequestId id) const;
  std::size_t generated(RequestId id) const;
  std::size_t preemptions(RequestId id) const;
  const std::vector<Seconds>& generation_times(RequestId id) const;
  const TokenPacer& pacer(RequestId id) const;
  const std::vector<AppliedDecision>& decisions() const { return decisions_; }
  // Engine time spent on preemption/prefill stalls and on decode iterations.
  Seconds stall_time() const { return stall_time_; }
  Seconds decode_time() const { return decode_time_; }

  // Called at every scheduling point with what the policy saw and decided.
  using Observer = std::function<void(Seconds, std::span<const RequestSnapshot>,
                                      const ScheduleDecision&)>;
  void set_observer(Observer observer) { observer_ = std::move(observer); }

  // Per-request outcomes; unfinished requests are scored at `eval_time`.
  SimulationReport report(Seconds eval_time) const;

 private:
  struct Entry;

  Entry& entry(RequestId id);
  const Entry& entry(RequestId id) const;
  void push(Seconds time, EventKind kind, RequestId id);
  void on_arrival(RequestId id);
  void on_swap_complete(RequestId id);
  void on_prefill_complete(RequestId id);
  void on_iteration_complete(std::vector<TokenEvent>& emitted);
  void on_tick();
  void send(Entry& e, Seconds at);
  void record_series();
  void check_invariants() const;
  std::vector<RequestSnapshot> snapshots() const;
  std::size_t swapping_slots() const;

  SimConfig config_;
  std::vector<std::unique_ptr<Entry>> entries_;
  std::unordered_map<RequestId, std::size_t> index_;
  std::vector<RequestId> rejected_;
  std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> events_;
  Seconds clock_ = 0.0;
  std::size_t kv_used_ = 0;
  bool engine_busy_ = false;
  bool tick_pending_ = false;
  std::vector<RequestId> batch_;  // decoding in the current iteration
  std::vector<SeriesPoint> series_;
  std::vector<AppliedDecision> decisions_;
  Observer observer_;
  Seconds stall_time_ = 0.0;
  Seconds decode_time_ = 0.0;
};

// Builds a simulator, runs it to completion (or `until`) and reports.
SimulationReport simulate(const SimConfig& config,
                          const std::vector<Request>& requests,
                          Seconds until = std::numeric_limits<Seconds>::infinity());

}  // namespace qoesim
