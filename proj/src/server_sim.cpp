// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include "qoesim/server_sim.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

namespace qoesim {

struct Simulator::Entry {
  Entry(const Request& r, bool bypass)
      : req(r),
        track(std::make_shared<ConsumptionTrack>(r.arrival, r.params)),
        pacer(r.arrival, r.params, bypass) {}

  Request req;
  std::shared_ptr<ConsumptionTrack> track;  // client-side receive times
  TokenPacer pacer;
  RequestState state = RequestState::kQueued;
  KvLocation kv = KvLocation::kNone;
  bool arrived = false;
  bool admitting = false;     // prefill or swap-in under way
  bool swapping_out = false;  // slots still held until the copy finishes
  std::size_t generated = 0;
  std::size_t held = 0;  // device KV slots
  std::size_t preemptions = 0;
  std::size_t unsent = 0;  // generated but not yet on the wire
  std::vector<Seconds> gen_times;

  bool waiting() const {
    return arrived && !admitting && !swapping_out &&
           (state == RequestState::kQueued || state == RequestState::kPreempted);
  }
  bool swapped() const {
    return arrived && !admitting && state == RequestState::kPreempted &&
           (swapping_out || kv == KvLocation::kHost);
  }
  std::size_t context() const { return req.input_len + generated; }
};

void SimConfig::validate() const {
  profile.validate();
  policy.validate();
  if (!(network_delay >= 0.0)) throw ConfigError("network delay must be >= 0");
  if (chunk == 0) throw ConfigError("chunk must be >= 1");
  if (!(staleness >= 0.0)) throw ConfigError("staleness must be >= 0");
}

bool SimEvent::operator>(const SimEvent& other) const {
  if (time != other.time) return time > other.time;
  if (kind != other.kind) return kind > other.kind;
  return id > other.id;
}

Simulator::Simulator(SimConfig config, std::vector<Request> requests)
    : config_(std::move(config)) {
  config_.validate();
  std::stable_sort(requests.begin(), requests.end(),
                   [](const Request& a, const Request& b) { return a.id < b.id; });
  for (const auto& r : requests) {
    if (index_.count(r.id)) throw ConfigError("duplicate request id");
    if (r.input_len == 0 || r.output_len == 0) {
      throw ConfigError("requests need input_len and output_len >= 1");
    }
    if (!(r.arrival >= 0.0)) throw ConfigError("arrival must be >= 0");
    if (r.input_len + r.output_len > config_.profile.kv_capacity) {
      rejected_.push_back(r.id);
      continue;
    }
    index_[r.id] = entries_.size();
    entries_.push_back(std::make_unique<Entry>(r, config_.bypass_pacing));
    push(r.arrival, EventKind::kArrival, r.id);
  }
  if (!rejected_.empty()) {
    spdlog::warn("{} request(s) exceed the KV capacity and were rejected",
                 rejected_.size());
  }
}

Simulator::~Simulator() = default;

Simulator::Entry& Simulator::entry(RequestId id) {
  return *entries_.at(index_.at(id));
}

const Simulator::Entry& Simulator::entry(RequestId id) const {
  return *entries_.at(index_.at(id));
}

void Simulator::push(Seconds time, EventKind kind, RequestId id) {
  events_.push(SimEvent{time, kind, id});
}

Seconds Simulator::next_event_time() const {
  return events_.empty() ? std::numeric_limits<Seconds>::infinity()
                         : events_.top().time;
}

std::vector<TokenEvent> Simulator::step() {
  if (events_.empty()) throw SimulationError("no pending events");
  const SimEvent ev = events_.top();
  events_.pop();
  if (ev.time < clock_ - kTimeTolerance) {
    throw SimulationError("event queue went back in time");
  }
  clock_ = std::max(clock_, ev.time);
  std::vector<TokenEvent> emitted;
  switch (ev.kind) {
    case EventKind::kArrival:
      on_arrival(ev.id);
      break;
    case EventKind::kSwapComplete:
      on_swap_complete(ev.id);
      break;
    case EventKind::kPrefillComplete:
      on_prefill_complete(ev.id);
      break;
    case EventKind::kIterationComplete:
      on_iteration_complete(emitted);
      break;
    case EventKind::kScheduleTick:
      on_tick();
      break;
  }
  check_invariants();
  return emitted;
}

void Simulator::run_until(Seconds until) {
  while (!events_.empty() && events_.top().time <= until) step();
}

std::size_t Simulator::queue_len() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    n += e->waiting() && e->kv != KvLocation::kHost ? 1 : 0;
  }
  return n;
}

std::size_t Simulator::swapped_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e->swapped() ? 1 : 0;
  return n;
}

std::size_t Simulator::running_count() const { return batch_.size(); }

RequestState Simulator::state(RequestId id) const { return entry(id).state; }

std::size_t Simulator::generated(RequestId id) const {
  return entry(id).generated;
}

std::size_t Simulator::preemptions(RequestId id) const {
  return entry(id).preemptions;
}

const std::vector<Seconds>& Simulator::generation_times(RequestId id) const {
  return entry(id).gen_times;
}

const TokenPacer& Simulator::pacer(RequestId id) const {
  return entry(id).pacer;
}

void Simulator::on_arrival(RequestId id) {
  auto& e = entry(id);
  e.arrived = true;
  if (!engine_busy_ && !tick_pending_) {
    push(clock_, EventKind::kScheduleTick, 0);
    tick_pending_ = true;
  }
  record_series();
}

void Simulator::on_swap_complete(RequestId id) {
  auto& e = entry(id);
  kv_used_ -= e.held;
  e.held = 0;
  e.kv = KvLocation::kHost;
  e.swapping_out = false;
}

void Simulator::on_prefill_complete(RequestId id) {
  auto& e = entry(id);
  e.admitting = false;
  e.state = RequestState::kRunning;
  e.kv = KvLocation::kDevice;
  e.held = e.context();
  kv_used_ += e.held;
}

void Simulator::send(Entry& e, Seconds at) {
  if (e.unsent == 0) return;
  const Seconds wire = at + config_.network_delay;
  e.pacer.push(e.unsent, wire);
  for (std::size_t k = 0; k < e.unsent; ++k) e.track->append(wire);
  e.unsent = 0;
}

void Simulator::on_iteration_complete(std::vector<TokenEvent>& emitted) {
  std::vector<RequestId> still_running;
  for (RequestId id : batch_) {
    auto& e = entry(id);
    emitted.push_back(TokenEvent{id, e.generated, clock_});
    ++e.generated;
    ++e.held;
    ++kv_used_;
    e.gen_times.push_back(clock_);
    ++e.unsent;
    if (e.generated >= e.req.output_len) {
      send(e, clock_);
      e.pacer.flush_on_finish(clock_ + config_.network_delay);
      kv_used_ -= e.held;
      e.held = 0;
      e.kv = KvLocation::kNone;
      e.state = RequestState::kFinished;
    } else {
      if (e.unsent >= config_.chunk) send(e, clock_);
      still_running.push_back(id);
    }
  }
  batch_ = std::move(still_running);
  engine_busy_ = false;
  push(clock_, EventKind::kScheduleTick, 0);
  tick_pending_ = true;
}

std::size_t Simulator::swapping_slots() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e->swapping_out ? e->held : 0;
  return n;
}

std::vector<RequestSnapshot> Simulator::snapshots() const {
  std::vector<RequestSnapshot> out;
  const bool stale = config_.staleness > 0.0;
  for (const auto& ep : entries_) {
    const auto& e = *ep;
    const bool running = e.state == RequestState::kRunning;
    if (!running && !e.waiting()) continue;
    RequestSnapshot s;
    s.id = e.req.id;
    s.arrival = e.req.arrival;
    s.input_len = e.req.input_len;
    s.context_len = e.context() + 1;
    s.generated = e.generated;
    s.expected_total = e.req.output_len;
    s.params = e.req.params;
    s.state = e.state;
    s.kv = e.kv;
    s.track = e.track;
    if (stale) {
      const auto seen = e.track->deliveries();
      s.visible_tokens = static_cast<std::size_t>(
          std::upper_bound(seen.begin(), seen.end(),
                           clock_ - config_.staleness) -
          seen.begin());
    }
    out.push_back(std::move(s));
  }
  return out;
}

void Simulator::on_tick() {
  tick_pending_ = false;
  if (engine_busy_) return;
  const auto snaps = snapshots();
  if (snaps.empty()) {
    record_series();
    return;
  }
  const auto& profile = config_.profile;
  const std::size_t capacity = profile.kv_capacity - swapping_slots();
  std::size_t needed = 0;
  std::size_t running = 0;
  bool any_waiting = false;
  for (const auto& s : snaps) {
    if (s.running()) {
      needed += s.context_len;
      ++running;
    } else {
      any_waiting = true;
    }
  }

  PolicyContext ctx;
  ctx.snapshots = snaps;
  ctx.profile = &profile;
  ctx.capacity = capacity;
  ctx.now = clock_;
  ctx.kv_occupancy =
      std::min(1.0, static_cast<double>(needed) /
                        static_cast<double>(profile.kv_capacity));
  ctx.current_decode_latency =
      decode_latency(profile, std::max<std::size_t>(running, 1));
  ctx.overflow = needed > capacity;

  PolicyOutcome outcome = decide(config_.policy, ctx);
  auto& d = outcome.decision;

  const std::size_t kept = running - std::min(running, d.preempt_list.size());
  if (kept == 0 && d.admit_list.empty() && any_waiting) {
    // Never leave the engine idle with work queued.
    d = fcfs_policy(snaps, capacity);
  }

  if (observer_) observer_(clock_, snaps, d);

  Seconds t = clock_;
  std::vector<RequestId> next_batch;
  std::size_t batch_slots = 0;
  for (RequestId id : d.preempt_list) {
    auto& e = entry(id);
    if (e.state != RequestState::kRunning) {
      throw InvariantViolation("preempting a request that is not running");
    }
    send(e, clock_);
    ++e.preemptions;
    e.state = RequestState::kPreempted;
    const auto mech =
        preemption_mechanism(config_.policy, profile, e.context());
    if (mech == PreemptionMechanism::kRecompute) {
      kv_used_ -= e.held;
      e.held = 0;
      e.kv = KvLocation::kNone;
    } else {
      t += preemption_overhead(profile, std::max<std::size_t>(e.held, 1),
                               PreemptionMechanism::kSwap)
               .preempt;
      e.swapping_out = true;
      push(t, EventKind::kSwapComplete, id);
    }
  }
  for (RequestId id : batch_) {
    const auto& e = entry(id);
    if (e.state == RequestState::kRunning) {
      next_batch.push_back(id);
      batch_slots += e.context() + 1;
    }
  }
  for (RequestId id : d.admit_list) {
    auto& e = entry(id);
    if (!e.waiting()) {
      throw InvariantViolation("admitting a request that is not waiting");
    }
    const std::size_t held = e.context();
    t += e.kv == KvLocation::kHost
             ? preemption_overhead(profile, held, PreemptionMechanism::kSwap)
                   .resume
             : prefill_latency(profile, held);
    e.admitting = true;
    push(t, EventKind::kPrefillComplete, id);
    next_batch.push_back(id);
    batch_slots += held + 1;
  }
  if (batch_slots > profile.kv_capacity) {
    throw InvariantViolation("decision exceeds the KV capacity");
  }
  std::sort(next_batch.begin(), next_batch.end());
  batch_ = std::move(next_batch);

  if (!d.admit_list.empty() || !d.preempt_list.empty()) {
    decisions_.push_back(
        AppliedDecision{clock_, d.admit_list, d.preempt_list, outcome.triggered});
  }
  stall_time_ += t - clock_;
  if (!batch_.empty()) {
    decode_time_ += decode_latency(profile, batch_.size());
    engine_busy_ = true;
    push(t + decode_latency(profile, batch_.size()),
         EventKind::kIterationComplete, 0);
  }
  record_series();
}

void Simulator::record_series() {
  SeriesPoint p{clock_, queue_len(), batch_.size(),
                static_cast<double>(kv_used_) /
                    static_cast<double>(config_.profile.kv_capacity),
                swapped_count()};
  if (!series_.empty() && series_.back().time == p.time) {
    series_.back() = p;
  } else {
    series_.push_back(p);
  }
}

void Simulator::check_invariants() const {
  if (kv_used_ > config_.profile.kv_capacity) {
    throw InvariantViolation("KV usage above capacity");
  }
}

SimulationReport Simulator::report(Seconds eval_time) const {
  SimulationReport r;
  r.rejected = rejected_;
  r.series = series_;
  r.end_time = clock_;
  for (const auto& ep : entries_) {
    const auto& e = *ep;
    if (!e.arrived) continue;
    RequestOutcome o;
    o.id = e.req.id;
    o.arrival = e.req.arrival;
    o.preemptions = e.preemptions;
    const auto recv = e.track->deliveries();
    TokenTimeline tl{e.req.arrival, {recv.begin(), recv.end()}};
    if (!recv.empty()) {
      o.ttft = recv.front() - e.req.arrival;
      const Seconds span = recv.back() - recv.front();
      if (recv.size() >= 2 && span > 0.0) {
        o.avg_tds = static_cast<double>(recv.size() - 1) / span;
      }
    }
    if (e.state == RequestState::kFinished) {
      o.qoe = qoe(tl, e.req.params).value;
    } else {
      o.qoe = evaluate_partial(tl, e.req.params,
                               std::max(eval_time, e.req.arrival),
                               e.req.output_len)
                  .value;
    }
    r.requests.push_back(o);
  }
  return r;
}

SimulationReport simulate(const SimConfig& config,
                          const std::vector<Request>& requests,
                          Seconds until) {
  Simulator sim(config, requests);
  sim.run_until(until);
  return sim.report(std::isfinite(until) ? until : sim.clock());
}

}  // namespace qoesim
