// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

// Scheduling policies the simulator can run: the QoE-aware knapsack
// scheduler and the FCFS and least-slack baselines.

#pragma once

#include <optional>
#include <span>
#include <string>

#include "qoesim/latency_model.h"
#include "qoesim/scheduler.h"

namespace qoesim {

enum class PolicyKind { kAndes, kFcfs, kLqsf };

const char* to_string(PolicyKind kind);
PolicyKind parse_policy(const std::string& name);
SolverKind parse_solver(const std::string& name);
Objective parse_objective(const std::string& name);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kAndes;
  SolveOptions solve;
  double watermark = 0.90;
  bool refiner = true;
  // Forced preemption mechanism; nullopt picks the cheaper one. FCFS always
  // recomputes.
  std::optional<PreemptionMechanism> mechanism;

  void validate() const;
};

struct PolicyContext {
  std::span<const RequestSnapshot> snapshots;
  const LatencyProfile* profile = nullptr;
  std::size_t capacity = 0;
  Seconds now = 0.0;
  double kv_occupancy = 0.0;
  Seconds current_decode_latency = 0.0;
  // The running set no longer fits; the policy must preempt.
  bool overflow = false;
};

struct PolicyOutcome {
  ScheduleDecision decision;
  bool triggered = false;  // whether the full solver ran
};

PolicyOutcome decide(const PolicyConfig& config, const PolicyContext& ctx);

PreemptionMechanism preemption_mechanism(const PolicyConfig& config,
                                         const LatencyProfile& profile,
                                         std::size_t held_tokens);

}  // namespace qoesim
