// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include "qoesim/policy.h"

#include <algorithm>

namespace qoesim {

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kAndes:
      return "andes";
    case PolicyKind::kFcfs:
      return "fcfs";
    case PolicyKind::kLqsf:
      return "lqsf";
  }
  return "?";
}

PolicyKind parse_policy(const std::string& name) {
  if (name == "andes") return PolicyKind::kAndes;
  if (name == "fcfs") return PolicyKind::kFcfs;
  if (name == "lqsf") return PolicyKind::kLqsf;
  throw ConfigError("unknown policy '" + name + "' (andes, fcfs, lqsf)");
}

SolverKind parse_solver(const std::string& name) {
  if (name == "greedy") return SolverKind::kGreedy;
  if (name == "dp") return SolverKind::kDp;
  throw ConfigError("unknown solver '" + name + "' (greedy, dp)");
}

Objective parse_objective(const std::string& name) {
  if (name == "average") return Objective::kAverage;
  if (name == "maxmin") return Objective::kMaxMin;
  if (name == "perfect-count") return Objective::kPerfectCount;
  throw ConfigError("unknown objective '" + name +
                    "' (average, maxmin, perfect-count)");
}

void PolicyConfig::validate() const {
  if (!(solve.horizon > 0.0)) throw ConfigError("delta_t must be > 0");
  if (!(watermark > 0.0 && watermark <= 1.0)) {
    throw ConfigError("watermark must be in (0, 1]");
  }
  if (!(solve.dp_budget > 0.0)) throw ConfigError("dp budget must be > 0");
}

PreemptionMechanism preemption_mechanism(const PolicyConfig& config,
                                         const LatencyProfile& profile,
                                         std::size_t held_tokens) {
  if (config.kind == PolicyKind::kFcfs) return PreemptionMechanism::kRecompute;
  if (config.mechanism) return *config.mechanism;
  return select_mechanism(profile, std::max<std::size_t>(held_tokens, 1));
}

PolicyOutcome decide(const PolicyConfig& config, const PolicyContext& ctx) {
  PolicyOutcome out;
  const auto& profile = *ctx.profile;
  if (config.kind == PolicyKind::kFcfs) {
    out.decision = fcfs_policy(ctx.snapshots, ctx.capacity);
    return out;
  }
  out.triggered = ctx.overflow ||
                  should_trigger(ctx.kv_occupancy, ctx.current_decode_latency,
                                 ctx.snapshots, config.watermark);
  if (!out.triggered) {
    out.decision = fcfs_policy(ctx.snapshots, ctx.capacity);
    return out;
  }

  if (config.kind == PolicyKind::kLqsf) {
    std::size_t running = 0;
    for (const auto& s : ctx.snapshots) running += s.running() ? 1 : 0;
    const std::size_t b = std::max<std::size_t>(running, 1);
    std::vector<double> values;
    values.reserve(ctx.snapshots.size());
    for (const auto& s : ctx.snapshots) {
      const auto g =
          estimate_gain(s, ctx.now, config.solve.horizon, profile, b, b);
      values.push_back(g.q_serve_at(b) - g.q_wait);
    }
    out.decision = lqsf_policy(ctx.snapshots, values, ctx.capacity);
  } else {
    out.decision =
        solve(ctx.snapshots, profile, ctx.capacity, ctx.now, config.solve);
  }
  if (config.refiner && config.kind == PolicyKind::kAndes) {
    out.decision =
        refine(out.decision, ctx.snapshots, profile, ctx.capacity, ctx.now,
               RefineOptions{config.mechanism, config.solve.horizon});
  }
  return out;
}

}  // namespace qoesim
