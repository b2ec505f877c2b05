// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include "qoesim/policy.h"

#include <gtest/gtest.h>

namespace qoesim {
namespace {

TEST(PolicyNames, ParseAndPrint) {
  for (auto k : {PolicyKind::kAndes, PolicyKind::kFcfs, PolicyKind::kLqsf}) {
    EXPECT_EQ(parse_policy(to_string(k)), k);
  }
  for (auto s : {SolverKind::kGreedy, SolverKind::kDp}) {
    EXPECT_EQ(parse_solver(to_string(s)), s);
  }
  for (auto o :
       {Objective::kAverage, Objective::kMaxMin, Objective::kPerfectCount}) {
    EXPECT_EQ(parse_objective(to_string(o)), o);
  }
  EXPECT_THROW(parse_policy("sjf"), ConfigError);
  EXPECT_THROW(parse_solver("ilp"), ConfigError);
  EXPECT_THROW(parse_objective("p99"), ConfigError);
}

TEST(PolicyConfig, Validate) {
  PolicyConfig c;
  EXPECT_NO_THROW(c.validate());
  c.solve.horizon = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PolicyConfig{};
  c.watermark = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PolicyConfig{};
  c.solve.dp_budget = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(PreemptionMechanism, FcfsAlwaysRecomputes) {
  LatencyProfile profile = LatencyProfile::synthetic_default();
  PolicyConfig c;
  c.kind = PolicyKind::kFcfs;
  c.mechanism = PreemptionMechanism::kSwap;
  EXPECT_EQ(preemption_mechanism(c, profile, 1000),
            PreemptionMechanism::kRecompute);
  c.kind = PolicyKind::kAndes;
  EXPECT_EQ(preemption_mechanism(c, profile, 1000), PreemptionMechanism::kSwap);
  c.mechanism.reset();
  EXPECT_EQ(preemption_mechanism(c, profile, 1000),
            select_mechanism(profile, 1000));
}

// Two running requests exactly on schedule at 5 tok/s plus one late arrival
// that fits in free slots.
struct Ctx {
  LatencyProfile profile = LatencyProfile::synthetic_default();
  std::vector<RequestSnapshot> snaps;

  Ctx() {
    const QoeParams p{1.0, 5.0};
    for (RequestId id : {0, 1}) {
      snaps.push_back(make_snapshot(id, {0.0, ideal_timeline(0.0, p, 21)}, p,
                                    50, 21, 100, RequestState::kRunning,
                                    KvLocation::kDevice));
    }
    snaps.push_back(make_snapshot(2, {3.0, {}}, p, 50, 0, 100,
                                  RequestState::kQueued));
  }

  PolicyContext at(double occupancy, std::size_t capacity = 1000) const {
    PolicyContext c;
    c.snapshots = snaps;
    c.profile = &profile;
    c.capacity = capacity;
    c.now = 5.0;
    c.kv_occupancy = occupancy;
    c.current_decode_latency = decode_latency(profile, 2);
    return c;
  }
};

TEST(Decide, QuietSystemFallsBackToArrivalOrder) {
  Ctx f;
  PolicyConfig c;
  const auto out = decide(c, f.at(0.2));
  EXPECT_FALSE(out.triggered);
  EXPECT_EQ(out.decision.serve_set, (std::vector<RequestId>{0, 1, 2}));
  EXPECT_EQ(out.decision.admit_list, (std::vector<RequestId>{2}));
}

TEST(Decide, FcfsNeverRunsTheSolver) {
  Ctx f;
  PolicyConfig c;
  c.kind = PolicyKind::kFcfs;
  EXPECT_FALSE(decide(c, f.at(0.99)).triggered);
}

TEST(Decide, HighOccupancyRunsTheSolver) {
  Ctx f;
  for (auto kind : {PolicyKind::kAndes, PolicyKind::kLqsf}) {
    PolicyConfig c;
    c.kind = kind;
    const auto out = decide(c, f.at(0.95));
    EXPECT_TRUE(out.triggered);
    EXPECT_EQ(out.decision.serve_set, (std::vector<RequestId>{0, 1, 2}));
  }
}

TEST(Decide, OverflowForcesTheSolver) {
  Ctx f;
  PolicyConfig c;
  auto ctx = f.at(0.2, 150);
  ctx.overflow = true;
  const auto out = decide(c, ctx);
  EXPECT_TRUE(out.triggered);
  EXPECT_LE(footprint(f.snaps, out.decision.serve_set), 150u);
}

TEST(Decide, RefinerOnlyNarrowsTheSolverDecision) {
  Ctx f;
  PolicyConfig with;
  PolicyConfig without;
  without.refiner = false;
  // Room for two of the three: the solver swaps in the late arrival.
  const auto a = decide(with, f.at(0.95, 150)).decision;
  const auto b = decide(without, f.at(0.95, 150)).decision;
  EXPECT_LE(a.admit_list.size(), b.admit_list.size());
  EXPECT_LE(a.preempt_list.size(), b.preempt_list.size());
  for (std::size_t i = 0; i < a.admit_list.size(); ++i) {
    EXPECT_EQ(a.admit_list[i], b.admit_list[i]);
  }
}

}  // namespace
}  // namespace qoesim
