// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "qoesim/scheduler.h"
#include "support/oracles.h"

namespace qoesim {
namespace {

using testing::Gen;

// Snapshots plus the plain timelines they were built from, so the loss can
// be recomputed without ConsumptionTrack.
struct Scene {
  std::vector<RequestSnapshot> snaps;
  std::map<RequestId, TokenTimeline> timelines;

  void add(RequestId id, const TokenTimeline& t, const QoeParams& p,
           std::size_t input, std::size_t total, bool running) {
    snaps.push_back(make_snapshot(
        id, t, p, input, t.delivery_times.size(), total,
        running ? RequestState::kRunning : RequestState::kQueued,
        running ? KvLocation::kDevice : KvLocation::kNone));
    timelines[id] = t;
  }
  const RequestSnapshot& at(RequestId id) const {
    for (const auto& s : snaps) {
      if (s.id == id) return s;
    }
    throw std::out_of_range("no such request");
  }
};

// QoE at `eval` with the remaining tokens appended every `tau` after `start`.
double oracle_projected(const Scene& scene, RequestId id, double start,
                        double tau, double eval) {
  const auto& s = scene.at(id);
  auto t = scene.timelines.at(id);
  const std::size_t total = std::max<std::size_t>(s.expected_total, 1);
  for (std::size_t k = s.generated; k < total; ++k) {
    start += tau;
    t.delivery_times.push_back(start);
  }
  return evaluate_partial(t, s.params, eval, total).value;
}

double oracle_loss(const Scene& scene, const std::set<RequestId>& stopped,
                   double before, double stall, double tau, double horizon) {
  const double eval = before + stall + horizon;
  double loss = 0.0;
  for (const auto& s : scene.snaps) {
    if (!s.running() || stopped.count(s.id)) continue;
    loss += oracle_projected(scene, s.id, before, tau, eval) -
            oracle_projected(scene, s.id, before + stall, tau, eval);
  }
  return loss;
}

// Seven running readers at 20 tok/s whose next token is due right now, and
// three arrivals. Every request holds 100 KV slots; the cache is full.
struct SevenRunning {
  static constexpr double kNow = 2.0;
  static constexpr std::size_t kCap = 700;
  Scene scene;
  QoeParams p{1.0, 20.0};
  LatencyProfile profile = LatencyProfile::synthetic_default();

  SevenRunning() {
    for (RequestId id = 1; id <= 7; ++id) {
      scene.add(id, {0.0, ideal_timeline(0.0, p, 20)}, p, 80, 200, true);
    }
    for (RequestId id = 8; id <= 10; ++id) {
      scene.add(id, {1.5, {}}, p, 100, 200, false);
    }
  }

  ScheduleDecision decision(double gain8) const {
    ScheduleDecision d;
    d.batch_size = 7;
    for (RequestId id = 1; id <= 3; ++id) d.gain[id] = 0.001 * id;
    for (RequestId id = 4; id <= 7; ++id) d.gain[id] = 0.5;
    d.gain[8] = gain8;
    d.gain[9] = 0.9;
    d.gain[10] = 0.8;
    for (const auto& [id, g] : d.gain) d.priority[id] = g / 100.0;
    d.serve_set = {4, 5, 6, 7, 8, 9, 10};
    d.admit_list = {9, 10, 8};
    d.preempt_list = {1, 2, 3};
    return d;
  }

  // Loss charged to the third pair: R1 and R2 are gone, R3 goes with it, and
  // two prefills already precede it.
  double third_pair_loss() const {
    const double prefill = prefill_latency(profile, 100);
    return oracle_loss(scene, {1, 2, 3}, kNow + 2 * prefill, prefill,
                       decode_latency(profile, 7), 2.0);
  }
};

RefineOptions recompute() {
  return RefineOptions{PreemptionMechanism::kRecompute, 2.0};
}

TEST(Refine, DropsTheTrailingPairThatCostsMoreThanItGains) {
  SevenRunning f;
  const double loss = f.third_pair_loss();
  ASSERT_GT(loss, 0.0);
  const auto out = refine(f.decision(0.5 * loss), f.scene.snaps, f.profile,
                          SevenRunning::kCap, SevenRunning::kNow, recompute());
  EXPECT_EQ(out.admit_list, (std::vector<RequestId>{9, 10}));
  EXPECT_EQ(out.preempt_list, (std::vector<RequestId>{1, 2}));
  EXPECT_EQ(out.serve_set, (std::vector<RequestId>{3, 4, 5, 6, 7, 9, 10}));
  EXPECT_LE(footprint(f.scene.snaps, out.serve_set), SevenRunning::kCap);
}

TEST(Refine, KeepsThePairOnceItsGainClearsTheLoss) {
  SevenRunning f;
  const double loss = f.third_pair_loss();
  const auto out = refine(f.decision(2.0 * loss), f.scene.snaps, f.profile,
                          SevenRunning::kCap, SevenRunning::kNow, recompute());
  EXPECT_EQ(out.admit_list, (std::vector<RequestId>{9, 10, 8}));
  EXPECT_EQ(out.preempt_list, (std::vector<RequestId>{1, 2, 3}));
}

TEST(Refine, FirstRejectionCancelsTheRest) {
  SevenRunning f;
  auto d = f.decision(0.9);
  d.gain[9] = 1e-9;
  const auto out = refine(d, f.scene.snaps, f.profile, SevenRunning::kCap,
                          SevenRunning::kNow, recompute());
  EXPECT_TRUE(out.admit_list.empty());
  EXPECT_TRUE(out.preempt_list.empty());
  EXPECT_EQ(out.serve_set, (std::vector<RequestId>{1, 2, 3, 4, 5, 6, 7}));
}

TEST(Refine, AdmitIntoFreeSlotsIsKeptWhateverItsGain) {
  SevenRunning f;
  auto d = f.decision(0.0);
  d.gain[9] = 0.0;
  d.admit_list = {9};
  d.preempt_list = {};
  const auto out =
      refine(d, f.scene.snaps, f.profile, 800, SevenRunning::kNow, recompute());
  EXPECT_EQ(out.admit_list, (std::vector<RequestId>{9}));
  EXPECT_TRUE(out.preempt_list.empty());
}

TEST(Refine, OverflowPreemptionsAreAlwaysTaken) {
  SevenRunning f;
  auto d = f.decision(0.0);
  d.gain[9] = 1e-9;
  const auto out = refine(d, f.scene.snaps, f.profile, 650, SevenRunning::kNow,
                          recompute());
  EXPECT_EQ(out.preempt_list, (std::vector<RequestId>{1}));
  EXPECT_TRUE(out.admit_list.empty());
}

TEST(Refine, FreeOverheadsLeaveTheDecisionAlone) {
  Gen g(61);
  auto profile = LatencyProfile::synthetic_default();
  profile.prefill_throughput = std::numeric_limits<double>::infinity();
  profile.swap_bandwidth = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 200; ++k) {
    Scene scene;
    const double now = 10.0;
    const auto cap = g.integer(50, 400);
    std::size_t used = 0;
    for (RequestId id = 0, n = g.integer(1, 12); id < n; ++id) {
      const auto p = testing::random_params(g);
      const double arrival = g.uniform(0.0, now);
      std::vector<double> seen;
      for (double x : testing::random_deliveries(g, arrival, p, 30)) {
        if (x <= now) seen.push_back(x);
      }
      const auto input = g.integer(1, 60);
      const bool run = !seen.empty() && used + input + seen.size() <= cap &&
                       g.chance(0.7);
      if (run) used += input + seen.size();
      scene.add(id, {arrival, run ? seen : std::vector<double>{}}, p, input,
                (run ? seen.size() : 0) + g.integer(1, 50), run);
    }
    const auto d = solve(scene.snaps, profile, cap, now, {});
    for (auto mech :
         {PreemptionMechanism::kRecompute, PreemptionMechanism::kSwap}) {
      const auto out = refine(d, scene.snaps, profile, cap, now,
                              RefineOptions{mech, 2.0});
      ASSERT_EQ(out.serve_set, d.serve_set) << k;
      ASSERT_EQ(out.admit_list, d.admit_list) << k;
      ASSERT_EQ(out.preempt_list, d.preempt_list) << k;
    }
  }
}

TEST(Refine, EveryKeptDisplacementPaysForItself) {
  Gen g(62);
  const auto profile = LatencyProfile::synthetic_default();
  int displacing = 0;
  for (int k = 0; k < 300; ++k) {
    Scene scene;
    const double now = 10.0;
    const auto cap = g.integer(100, 600);
    std::size_t used = 0;
    for (RequestId id = 0, n = g.integer(2, 14); id < n; ++id) {
      QoeParams p{g.uniform(0.5, 2.0), g.uniform(4.0, 25.0)};
      const double arrival = g.uniform(0.0, now - 1.0);
      std::vector<double> seen;
      for (double x : testing::random_deliveries(g, arrival, p, 80)) {
        if (x <= now) seen.push_back(x);
      }
      const auto input = g.integer(10, 150);
      const bool run = !seen.empty() && used + input + seen.size() <= cap &&
                       g.chance(0.7);
      if (run) used += input + seen.size();
      scene.add(id, {arrival, run ? seen : std::vector<double>{}}, p, input,
                (run ? seen.size() : 0) + g.integer(1, 80), run);
    }
    const auto d = solve(scene.snaps, profile, cap, now, {});
    const auto mech = g.chance(0.5) ? PreemptionMechanism::kRecompute
                                    : PreemptionMechanism::kSwap;
    const auto out =
        refine(d, scene.snaps, profile, cap, now, RefineOptions{mech, 2.0});

    // Output lists are prefixes of the input lists.
    ASSERT_LE(out.admit_list.size(), d.admit_list.size());
    ASSERT_TRUE(std::equal(out.admit_list.begin(), out.admit_list.end(),
                           d.admit_list.begin()));
    ASSERT_LE(out.preempt_list.size(), d.preempt_list.size());
    ASSERT_TRUE(std::equal(out.preempt_list.begin(), out.preempt_list.end(),
                           d.preempt_list.begin()));
    ASSERT_LE(footprint(scene.snaps, out.serve_set), cap);

    // Replay the kept pairs and recompute each loss.
    const double tau = decode_latency(profile, std::max<std::size_t>(
                                                   d.batch_size, 1));
    std::set<RequestId> stopped;
    std::size_t next = 0;
    double stall_so_far = 0.0;
    for (RequestId a : out.admit_list) {
      const auto& admit = scene.at(a);
      double stall = prefill_latency(profile, admit.input_len);
      std::set<RequestId> after = stopped;
      std::size_t slots = used;
      for (RequestId r : after) slots -= scene.at(r).context_len;
      const std::size_t first = next;
      while (slots + admit.context_len > cap) {
        const auto& victim = scene.at(out.preempt_list.at(next++));
        slots -= victim.context_len;
        after.insert(victim.id);
        stall += preemption_overhead(profile,
                                     victim.input_len + victim.generated, mech)
                     .preempt;
      }
      if (next > first && stall > 0.0) {
        ++displacing;
        const double loss = oracle_loss(scene, after, now + stall_so_far,
                                        stall, tau, 2.0);
        ASSERT_GT(d.gain.at(a), loss - 1e-9) << k;
      }
      stopped = after;
      used += admit.context_len;
      stall_so_far += stall;
    }
  }
  EXPECT_GT(displacing, 0);
}

}  // namespace
}  // namespace qoesim
