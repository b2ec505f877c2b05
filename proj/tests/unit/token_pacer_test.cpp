// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include "qoesim/token_pacer.h"

#include <gtest/gtest.h>

#include <cmath>

#include "support/oracles.h"

namespace qoesim {
namespace {

using testing::Gen;

// Feeds deliveries to a pacer, grouping equal timestamps into one push.
void feed(TokenPacer& pacer, const std::vector<double>& deliveries) {
  std::size_t i = 0;
  while (i < deliveries.size()) {
    std::size_t j = i;
    while (j < deliveries.size() && deliveries[j] == deliveries[i]) ++j;
    pacer.push(j - i, deliveries[i]);
    i = j;
  }
}

TEST(TokenPacer, BurstIsReleasedAlongTheIdealLine) {
  TokenPacer pacer(0.0, {1.0, 2.0});
  pacer.push(10, 1.0);
  const auto& r = pacer.release_times();
  ASSERT_EQ(r.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_DOUBLE_EQ(r[i], 1.0 + 0.5 * static_cast<double>(i));
  }
  EXPECT_EQ(pacer.score().value, 1.0);
}

TEST(TokenPacer, LateTokenReleasesOnArrivalAndShiftsSuccessors) {
  TokenPacer pacer(0.0, {1.0, 2.0});
  pacer.push(1, 0.5);
  pacer.push(2, 3.0);
  EXPECT_EQ(pacer.release_times(), (std::vector<double>{1.0, 3.0, 3.5}));
}

TEST(TokenPacer, GapHiddenBySurplus) {
  // 20 tokens up front cover 10 s of reading at 2 tok/s; a 6 s gap in
  // generation is invisible.
  const QoeParams p{1.0, 2.0};
  TokenPacer pacer(0.0, p);
  pacer.push(20, 0.8);
  pacer.push(10, 6.8);
  const auto ideal = ideal_timeline(0.0, p, 30);
  EXPECT_EQ(pacer.release_times(), ideal);
  EXPECT_EQ(pacer.score().value, 1.0);
}

TEST(TokenPacer, Surplus) {
  TokenPacer pacer(0.0, {1.0, 1.0});
  pacer.push(5, 0.5);
  EXPECT_DOUBLE_EQ(pacer.surplus(1.0), 5.0);
  EXPECT_EQ(pacer.buffered(1.0), 5u);
  EXPECT_DOUBLE_EQ(pacer.surplus(3.0), 3.0);
  EXPECT_EQ(pacer.surplus(10.0), 0.0);
  EXPECT_EQ(pacer.buffered(10.0), 0u);
  pacer.flush_on_finish(10.0);
  EXPECT_TRUE(std::isinf(pacer.surplus(10.0)));
}

TEST(TokenPacer, FlushShowsTheRemainderAtOnce) {
  TokenPacer pacer(0.0, {1.0, 1.0});
  pacer.push(3, 0.5);
  const auto before = pacer.score();
  pacer.flush_on_finish(1.5);
  EXPECT_EQ(pacer.display_times(), (std::vector<double>{1.0, 1.5, 1.5}));
  EXPECT_EQ(pacer.release_times(), (std::vector<double>{1.0, 2.0, 3.0}));
  EXPECT_EQ(pacer.score().value, before.value);
}

TEST(TokenPacer, FlushWithNothingBuffered) {
  TokenPacer pacer(0.0, {1.0, 1.0});
  pacer.push(2, 0.5);
  pacer.flush_on_finish(5.0);
  EXPECT_EQ(pacer.display_times(), pacer.release_times());
}

TEST(TokenPacer, Errors) {
  TokenPacer pacer(1.0, {1.0, 1.0});
  EXPECT_THROW(pacer.push(1, 0.5), std::invalid_argument);
  pacer.push(1, 2.0);
  EXPECT_THROW(pacer.push(1, 1.5), std::invalid_argument);
  pacer.flush_on_finish(3.0);
  EXPECT_THROW(pacer.push(1, 3.0), PacerFinishedError);
  EXPECT_THROW(TokenPacer(0.0, {0.0, 1.0}), ConfigError);
  EXPECT_THROW(TokenPacer(0.0, {1.0, 1.0}).score(), EmptyTimelineError);
}

TEST(TokenPacer, BypassShowsArrivalsButScoresPacing) {
  TokenPacer paced(0.0, {1.0, 1.0});
  TokenPacer bypass(0.0, {1.0, 1.0}, true);
  for (auto* p : {&paced, &bypass}) {
    p->push(3, 0.5);
    p->push(1, 6.0);
  }
  EXPECT_EQ(bypass.display_times(), (std::vector<double>{0.5, 0.5, 0.5, 6.0}));
  EXPECT_EQ(bypass.score().value, paced.score().value);
}

TEST(TokenPacerProperty, MatchesTheMetricsConsumptionModel) {
  Gen g(71);
  for (int k = 0; k < 1000; ++k) {
    const auto p = testing::random_params(g);
    const double arrival = g.uniform(0.0, 20.0);
    const auto n = g.integer(1, 60);
    const auto d = testing::random_deliveries(g, arrival, p, n);
    TokenPacer pacer(arrival, p);
    feed(pacer, d);
    const auto ideal = ideal_timeline(arrival, p, n);
    const auto want = testing::brute_actual(d, ideal, p.consumption_speed);
    const auto& got = pacer.release_times();
    ASSERT_EQ(got.size(), n);
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_NEAR(got[i], want[i], 1e-9) << k;
      if (i > 0) {
        ASSERT_GE(got[i] - got[i - 1], 1.0 / p.consumption_speed - 1e-9);
      }
    }
    ASSERT_NEAR(pacer.score().value,
                testing::brute_qoe(d, arrival, p).value, 1e-9)
        << k;
  }
}

TEST(TokenPacerProperty, FlushNeverHurts) {
  Gen g(72);
  for (int k = 0; k < 500; ++k) {
    const auto p = testing::random_params(g);
    const auto n = g.integer(1, 40);
    const auto d = testing::random_deliveries(g, 0.0, p, n);
    TokenPacer pacer(0.0, p);
    feed(pacer, d);
    const double paced = pacer.score().value;
    pacer.flush_on_finish(d.back() + g.uniform(0.0, 2.0));
    const auto shown = pacer.display_times();
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_LE(shown[i], pacer.release_times()[i]);
      ASSERT_GE(shown[i], d[i]);
    }
    ASSERT_GE(qoe({0.0, shown}, p).value, paced - 1e-12);
    ASSERT_EQ(pacer.score().value, paced);
  }
}

TEST(TokenPacerProperty, SurplusIsZeroExactlyWhenNothingIsBuffered) {
  Gen g(73);
  for (int k = 0; k < 500; ++k) {
    const auto p = testing::random_params(g);
    const auto n = g.integer(1, 40);
    const auto d = testing::random_deliveries(g, 0.0, p, n);
    TokenPacer pacer(0.0, p);
    feed(pacer, d);
    const auto& r = pacer.release_times();
    for (int probe = 0; probe < 10; ++probe) {
      const double at = g.uniform(0.0, r.back() + 2.0);
      std::size_t held = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d[i] <= at + 1e-9 && r[i] >= at - 1e-9) ++held;
      }
      ASSERT_EQ(pacer.buffered(at), held);
      ASSERT_EQ(pacer.surplus(at) > 0.0, held > 0) << k << " at " << at;
    }
  }
}

}  // namespace
}  // namespace qoesim
