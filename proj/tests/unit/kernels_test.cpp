// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include "qoesim/kernels.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "support/oracles.h"

namespace qoesim::kernels {
namespace {

using qoesim::testing::Gen;

std::vector<const KernelTable*> vector_tables() {
  std::vector<const KernelTable*> out;
  if (const auto* t = avx2()) out.push_back(t);
  if (const auto* t = neon()) out.push_back(t);
  return out;
}

TEST(Kernels, ScalarAreaSumsByHand) {
  const std::vector<double> actual = {1.0, 2.0, 5.0};
  const std::vector<double> ideal = {1.0, 2.0, 3.0};
  const auto s = scalar().area_sums(actual.data(), ideal.data(), 3);
  EXPECT_DOUBLE_EQ(s.delay, 2.0);
  EXPECT_DOUBLE_EQ(s.whole, 9.0);
  const auto e = scalar().area_sums(actual.data(), ideal.data(), 0);
  EXPECT_EQ(e.delay, 0.0);
  EXPECT_EQ(e.whole, 0.0);
}

TEST(Kernels, ScalarRelaxByHand) {
  const std::vector<double> skip = {0.0, 1.0, 1.0, 2.0};
  const std::vector<double> take = {0.0, 0.5, 2.0, 2.0};
  std::vector<double> out(4);
  std::vector<std::uint8_t> choice(4);
  scalar().knapsack_relax(skip.data(), take.data(), 0.75, 2, out.data(),
                          choice.data(), 4);
  EXPECT_EQ(out, (std::vector<double>{0.0, 1.0, 1.0, 2.0}));
  EXPECT_EQ(choice, (std::vector<std::uint8_t>{0, 0, 0, 0}));
  scalar().knapsack_relax(skip.data(), take.data(), 1.5, 2, out.data(),
                          choice.data(), 4);
  EXPECT_EQ(out, (std::vector<double>{0.0, 1.0, 1.5, 2.0}));
  EXPECT_EQ(choice, (std::vector<std::uint8_t>{0, 0, 1, 0}));
}

TEST(Kernels, ActiveTableIsKnown) {
  const auto name = active().name;
  EXPECT_TRUE(name == "scalar" || name == "avx2" || name == "neon") << name;
}

TEST(Kernels, VectorAreaSumsAgreeWithScalar) {
  Gen g(21);
  for (const auto* t : vector_tables()) {
    for (int k = 0; k < 500; ++k) {
      const auto n = g.integer(0, 300);
      std::vector<double> ideal(n), actual(n);
      double a = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        ideal[i] = 1.0 + 0.2 * static_cast<double>(i);
        a = std::max(a + 0.2, ideal[i] + g.uniform(0.0, 3.0));
        actual[i] = a;
      }
      const auto want = scalar().area_sums(actual.data(), ideal.data(), n);
      const auto got = t->area_sums(actual.data(), ideal.data(), n);
      const double tol = 1e-12 * (1.0 + std::abs(want.whole));
      ASSERT_NEAR(got.delay, want.delay, tol) << t->name << " n=" << n;
      ASSERT_NEAR(got.whole, want.whole, tol) << t->name << " n=" << n;
    }
  }
}

TEST(Kernels, VectorRelaxIsBitExact) {
  Gen g(22);
  for (const auto* t : vector_tables()) {
    for (int k = 0; k < 500; ++k) {
      const auto len = g.integer(1, 200);
      const auto weight = g.integer(0, len + 3);
      const double gain = g.chance(0.1) ? 0.0 : g.uniform(-0.5, 1.0);
      std::vector<double> skip(len), take(len);
      for (std::size_t i = 0; i < len; ++i) {
        skip[i] = g.chance(0.1) ? -INFINITY : g.uniform(0.0, 5.0);
        take[i] = g.chance(0.1) ? -INFINITY : g.uniform(0.0, 5.0);
      }
      std::vector<double> out_s(len), out_v(len);
      std::vector<std::uint8_t> ch_s(len), ch_v(len);
      scalar().knapsack_relax(skip.data(), take.data(), gain, weight,
                              out_s.data(), ch_s.data(), len);
      t->knapsack_relax(skip.data(), take.data(), gain, weight, out_v.data(),
                        ch_v.data(), len);
      ASSERT_EQ(0, std::memcmp(out_s.data(), out_v.data(),
                               len * sizeof(double)))
          << t->name;
      ASSERT_EQ(ch_s, ch_v) << t->name;
    }
  }
}

}  // namespace
}  // namespace qoesim::kernels
