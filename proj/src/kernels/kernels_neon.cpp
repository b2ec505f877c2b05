// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include <arm_neon.h>

#include "kernels_internal.h"

namespace qoesim::kernels::detail {
namespace {

AreaSums area_sums_neon(const double* actual, const double* ideal,
                        std::size_t n) {
  AreaSums sums;
  if (n == 0) return sums;
  const double last = actual[n - 1];
  const float64x2_t last_v = vdupq_n_f64(last);
  float64x2_t delay_acc = vdupq_n_f64(0.0);
  float64x2_t whole_acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t a = vld1q_f64(actual + i);
    const float64x2_t t = vld1q_f64(ideal + i);
    delay_acc = vaddq_f64(delay_acc, vsubq_f64(a, t));
    whole_acc = vaddq_f64(whole_acc, vsubq_f64(last_v, t));
  }
  sums.delay = vgetq_lane_f64(delay_acc, 0) + vgetq_lane_f64(delay_acc, 1);
  sums.whole = vgetq_lane_f64(whole_acc, 0) + vgetq_lane_f64(whole_acc, 1);
  for (; i < n; ++i) {
    sums.delay += actual[i] - ideal[i];
    sums.whole += last - ideal[i];
  }
  return sums;
}

void knapsack_relax_neon(const double* skip, const double* take, double gain,
                         std::size_t weight, double* out, std::uint8_t* choice,
                         std::size_t len) {
  std::size_t m = 0;
  const std::size_t head = weight < len ? weight : len;
  for (; m < head; ++m) {
    out[m] = skip[m];
    choice[m] = 0;
  }
  const float64x2_t gain_v = vdupq_n_f64(gain);
  for (; m + 2 <= len; m += 2) {
    const float64x2_t keep = vld1q_f64(skip + m);
    const float64x2_t served = vaddq_f64(vld1q_f64(take + (m - weight)), gain_v);
    const uint64x2_t better = vcgtq_f64(served, keep);
    vst1q_f64(out + m, vbslq_f64(better, served, keep));
    choice[m] = static_cast<std::uint8_t>(vgetq_lane_u64(better, 0) & 1);
    choice[m + 1] = static_cast<std::uint8_t>(vgetq_lane_u64(better, 1) & 1);
  }
  for (; m < len; ++m) {
    out[m] = skip[m];
    choice[m] = 0;
    const double served = take[m - weight] + gain;
    if (served > out[m]) {
      out[m] = served;
      choice[m] = 1;
    }
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{"neon", &area_sums_neon, &knapsack_relax_neon};
  return table;
}

}  // namespace qoesim::kernels::detail
