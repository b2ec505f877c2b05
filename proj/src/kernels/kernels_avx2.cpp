// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

// Built with -mavx2; only reachable after a runtime CPU check.

#include <immintrin.h>

#include "kernels_internal.h"

namespace qoesim::kernels::detail {
namespace {

double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

AreaSums area_sums_avx2(const double* actual, const double* ideal,
                        std::size_t n) {
  AreaSums sums;
  if (n == 0) return sums;
  const double last = actual[n - 1];
  const __m256d last_v = _mm256_set1_pd(last);
  __m256d delay_acc = _mm256_setzero_pd();
  __m256d whole_acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(actual + i);
    const __m256d t = _mm256_loadu_pd(ideal + i);
    delay_acc = _mm256_add_pd(delay_acc, _mm256_sub_pd(a, t));
    whole_acc = _mm256_add_pd(whole_acc, _mm256_sub_pd(last_v, t));
  }
  sums.delay = horizontal_sum(delay_acc);
  sums.whole = horizontal_sum(whole_acc);
  for (; i < n; ++i) {
    sums.delay += actual[i] - ideal[i];
    sums.whole += last - ideal[i];
  }
  return sums;
}

void knapsack_relax_avx2(const double* skip, const double* take, double gain,
                         std::size_t weight, double* out, std::uint8_t* choice,
                         std::size_t len) {
  std::size_t m = 0;
  const std::size_t head = weight < len ? weight : len;
  for (; m < head; ++m) {
    out[m] = skip[m];
    choice[m] = 0;
  }
  const __m256d gain_v = _mm256_set1_pd(gain);
  for (; m + 4 <= len; m += 4) {
    const __m256d keep = _mm256_loadu_pd(skip + m);
    const __m256d served =
        _mm256_add_pd(_mm256_loadu_pd(take + (m - weight)), gain_v);
    const __m256d better = _mm256_cmp_pd(served, keep, _CMP_GT_OQ);
    _mm256_storeu_pd(out + m, _mm256_blendv_pd(keep, served, better));
    const int bits = _mm256_movemask_pd(better);
    choice[m] = static_cast<std::uint8_t>(bits & 1);
    choice[m + 1] = static_cast<std::uint8_t>((bits >> 1) & 1);
    choice[m + 2] = static_cast<std::uint8_t>((bits >> 2) & 1);
    choice[m + 3] = static_cast<std::uint8_t>((bits >> 3) & 1);
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

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2", &area_sums_avx2, &knapsack_relax_avx2};
  return table;
}

}  // namespace qoesim::kernels::detail
