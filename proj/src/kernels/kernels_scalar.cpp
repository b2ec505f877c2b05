// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include "kernels_internal.h"

namespace qoesim::kernels::detail {
namespace {

AreaSums area_sums_scalar(const double* actual, const double* ideal,
                          std::size_t n) {
  AreaSums sums;
  if (n == 0) return sums;
  const double last = actual[n - 1];
  for (std::size_t i = 0; i < n; ++i) {
    sums.delay += actual[i] - ideal[i];
    sums.whole += last - ideal[i];
  }
  return sums;
}

void knapsack_relax_scalar(const double* skip, const double* take, double gain,
                           std::size_t weight, double* out,
                           std::uint8_t* choice, std::size_t len) {
  for (std::size_t m = 0; m < len; ++m) {
    out[m] = skip[m];
    choice[m] = 0;
    if (m >= weight) {
      const double served = take[m - weight] + gain;
      if (served > out[m]) {
        out[m] = served;
        choice[m] = 1;
      }
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", &area_sums_scalar,
                                 &knapsack_relax_scalar};
  return table;
}

}  // namespace qoesim::kernels::detail
