// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

// Data-parallel inner loops shared by the QoE metric and the knapsack solver.
//
// Every kernel has a scalar reference implementation. Vector variants (AVX2 on
// x86-64, NEON on aarch64) are selected once at startup from the CPU feature
// set; QOESIM_SIMD=scalar|avx2|neon|auto overrides the choice. The vector
// variants must agree with the reference: bit-exactly for knapsack_relax,
// within summation reordering error for area_sums.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace qoesim::kernels {

struct AreaSums {
  double delay = 0.0;  // sum(actual[i] - ideal[i])
  double whole = 0.0;  // sum(actual.back() - ideal[i])
};

struct KernelTable {
  std::string_view name;

  AreaSums (*area_sums)(const double* actual, const double* ideal,
                        std::size_t n);

  // out[m] = skip[m]; choice[m] = 0, then for m >= weight, when
  // take[m - weight] + gain > out[m]: out[m] = take[m - weight] + gain and
  // choice[m] = 1. All rows have length `len`.
  void (*knapsack_relax)(const double* skip, const double* take, double gain,
                         std::size_t weight, double* out,
                         std::uint8_t* choice, std::size_t len);
};

const KernelTable& scalar();

// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* avx2();
const KernelTable* neon();

// The table chosen for this process.
const KernelTable& active();

inline AreaSums area_sums(std::span<const double> actual,
                          std::span<const double> ideal) {
  return active().area_sums(actual.data(), ideal.data(), actual.size());
}

inline void knapsack_relax(std::span<const double> skip,
                           std::span<const double> take, double gain,
                           std::size_t weight, std::span<double> out,
                           std::span<std::uint8_t> choice) {
  active().knapsack_relax(skip.data(), take.data(), gain, weight, out.data(),
                          choice.data(), out.size());
}

}  // namespace qoesim::kernels
