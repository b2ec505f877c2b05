// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <string_view>

#include <spdlog/spdlog.h>

#include "kernels_internal.h"

namespace qoesim::kernels {

const KernelTable& scalar() { return detail::scalar_table(); }

const KernelTable* avx2() {
#if defined(QOESIM_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &detail::avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon() {
#if defined(QOESIM_HAVE_NEON)
  // Advanced SIMD is mandatory on aarch64.
  return &detail::neon_table();
#else
  return nullptr;
#endif
}

namespace {

const KernelTable& select() {
  const char* env = std::getenv("QOESIM_SIMD");
  const std::string_view wanted = env != nullptr ? env : "auto";
  if (wanted == "scalar") return scalar();
  if (wanted == "avx2" || wanted == "auto") {
    if (const auto* t = avx2()) return *t;
  }
  if (wanted == "neon" || wanted == "auto") {
    if (const auto* t = neon()) return *t;
  }
  if (wanted != "auto") {
    spdlog::warn("QOESIM_SIMD={} is not available here; using scalar kernels",
                 wanted);
  }
  return scalar();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace qoesim::kernels
