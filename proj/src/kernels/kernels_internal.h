// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "qoesim/kernels.h"

namespace qoesim::kernels::detail {

const KernelTable& scalar_table();
#if defined(QOESIM_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(QOESIM_HAVE_NEON)
const KernelTable& neon_table();
#endif

}  // namespace qoesim::kernels::detail
