// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "qoesim/types.h"

namespace qoesim {

enum class PreemptionMechanism { kSwap, kRecompute };

const char* to_string(PreemptionMechanism mechanism);

struct DecodePoint {
  std::size_t batch_size = 1;
  Seconds iteration_latency = 0.0;
};

// Executor cost model. Decode latency depends on batch size only; prefill and
// KV movement are linear in token count.
struct LatencyProfile {
  std::vector<DecodePoint> decode_points;
  double prefill_throughput = 5000.0;  // tokens/s
  double swap_bandwidth = 20000.0;     // tokens/s of KV state, each direction
  std::size_t kv_capacity = 100000;    // token slots

  // Throws ConfigError on unsorted knots, decreasing latency, non-positive
  // rates or capacity, or a non-positive extrapolated latency at B = 1.
  void validate() const;

  // Synthetic default: 0.02 s + 0.8 ms per request in the batch.
  static LatencyProfile synthetic_default();
};

// Piecewise-linear over the knots, flat beyond the last one, linear through
// the first two below the first one.
Seconds decode_latency(const LatencyProfile& profile, std::size_t batch_size);

Seconds prefill_latency(const LatencyProfile& profile, std::size_t input_len);

struct PreemptionCost {
  Seconds preempt = 0.0;
  Seconds resume = 0.0;
  Seconds total() const { return preempt + resume; }
};

PreemptionCost preemption_overhead(const LatencyProfile& profile,
                                   std::size_t context_len,
                                   PreemptionMechanism mechanism);

// Cheaper round trip wins; ties go to swap since it keeps computed state.
PreemptionMechanism select_mechanism(const LatencyProfile& profile,
                                     std::size_t context_len);

// Profile documents are JSON objects:
//   {"decode_points": [[1, 0.0208], [1024, 0.8392]],
//    "prefill_throughput": 5000, "swap_bandwidth": 20000,
//    "kv_capacity": 100000}
// Missing keys keep the synthetic defaults; decode_points entries may also be
// {"batch_size": b, "latency": s} objects.
LatencyProfile load_profile(const std::string& path);
LatencyProfile parse_profile(const std::string& json_text);
std::string profile_to_json(const LatencyProfile& profile);

}  // namespace qoesim
