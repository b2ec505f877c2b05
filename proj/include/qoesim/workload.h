// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

// Request traces: CSV replay, Poisson and cyclic-burst generators, and the
// rules that give each request its QoE parameters.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qoesim/qoe.h"
#include "qoesim/types.h"

namespace qoesim {

using Rng = std::mt19937_64;

struct TraceRecord {
  Seconds arrival_s = 0.0;
  std::size_t input_len = 1;
  std::size_t output_len = 1;
  std::optional<Seconds> ttft_target_s;
  std::optional<double> consumption_speed_tps;

  bool operator==(const TraceRecord&) const = default;
};

// Lognormal with the given mean and standard deviation, rounded and clamped
// to [1, max].
struct LengthDist {
  double mean = 1.0;
  double stddev = 0.0;
  std::size_t max = 1;

  std::size_t sample(Rng& rng) const;
};

struct LengthModel {
  LengthDist input;
  LengthDist output;

  // "sharegpt", "arxiv" or "coding"; throws ConfigError otherwise.
  static LengthModel preset(const std::string& name);
};

// Discrete reading-speed distribution.
struct SpeedDist {
  std::vector<double> speeds;
  std::vector<double> weights;  // empty means equal weights

  static SpeedDist default_buckets();
  static SpeedDist single(double speed);
  void validate() const;
  double sample(Rng& rng) const;
};

struct BurstSpec {
  double intensity = 2.0;
  double duration_frac = 0.35;
  Seconds cycle_len_s = 1200.0;
  double mean_rate_rps = 1.0;

  // Throws ConfigError, including when intensity * duration_frac > 1.
  void validate() const;
  double burst_rate() const { return intensity * mean_rate_rps; }
  double base_rate() const;
  // Whether time t falls inside a burst phase (bursts sit mid-cycle).
  bool in_burst(Seconds t) const;
};

// TTFT target from the prompt length; speed drawn from `speeds`.
Seconds ttft_target_for(std::size_t input_len);
QoeParams assign_qoe_params(std::size_t input_len, const SpeedDist& speeds,
                            Rng& rng);

std::vector<TraceRecord> gen_poisson(double rate_rps, Seconds duration_s,
                                     const LengthModel& lengths, Rng& rng);
std::vector<TraceRecord> gen_cyclic_burst(const BurstSpec& spec,
                                          Seconds duration_s,
                                          const LengthModel& lengths, Rng& rng);

// Header: arrival_s,input_len,output_len,ttft_target_s,consumption_speed_tps
// The last two columns may be empty.
std::vector<TraceRecord> read_trace(std::istream& in,
                                    const std::string& source = "<stream>");
std::vector<TraceRecord> load_trace(const std::string& path);
void write_trace(std::ostream& out, const std::vector<TraceRecord>& records);
void save_trace(const std::string& path,
                const std::vector<TraceRecord>& records);

struct Request {
  RequestId id = 0;
  Seconds arrival = 0.0;
  std::size_t input_len = 1;
  std::size_t output_len = 1;
  QoeParams params;
};

// Ids follow arrival order. Missing QoE fields are filled from `speeds` and
// the TTFT rule.
std::vector<Request> materialize(const std::vector<TraceRecord>& records,
                                 const SpeedDist& speeds, Rng& rng);

}  // namespace qoesim
