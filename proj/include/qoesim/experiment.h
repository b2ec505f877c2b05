// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment configuration shared by the command line and config files, plus
// the drivers that turn a configuration into a simulation report.

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qoesim/report.h"
#include "qoesim/server_sim.h"
#include "qoesim/workload.h"

namespace qoesim {

enum class WorkloadKind { kTrace, kPoisson, kCyclicBurst };

struct ExperimentConfig {
  WorkloadKind workload = WorkloadKind::kCyclicBurst;
  std::string trace_path;
  // Unset for a generator means: calibrate to the no-burst throughput.
  std::optional<double> mean_rate;
  BurstSpec burst;
  std::optional<std::size_t> num_requests;
  std::optional<Seconds> duration;
  std::string lengths = "sharegpt";
  std::optional<std::size_t> max_input;
  std::optional<std::size_t> max_output;
  SpeedDist speeds = SpeedDist::default_buckets();
  std::optional<std::uint64_t> seed;
  std::string profile_path;
  std::optional<std::size_t> kv_capacity;
  SimConfig sim;
  Seconds until = std::numeric_limits<Seconds>::infinity();
  std::string output_dir;

  // Keys that were given explicitly, for contradiction checks.
  std::set<std::string> explicit_keys;

  // Throws ConfigError on a bad value or an unknown key.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  LengthModel length_model() const;
};

// Every key accepted by ExperimentConfig::set.
const std::vector<std::string>& config_keys();

// Applies a JSON object of key/value pairs (same keys as the command line).
void apply_config_json(ExperimentConfig& config, const std::string& json_text);
void apply_config_file(ExperimentConfig& config, const std::string& path);

// Output directory: explicit setting, then $QOESIM_OUTPUT_DIR, then
// "qoesim-out".
std::string resolve_output_dir(const ExperimentConfig& config);

// Resolves the latency profile (file plus overrides) for a configuration.
LatencyProfile resolve_profile(const ExperimentConfig& config);

// The request list the configuration describes. Generator workloads need a
// mean rate here; see calibrate_rate.
std::vector<Request> build_requests(const ExperimentConfig& config,
                                    double mean_rate);

struct CalibrationResult {
  double rate = 0.0;
  std::size_t runs = 0;
};

// Highest Poisson rate at which FCFS keeps its waiting queue bounded, found
// by bisection. Lengths, speeds, seed and profile come from `config`.
CalibrationResult calibrate_rate(const ExperimentConfig& config,
                                 std::size_t iterations = 12);

struct ExperimentResult {
  double mean_rate = 0.0;
  std::size_t num_requests = 0;
  SimulationReport report;
  Summary summary;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

// One line: avg QoE, avg TTFT, avg TDS, peak queue.
std::string one_line_summary(const Summary& summary);

struct SweepRun {
  std::string label;
  ExperimentConfig config;
};

// Runs independent experiments on up to `threads` worker threads and writes
// each report to <output_dir>/<label>.
std::vector<ExperimentResult> run_sweep(const std::vector<SweepRun>& runs,
                                        const std::string& output_dir,
                                        std::size_t threads);

}  // namespace qoesim
