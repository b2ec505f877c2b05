// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include "qoesim/experiment.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

#include "qoesim/text.h"

namespace qoesim {

namespace {

constexpr std::size_t kDefaultRequests = 500;
constexpr std::uint64_t kSpeedStream = 0x9E3779B97F4A7C15ULL;

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  if (!parse_number(v, out) || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  if (!parse_number(v, out)) {
    // Allow forms like 1e8 for counts.
    const double d = to_double(key, v);
    if (d < 0 || d != std::floor(d)) {
      throw ConfigError(key + ": expected a nonnegative integer");
    }
    out = static_cast<std::uint64_t>(d);
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number()) return format_double(v.get<double>());
  if (v.is_array()) {
    std::string out;
    for (const auto& item : v) {
      if (!out.empty()) out += ',';
      out += json_scalar(item);
    }
    return out;
  }
  throw ConfigError("config values must be scalars or lists");
}

// Time-weighted mean queue length over [from, to).
double mean_queue(const std::vector<SeriesPoint>& series, Seconds from,
                  Seconds to) {
  if (!(to > from)) return 0.0;
  double area = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const Seconds a = std::max(series[i].time, from);
    const Seconds b =
        std::min(i + 1 < series.size() ? series[i + 1].time : to, to);
    if (b > a) area += static_cast<double>(series[i].queue_len) * (b - a);
  }
  return area / (to - from);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "workload",    "trace",          "mean-rate",     "intensity",
      "duration-frac", "cycle-len",    "num-requests",  "duration",
      "lengths",     "max-input",      "max-output",    "speeds",
      "speed-weights", "seed",         "policy",        "solver",
      "objective",   "delta-t",        "watermark",     "greedy-skip",
      "refiner",     "mechanism",      "dp-budget",     "profile",
      "kv-capacity", "network-delay",  "chunk",         "staleness",
      "bypass-pacing", "until",        "output-dir",
  };
  return keys;
}

void ExperimentConfig::set(const std::string& key, const std::string& v) {
  auto& pol = sim.policy;
  if (key == "workload") {
    if (v == "trace") {
      workload = WorkloadKind::kTrace;
    } else if (v == "poisson") {
      workload = WorkloadKind::kPoisson;
    } else if (v == "cyclic-burst") {
      workload = WorkloadKind::kCyclicBurst;
    } else {
      throw ConfigError("workload: expected trace, poisson or cyclic-burst");
    }
  } else if (key == "trace") {
    trace_path = v;
  } else if (key == "mean-rate") {
    mean_rate = to_double(key, v);
  } else if (key == "intensity") {
    burst.intensity = to_double(key, v);
  } else if (key == "duration-frac") {
    burst.duration_frac = to_double(key, v);
  } else if (key == "cycle-len") {
    burst.cycle_len_s = to_double(key, v);
  } else if (key == "num-requests") {
    num_requests = to_uint(key, v);
  } else if (key == "duration") {
    duration = to_double(key, v);
  } else if (key == "lengths") {
    LengthModel::preset(v);
    lengths = v;
  } else if (key == "max-input") {
    max_input = to_uint(key, v);
  } else if (key == "max-output") {
    max_output = to_uint(key, v);
  } else if (key == "speeds") {
    speeds.speeds = to_list(key, v);
  } else if (key == "speed-weights") {
    speeds.weights = to_list(key, v);
  } else if (key == "seed") {
    seed = to_uint(key, v);
  } else if (key == "policy") {
    pol.kind = parse_policy(v);
  } else if (key == "solver") {
    pol.solve.solver = parse_solver(v);
  } else if (key == "objective") {
    pol.solve.objective = parse_objective(v);
  } else if (key == "delta-t") {
    pol.solve.horizon = to_double(key, v);
  } else if (key == "watermark") {
    pol.watermark = to_double(key, v);
  } else if (key == "greedy-skip") {
    pol.solve.greedy_skip_variant = to_bool(key, v);
  } else if (key == "refiner") {
    pol.refiner = to_bool(key, v);
  } else if (key == "mechanism") {
    if (v == "auto") {
      pol.mechanism.reset();
    } else if (v == "swap") {
      pol.mechanism = PreemptionMechanism::kSwap;
    } else if (v == "recompute") {
      pol.mechanism = PreemptionMechanism::kRecompute;
    } else {
      throw ConfigError("mechanism: expected auto, swap or recompute");
    }
  } else if (key == "dp-budget") {
    pol.solve.dp_budget = to_double(key, v);
  } else if (key == "profile") {
    profile_path = v;
  } else if (key == "kv-capacity") {
    kv_capacity = to_uint(key, v);
  } else if (key == "network-delay") {
    sim.network_delay = to_double(key, v);
  } else if (key == "chunk") {
    sim.chunk = to_uint(key, v);
  } else if (key == "staleness") {
    sim.staleness = to_double(key, v);
  } else if (key == "bypass-pacing") {
    sim.bypass_pacing = to_bool(key, v);
  } else if (key == "until") {
    until = to_double(key, v);
  } else if (key == "output-dir") {
    output_dir = v;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
  explicit_keys.insert(key);
}

void ExperimentConfig::validate() const {
  auto given = [&](const char* k) { return explicit_keys.count(k) != 0; };
  if (workload == WorkloadKind::kTrace) {
    if (trace_path.empty()) throw ConfigError("trace workload needs --trace");
    for (const char* k : {"mean-rate", "intensity", "duration-frac",
                          "cycle-len", "lengths", "max-input", "max-output"}) {
      if (given(k)) {
        throw ConfigError(std::string("--") + k +
                          " does not apply to a trace workload");
      }
    }
  } else {
    if (!trace_path.empty()) {
      throw ConfigError("--trace needs --workload trace");
    }
    if (!seed) throw ConfigError("generated workloads need --seed");
    if (mean_rate && !(*mean_rate > 0.0)) {
      throw ConfigError("mean rate must be > 0");
    }
    if (num_requests && duration) {
      throw ConfigError("give either --num-requests or --duration, not both");
    }
    if (num_requests && *num_requests == 0) {
      throw ConfigError("num-requests must be >= 1");
    }
    if (duration && !(*duration > 0.0)) {
      throw ConfigError("duration must be > 0");
    }
  }
  if (workload == WorkloadKind::kPoisson) {
    for (const char* k : {"intensity", "duration-frac", "cycle-len"}) {
      if (given(k)) {
        throw ConfigError(std::string("--") + k +
                          " only applies to the cyclic-burst workload");
      }
    }
  }
  if (workload == WorkloadKind::kCyclicBurst) {
    BurstSpec b = burst;
    b.mean_rate_rps = mean_rate.value_or(1.0);
    b.validate();
  }
  if (sim.policy.kind == PolicyKind::kFcfs) {
    for (const char* k : {"solver", "objective", "delta-t", "watermark",
                          "greedy-skip", "refiner", "mechanism",
                          "dp-budget"}) {
      if (given(k)) {
        throw ConfigError(std::string("--") + k +
                          " has no effect with --policy fcfs");
      }
    }
  }
  if (sim.policy.kind == PolicyKind::kLqsf) {
    for (const char* k : {"solver", "objective", "greedy-skip", "refiner",
                          "dp-budget"}) {
      if (given(k)) {
        throw ConfigError(std::string("--") + k +
                          " has no effect with --policy lqsf");
      }
    }
  }
  if (sim.policy.solve.solver != SolverKind::kDp && given("dp-budget")) {
    throw ConfigError("--dp-budget needs --solver dp");
  }
  if (kv_capacity && *kv_capacity == 0) {
    throw ConfigError("kv-capacity must be >= 1");
  }
  if (!(until > 0.0)) throw ConfigError("until must be > 0");
  speeds.validate();
  sim.policy.validate();
  if (sim.chunk == 0) throw ConfigError("chunk must be >= 1");
  if (!(sim.network_delay >= 0.0)) {
    throw ConfigError("network delay must be >= 0");
  }
  if (!(sim.staleness >= 0.0)) throw ConfigError("staleness must be >= 0");
}

LengthModel ExperimentConfig::length_model() const {
  auto m = LengthModel::preset(lengths);
  if (max_input) m.input.max = *max_input;
  if (max_output) m.output.max = *max_output;
  return m;
}

void apply_config_json(ExperimentConfig& config, const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    config.set(key, json_scalar(value));
  }
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_json(config, ss.str());
}

std::string resolve_output_dir(const ExperimentConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("QOESIM_OUTPUT_DIR"); env && *env) {
    return env;
  }
  return "qoesim-out";
}

LatencyProfile resolve_profile(const ExperimentConfig& config) {
  LatencyProfile p = config.profile_path.empty()
                         ? LatencyProfile::synthetic_default()
                         : load_profile(config.profile_path);
  if (config.kv_capacity) p.kv_capacity = *config.kv_capacity;
  p.validate();
  return p;
}

std::vector<Request> build_requests(const ExperimentConfig& config,
                                    double mean_rate) {
  const std::uint64_t seed = config.seed.value_or(0);
  Rng speed_rng(seed ^ kSpeedStream);
  if (config.workload == WorkloadKind::kTrace) {
    return materialize(load_trace(config.trace_path), config.speeds,
                       speed_rng);
  }
  Rng rng(seed);
  const auto lengths = config.length_model();
  const std::size_t want = config.num_requests.value_or(kDefaultRequests);
  Seconds horizon = 0.0;
  if (config.duration) {
    horizon = *config.duration;
  } else {
    horizon = 1.5 * static_cast<double>(want) / mean_rate;
    if (config.workload == WorkloadKind::kCyclicBurst) {
      horizon += config.burst.cycle_len_s;
    }
  }
  std::vector<TraceRecord> records;
  if (config.workload == WorkloadKind::kPoisson) {
    records = gen_poisson(mean_rate, horizon, lengths, rng);
  } else {
    BurstSpec b = config.burst;
    b.mean_rate_rps = mean_rate;
    records = gen_cyclic_burst(b, horizon, lengths, rng);
  }
  if (!config.duration && records.size() > want) records.resize(want);
  return materialize(records, config.speeds, speed_rng);
}

CalibrationResult calibrate_rate(const ExperimentConfig& config,
                                 std::size_t iterations) {
  ExperimentConfig probe = config;
  probe.workload = WorkloadKind::kPoisson;
  probe.duration.reset();
  probe.num_requests = config.num_requests.value_or(kDefaultRequests);
  SimConfig sim = config.sim;
  sim.profile = resolve_profile(config);
  sim.policy = PolicyConfig{};
  sim.policy.kind = PolicyKind::kFcfs;

  CalibrationResult result;
  const double n = static_cast<double>(*probe.num_requests);
  auto stable = [&](double rate) {
    const auto requests = build_requests(probe, rate);
    ++result.runs;
    if (requests.empty()) return true;
    const auto report = simulate(sim, requests);
    const Seconds last = requests.back().arrival;
    // An overloaded queue keeps growing through the arrival window.
    const double tail = mean_queue(report.series, last * 2.0 / 3.0, last);
    return tail <= std::max(2.0, 0.02 * n);
  };

  double lo = 0.0;
  double hi = 0.25;
  while (stable(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw std::runtime_error("calibration did not saturate");
  }
  for (std::size_t i = 0; i < iterations; ++i) {
    const double mid = (lo + hi) / 2.0;
    if (stable(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  result.rate = lo > 0.0 ? lo : hi / 2.0;
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  SimConfig sim = config.sim;
  sim.profile = resolve_profile(config);
  ExperimentResult r;
  if (config.workload != WorkloadKind::kTrace) {
    if (config.mean_rate) {
      r.mean_rate = *config.mean_rate;
    } else {
      const auto cal = calibrate_rate(config);
      spdlog::info("calibrated mean rate {:.4f} req/s after {} runs", cal.rate,
                   cal.runs);
      r.mean_rate = cal.rate;
    }
  }
  const auto requests = build_requests(config, r.mean_rate);
  r.num_requests = requests.size();
  r.report = simulate(sim, requests, config.until);
  r.summary = summarize(r.report);
  return r;
}

std::string one_line_summary(const Summary& s) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "requests=" << s.num_requests << " avg_qoe=" << s.avg_qoe
      << " avg_ttft=" << s.avg_ttft << " avg_tds=" << s.avg_tds
      << " peak_queue=" << s.peak_queue;
  return out.str();
}

std::vector<ExperimentResult> run_sweep(const std::vector<SweepRun>& runs,
                                        const std::string& output_dir,
                                        std::size_t threads) {
  std::vector<ExperimentResult> results(runs.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= runs.size()) return;
      try {
        results[i] = run_experiment(runs[i].config);
        write_report(
            (std::filesystem::path(output_dir) / runs[i].label).string(),
            results[i].report);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(runs.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace qoesim
