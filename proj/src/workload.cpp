// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include "qoesim/workload.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "qoesim/text.h"

namespace qoesim {

namespace {

constexpr const char* kTraceHeader =
    "arrival_s,input_len,output_len,ttft_target_s,consumption_speed_tps";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

[[noreturn]] void row_error(const std::string& source, std::size_t line,
                            const std::string& what) {
  throw ConfigError(source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::size_t LengthDist::sample(Rng& rng) const {
  double x = mean;
  if (stddev > 0.0) {
    const double sigma2 = std::log1p((stddev * stddev) / (mean * mean));
    const double mu = std::log(mean) - sigma2 / 2.0;
    std::lognormal_distribution<double> dist(mu, std::sqrt(sigma2));
    x = dist(rng);
  }
  const double clamped =
      std::clamp(std::round(x), 1.0, static_cast<double>(std::max<std::size_t>(max, 1)));
  return static_cast<std::size_t>(clamped);
}

LengthModel LengthModel::preset(const std::string& name) {
  // Means and standard deviations of the public datasets these mimic.
  if (name == "sharegpt") {
    return {{3171, 7943, 16384}, {385, 300, 4096}};
  }
  if (name == "arxiv") {
    return {{17855, 11401, 65536}, {605, 153, 2048}};
  }
  if (name == "coding") {
    return {{675, 1552, 16384}, {5423, 21293, 32768}};
  }
  throw ConfigError("unknown length preset '" + name + "'");
}

SpeedDist SpeedDist::default_buckets() {
  return {{3.3, 4.0, 4.8, 5.5, 6.2}, {}};
}

SpeedDist SpeedDist::single(double speed) { return {{speed}, {}}; }

void SpeedDist::validate() const {
  if (speeds.empty()) throw ConfigError("speed distribution is empty");
  for (double s : speeds) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ConfigError("consumption speeds must be positive");
    }
  }
  if (!weights.empty()) {
    if (weights.size() != speeds.size()) {
      throw ConfigError("speed weights must match speeds");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw ConfigError("speed weights must be >= 0");
      total += w;
    }
    if (!(total > 0.0)) throw ConfigError("speed weights sum to zero");
  }
}

double SpeedDist::sample(Rng& rng) const {
  if (speeds.size() == 1) return speeds.front();
  if (weights.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, speeds.size() - 1);
    return speeds[pick(rng)];
  }
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  return speeds[pick(rng)];
}

void BurstSpec::validate() const {
  if (!(intensity >= 1.0)) throw ConfigError("burst intensity must be >= 1");
  if (!(duration_frac > 0.0 && duration_frac < 1.0)) {
    throw ConfigError("burst duration fraction must be in (0, 1)");
  }
  if (!(cycle_len_s > 0.0)) throw ConfigError("cycle length must be > 0");
  if (!(mean_rate_rps > 0.0)) throw ConfigError("mean rate must be > 0");
  if (intensity * duration_frac > 1.0 + 1e-12) {
    throw ConfigError("intensity * duration_frac > 1 leaves no requests "
                      "for the non-burst phase");
  }
}

double BurstSpec::base_rate() const {
  return std::max(0.0, (1.0 - intensity * duration_frac) /
                           (1.0 - duration_frac) * mean_rate_rps);
}

bool BurstSpec::in_burst(Seconds t) const {
  const double phase = std::fmod(t, cycle_len_s) / cycle_len_s;
  const double lo = (1.0 - duration_frac) / 2.0;
  return phase >= lo && phase < lo + duration_frac;
}

Seconds ttft_target_for(std::size_t input_len) {
  return std::max(static_cast<double>(input_len) / 5000.0, 1.0);
}

QoeParams assign_qoe_params(std::size_t input_len, const SpeedDist& speeds,
                            Rng& rng) {
  if (input_len == 0) throw std::invalid_argument("input_len must be >= 1");
  QoeParams p;
  p.ttft_target = ttft_target_for(input_len);
  p.consumption_speed = speeds.sample(rng);
  return p;
}

std::vector<TraceRecord> gen_poisson(double rate_rps, Seconds duration_s,
                                     const LengthModel& lengths, Rng& rng) {
  if (!(rate_rps > 0.0)) throw ConfigError("Poisson rate must be > 0");
  std::vector<TraceRecord> out;
  std::exponential_distribution<double> gap(rate_rps);
  for (Seconds t = gap(rng); t < duration_s; t += gap(rng)) {
    TraceRecord r;
    r.arrival_s = t;
    r.input_len = lengths.input.sample(rng);
    r.output_len = lengths.output.sample(rng);
    out.push_back(r);
  }
  return out;
}

std::vector<TraceRecord> gen_cyclic_burst(const BurstSpec& spec,
                                          Seconds duration_s,
                                          const LengthModel& lengths,
                                          Rng& rng) {
  spec.validate();
  // Phase boundaries within one cycle: base | burst | base.
  const double lo = (1.0 - spec.duration_frac) / 2.0 * spec.cycle_len_s;
  const double hi = lo + spec.duration_frac * spec.cycle_len_s;
  std::vector<TraceRecord> out;
  Seconds t = 0.0;
  while (t < duration_s) {
    const double cycle_start =
        std::floor(t / spec.cycle_len_s) * spec.cycle_len_s;
    const double offset = t - cycle_start;
    double rate;
    double phase_end;
    if (offset < lo) {
      rate = spec.base_rate();
      phase_end = cycle_start + lo;
    } else if (offset < hi) {
      rate = spec.burst_rate();
      phase_end = cycle_start + hi;
    } else {
      rate = spec.base_rate();
      phase_end = cycle_start + spec.cycle_len_s;
    }
    phase_end = std::min(phase_end, duration_s);
    if (rate <= 0.0) {
      t = phase_end;
      continue;
    }
    // Arrivals are memoryless, so restarting the clock at each phase
    // boundary keeps the process Poisson within every phase.
    std::exponential_distribution<double> gap(rate);
    Seconds next = t + gap(rng);
    while (next < phase_end) {
      TraceRecord r;
      r.arrival_s = next;
      r.input_len = lengths.input.sample(rng);
      r.output_len = lengths.output.sample(rng);
      out.push_back(r);
      next += gap(rng);
    }
    t = phase_end;
  }
  return out;
}

std::vector<TraceRecord> read_trace(std::istream& in,
                                    const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) row_error(source, 1, "missing header");
  ++line_no;
  if (trim(line) != kTraceHeader) {
    row_error(source, line_no,
              std::string("unexpected header, want '") + kTraceHeader + "'");
  }
  std::vector<TraceRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 5) row_error(source, line_no, "expected 5 columns");
    TraceRecord r;
    if (!parse_number(trim(cells[0]), r.arrival_s) || !std::isfinite(r.arrival_s)) {
      row_error(source, line_no, "bad arrival_s");
    }
    if (r.arrival_s < 0.0) row_error(source, line_no, "negative arrival_s");
    if (!parse_number(trim(cells[1]), r.input_len) || r.input_len < 1) {
      row_error(source, line_no, "input_len must be an integer >= 1");
    }
    if (!parse_number(trim(cells[2]), r.output_len) || r.output_len < 1) {
      row_error(source, line_no, "output_len must be an integer >= 1");
    }
    const auto ttft = trim(cells[3]);
    if (!ttft.empty()) {
      double v = 0.0;
      if (!parse_number(ttft, v) || !(v > 0.0)) {
        row_error(source, line_no, "ttft_target_s must be > 0");
      }
      r.ttft_target_s = v;
    }
    const auto speed = trim(cells[4]);
    if (!speed.empty()) {
      double v = 0.0;
      if (!parse_number(speed, v) || !(v > 0.0)) {
        row_error(source, line_no, "consumption_speed_tps must be > 0");
      }
      r.consumption_speed_tps = v;
    }
    out.push_back(r);
  }
  const auto by_arrival = [](const TraceRecord& a, const TraceRecord& b) {
    return a.arrival_s < b.arrival_s;
  };
  if (!std::is_sorted(out.begin(), out.end(), by_arrival)) {
    spdlog::warn("{}: arrivals out of order, sorting", source);
    std::stable_sort(out.begin(), out.end(), by_arrival);
  }
  return out;
}

std::vector<TraceRecord> load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace '" + path + "'");
  return read_trace(in, path);
}

void write_trace(std::ostream& out, const std::vector<TraceRecord>& records) {
  out << kTraceHeader << '\n';
  for (const auto& r : records) {
    out << format_double(r.arrival_s) << ',' << r.input_len << ','
        << r.output_len << ',';
    if (r.ttft_target_s) out << format_double(*r.ttft_target_s);
    out << ',';
    if (r.consumption_speed_tps) out << format_double(*r.consumption_speed_tps);
    out << '\n';
  }
}

void save_trace(const std::string& path,
                const std::vector<TraceRecord>& records) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trace '" + path + "'");
  write_trace(out, records);
}

std::vector<Request> materialize(const std::vector<TraceRecord>& records,
                                 const SpeedDist& speeds, Rng& rng) {
  speeds.validate();
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].arrival_s < records[b].arrival_s;
  });
  std::vector<Request> out;
  out.reserve(records.size());
  for (std::size_t i : order) {
    const auto& r = records[i];
    Request q;
    q.id = out.size();
    q.arrival = r.arrival_s;
    q.input_len = r.input_len;
    q.output_len = r.output_len;
    // Always draw so that overriding one record does not shift the others.
    q.params = assign_qoe_params(r.input_len, speeds, rng);
    if (r.ttft_target_s) q.params.ttft_target = *r.ttft_target_s;
    if (r.consumption_speed_tps) q.params.consumption_speed = *r.consumption_speed_tps;
    out.push_back(q);
  }
  return out;
}

}  // namespace qoesim
