// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

// Simulation outputs and their on-disk forms: a per-request CSV, a time
// series CSV and a summary JSON. Everything in the summary can be recomputed
// from the two CSV files.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qoesim/types.h"

namespace qoesim {

struct RequestOutcome {
  RequestId id = 0;
  Seconds arrival = 0.0;
  std::optional<Seconds> ttft;  // empty when no token reached the client
  double qoe = 0.0;
  double avg_tds = 0.0;  // tokens/s between first and last delivery
  std::size_t preemptions = 0;

  bool operator==(const RequestOutcome&) const = default;
};

struct SeriesPoint {
  Seconds time = 0.0;
  std::size_t queue_len = 0;  // arrived, no KV state anywhere
  std::size_t running = 0;
  double kv_frac = 0.0;
  std::size_t swapped = 0;  // preempted with KV on the host or in transit

  bool operator==(const SeriesPoint&) const = default;
};

struct SimulationReport {
  std::vector<RequestOutcome> requests;  // ascending id
  std::vector<SeriesPoint> series;
  std::vector<RequestId> rejected;  // did not fit the KV cache on their own
  Seconds end_time = 0.0;
};

struct Summary {
  std::size_t num_requests = 0;
  double avg_qoe = 0.0;
  double avg_ttft = 0.0;
  double p50_ttft = 0.0;
  double p90_ttft = 0.0;
  double p99_ttft = 0.0;
  double avg_tds = 0.0;
  double frac_qoe_ge_095 = 0.0;
  std::size_t peak_queue = 0;
  std::size_t peak_swapped = 0;
  std::size_t total_preemptions = 0;
  double preemptions_per_request = 0.0;
  std::size_t rejected = 0;

  bool operator==(const Summary&) const = default;
};

Summary summarize(const SimulationReport& report);

// Nearest-rank percentile of a sample; 0 for an empty one.
double percentile(std::vector<double> values, double p);

void write_requests_csv(std::ostream& out,
                        const std::vector<RequestOutcome>& rows);
std::vector<RequestOutcome> read_requests_csv(std::istream& in);
void write_series_csv(std::ostream& out, const std::vector<SeriesPoint>& rows);
std::vector<SeriesPoint> read_series_csv(std::istream& in);

std::string summary_to_json(const Summary& summary);
Summary summary_from_json(const std::string& text);

// Writes requests.csv, timeseries.csv and summary.json under `dir`.
void write_report(const std::string& dir, const SimulationReport& report);
Summary load_summary(const std::string& path);

// Side-by-side table of summaries with ratios against the first one.
std::string compare_table(const std::vector<std::string>& labels,
                          const std::vector<Summary>& summaries);

enum class CdfMetric { kQoe, kTtft, kTds };
CdfMetric parse_cdf_metric(const std::string& name);

struct CdfPoint {
  double value = 0.0;
  double fraction = 0.0;
};

// Empirical CDF with one row per distinct value. Requests without a TTFT are
// left out of the TTFT CDF.
std::vector<CdfPoint> cdf(const std::vector<RequestOutcome>& rows,
                          CdfMetric metric);

}  // namespace qoesim
