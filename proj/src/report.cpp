// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include "qoesim/report.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <json.hpp>
#include <map>
#include <sstream>

#include "qoesim/text.h"

namespace qoesim {

namespace {

constexpr const char* kRequestsHeader =
    "id,arrival,ttft,qoe,avg_tds,preemptions";
constexpr const char* kSeriesHeader = "time,queue_len,running,kv_frac,swapped";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

template <typename T>
T cell(const std::string& text, std::size_t line, const char* what) {
  T v{};
  if (!parse_number(text, v)) {
    throw ConfigError("line " + std::to_string(line) + ": bad " + what);
  }
  return v;
}

void expect_header(std::istream& in, const char* header) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("missing CSV header");
  strip_cr(line);
  if (line != header) {
    throw ConfigError(std::string("unexpected CSV header, want '") + header +
                      "'");
  }
}

}  // namespace

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(p / 100.0 * static_cast<double>(values.size()));
  const auto idx = static_cast<std::size_t>(std::clamp(
      rank, 1.0, static_cast<double>(values.size())));
  return values[idx - 1];
}

Summary summarize(const SimulationReport& report) {
  Summary s;
  s.num_requests = report.requests.size();
  s.rejected = report.rejected.size();
  std::vector<double> ttfts;
  double qoe_sum = 0.0;
  double tds_sum = 0.0;
  std::size_t good = 0;
  for (const auto& r : report.requests) {
    qoe_sum += r.qoe;
    tds_sum += r.avg_tds;
    if (r.qoe >= 0.95) ++good;
    if (r.ttft) ttfts.push_back(*r.ttft);
    s.total_preemptions += r.preemptions;
  }
  if (s.num_requests > 0) {
    const double n = static_cast<double>(s.num_requests);
    s.avg_qoe = qoe_sum / n;
    s.avg_tds = tds_sum / n;
    s.frac_qoe_ge_095 = static_cast<double>(good) / n;
    s.preemptions_per_request = static_cast<double>(s.total_preemptions) / n;
  }
  if (!ttfts.empty()) {
    double sum = 0.0;
    for (double t : ttfts) sum += t;
    s.avg_ttft = sum / static_cast<double>(ttfts.size());
    s.p50_ttft = percentile(ttfts, 50);
    s.p90_ttft = percentile(ttfts, 90);
    s.p99_ttft = percentile(ttfts, 99);
  }
  for (const auto& p : report.series) {
    s.peak_queue = std::max(s.peak_queue, p.queue_len);
    s.peak_swapped = std::max(s.peak_swapped, p.swapped);
  }
  return s;
}

void write_requests_csv(std::ostream& out,
                        const std::vector<RequestOutcome>& rows) {
  out << kRequestsHeader << '\n';
  for (const auto& r : rows) {
    out << r.id << ',' << format_double(r.arrival) << ',';
    if (r.ttft) out << format_double(*r.ttft);
    out << ',' << format_double(r.qoe) << ',' << format_double(r.avg_tds)
        << ',' << r.preemptions << '\n';
  }
}

std::vector<RequestOutcome> read_requests_csv(std::istream& in) {
  expect_header(in, kRequestsHeader);
  std::vector<RequestOutcome> rows;
  std::string line;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    strip_cr(line);
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 6) {
      throw ConfigError("line " + std::to_string(n) + ": expected 6 columns");
    }
    RequestOutcome r;
    r.id = cell<RequestId>(c[0], n, "id");
    r.arrival = cell<double>(c[1], n, "arrival");
    if (!c[2].empty()) r.ttft = cell<double>(c[2], n, "ttft");
    r.qoe = cell<double>(c[3], n, "qoe");
    r.avg_tds = cell<double>(c[4], n, "avg_tds");
    r.preemptions = cell<std::size_t>(c[5], n, "preemptions");
    rows.push_back(r);
  }
  return rows;
}

void write_series_csv(std::ostream& out, const std::vector<SeriesPoint>& rows) {
  out << kSeriesHeader << '\n';
  for (const auto& p : rows) {
    out << format_double(p.time) << ',' << p.queue_len << ',' << p.running
        << ',' << format_double(p.kv_frac) << ',' << p.swapped << '\n';
  }
}

std::vector<SeriesPoint> read_series_csv(std::istream& in) {
  expect_header(in, kSeriesHeader);
  std::vector<SeriesPoint> rows;
  std::string line;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    strip_cr(line);
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 5) {
      throw ConfigError("line " + std::to_string(n) + ": expected 5 columns");
    }
    SeriesPoint p;
    p.time = cell<double>(c[0], n, "time");
    p.queue_len = cell<std::size_t>(c[1], n, "queue_len");
    p.running = cell<std::size_t>(c[2], n, "running");
    p.kv_frac = cell<double>(c[3], n, "kv_frac");
    p.swapped = cell<std::size_t>(c[4], n, "swapped");
    rows.push_back(p);
  }
  return rows;
}

std::string summary_to_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["num_requests"] = s.num_requests;
  j["avg_qoe"] = s.avg_qoe;
  j["avg_ttft"] = s.avg_ttft;
  j["p50_ttft"] = s.p50_ttft;
  j["p90_ttft"] = s.p90_ttft;
  j["p99_ttft"] = s.p99_ttft;
  j["avg_tds"] = s.avg_tds;
  j["frac_qoe_ge_095"] = s.frac_qoe_ge_095;
  j["peak_queue"] = s.peak_queue;
  j["peak_swapped"] = s.peak_swapped;
  j["total_preemptions"] = s.total_preemptions;
  j["preemptions_per_request"] = s.preemptions_per_request;
  j["rejected"] = s.rejected;
  return j.dump(2) + "\n";
}

Summary summary_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("summary is not valid JSON: ") + e.what());
  }
  Summary s;
  try {
    s.num_requests = j.at("num_requests").get<std::size_t>();
    s.avg_qoe = j.at("avg_qoe").get<double>();
    s.avg_ttft = j.at("avg_ttft").get<double>();
    s.p50_ttft = j.at("p50_ttft").get<double>();
    s.p90_ttft = j.at("p90_ttft").get<double>();
    s.p99_ttft = j.at("p99_ttft").get<double>();
    s.avg_tds = j.at("avg_tds").get<double>();
    s.frac_qoe_ge_095 = j.at("frac_qoe_ge_095").get<double>();
    s.peak_queue = j.at("peak_queue").get<std::size_t>();
    s.peak_swapped = j.at("peak_swapped").get<std::size_t>();
    s.total_preemptions = j.at("total_preemptions").get<std::size_t>();
    s.preemptions_per_request = j.at("preemptions_per_request").get<double>();
    s.rejected = j.at("rejected").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("summary schema mismatch: ") + e.what());
  }
  return s;
}

void write_report(const std::string& dir, const SimulationReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "requests.csv");
    write_requests_csv(out, report.requests);
  }
  {
    std::ofstream out(fs::path(dir) / "timeseries.csv");
    write_series_csv(out, report.series);
  }
  std::ofstream out(fs::path(dir) / "summary.json");
  out << summary_to_json(summarize(report));
  if (!out) throw std::runtime_error("failed writing report to " + dir);
}

Summary load_summary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open summary '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return summary_from_json(ss.str());
}

std::string compare_table(const std::vector<std::string>& labels,
                          const std::vector<Summary>& summaries) {
  if (summaries.size() < 2) throw ConfigError("compare needs >= 2 summaries");
  if (labels.size() != summaries.size()) {
    throw std::invalid_argument("labels and summaries differ in length");
  }
  struct Column {
    const char* name;
    double (*get)(const Summary&);
  };
  const Column cols[] = {
      {"avg_qoe", [](const Summary& s) { return s.avg_qoe; }},
      {"frac_qoe>=0.95", [](const Summary& s) { return s.frac_qoe_ge_095; }},
      {"avg_ttft", [](const Summary& s) { return s.avg_ttft; }},
      {"p50_ttft", [](const Summary& s) { return s.p50_ttft; }},
      {"p90_ttft", [](const Summary& s) { return s.p90_ttft; }},
      {"p99_ttft", [](const Summary& s) { return s.p99_ttft; }},
      {"avg_tds", [](const Summary& s) { return s.avg_tds; }},
      {"peak_queue",
       [](const Summary& s) { return static_cast<double>(s.peak_queue); }},
      {"peak_swapped",
       [](const Summary& s) { return static_cast<double>(s.peak_swapped); }},
  };
  std::ostringstream out;
  out << std::left << std::setw(16) << "metric";
  for (const auto& l : labels) out << std::setw(14) << l;
  for (std::size_t i = 1; i < labels.size(); ++i) {
    out << std::setw(16) << (labels[i] + "/" + labels[0]);
  }
  out << '\n';
  out << std::fixed;
  for (const auto& c : cols) {
    out << std::setw(16) << c.name;
    for (const auto& s : summaries) {
      out << std::setw(14) << std::setprecision(4) << c.get(s);
    }
    const double base = c.get(summaries[0]);
    for (std::size_t i = 1; i < summaries.size(); ++i) {
      const double v = c.get(summaries[i]);
      double ratio = 1.0;
      if (base != 0.0) {
        ratio = v / base;
      } else if (v != 0.0) {
        ratio = std::numeric_limits<double>::infinity();
      }
      out << std::setw(16) << std::setprecision(4) << ratio;
    }
    out << '\n';
  }
  return out.str();
}

CdfMetric parse_cdf_metric(const std::string& name) {
  if (name == "qoe") return CdfMetric::kQoe;
  if (name == "ttft") return CdfMetric::kTtft;
  if (name == "tds") return CdfMetric::kTds;
  throw ConfigError("unknown metric '" + name + "' (qoe, ttft, tds)");
}

std::vector<CdfPoint> cdf(const std::vector<RequestOutcome>& rows,
                          CdfMetric metric) {
  std::vector<double> v;
  for (const auto& r : rows) {
    switch (metric) {
      case CdfMetric::kQoe:
        v.push_back(r.qoe);
        break;
      case CdfMetric::kTtft:
        if (r.ttft) v.push_back(*r.ttft);
        break;
      case CdfMetric::kTds:
        v.push_back(r.avg_tds);
        break;
    }
  }
  std::sort(v.begin(), v.end());
  std::vector<CdfPoint> out;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    out.push_back(CdfPoint{v[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

}  // namespace qoesim
