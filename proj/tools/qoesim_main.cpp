// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

// qoesim: run, compare and sweep serving simulations.
//
// Exit status: 0 on success, 2 for configuration errors, 3 for runtime
// failures.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "qoesim/experiment.h"
#include "qoesim/text.h"

namespace {

constexpr int kConfigExit = 2;
constexpr int kRuntimeExit = 3;

using Settings = std::map<std::string, std::string>;

struct ConfigArgs {
  std::string config_file;
  Settings settings;
};

void add_config_options(CLI::App* app, ConfigArgs& args) {
  app->add_option("--config", args.config_file,
                  "JSON file with the same keys as the flags");
  for (const auto& key : qoesim::config_keys()) {
    app->add_option_function<std::string>(
        "--" + key,
        [&args, key](const std::string& v) { args.settings[key] = v; });
  }
}

qoesim::ExperimentConfig build_config(const ConfigArgs& args) {
  qoesim::ExperimentConfig config;
  if (!args.config_file.empty()) {
    qoesim::apply_config_file(config, args.config_file);
  }
  for (const auto& [key, value] : args.settings) config.set(key, value);
  return config;
}

int cmd_run(const ConfigArgs& args) {
  const auto config = build_config(args);
  const auto result = qoesim::run_experiment(config);
  const auto dir = qoesim::resolve_output_dir(config);
  qoesim::write_report(dir, result.report);
  std::cout << qoesim::one_line_summary(result.summary) << "\n";
  spdlog::info("report written to {}", dir);
  return 0;
}

int cmd_compare(const std::vector<std::string>& paths,
                std::vector<std::string> labels) {
  std::vector<qoesim::Summary> summaries;
  for (const auto& p : paths) {
    std::filesystem::path path(p);
    if (std::filesystem::is_directory(path)) path /= "summary.json";
    summaries.push_back(qoesim::load_summary(path.string()));
  }
  if (labels.empty()) {
    for (std::size_t i = 0; i < paths.size(); ++i) {
      labels.push_back("r" + std::to_string(i));
    }
  }
  if (labels.size() != paths.size()) {
    throw qoesim::ConfigError("--labels must match the number of reports");
  }
  std::cout << qoesim::compare_table(labels, summaries);
  return 0;
}

int cmd_cdf(const std::string& report, const std::string& metric) {
  std::filesystem::path path(report);
  if (std::filesystem::is_directory(path)) path /= "requests.csv";
  std::ifstream in(path);
  if (!in) throw qoesim::ConfigError("cannot open " + path.string());
  const auto rows = qoesim::read_requests_csv(in);
  std::cout << "value,fraction\n";
  for (const auto& p : qoesim::cdf(rows, qoesim::parse_cdf_metric(metric))) {
    std::cout << qoesim::format_double(p.value) << ','
              << qoesim::format_double(p.fraction) << '\n';
  }
  return 0;
}

int cmd_calibrate(const ConfigArgs& args) {
  auto config = build_config(args);
  if (!config.seed) throw qoesim::ConfigError("calibrate needs --seed");
  const auto cal = qoesim::calibrate_rate(config);
  std::cout << qoesim::format_double(cal.rate) << "\n";
  spdlog::info("{} simulation runs", cal.runs);
  return 0;
}

int cmd_sweep(const ConfigArgs& args, const std::string& param,
              const std::vector<std::string>& values, std::size_t threads) {
  const auto base = build_config(args);
  std::vector<qoesim::SweepRun> runs;
  for (const auto& v : values) {
    auto c = base;
    c.set(param, v);
    c.validate();
    runs.push_back({param + "=" + v, c});
  }
  const auto dir = qoesim::resolve_output_dir(base);
  const auto results = qoesim::run_sweep(runs, dir, threads);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::cout << runs[i].label << " "
              << qoesim::one_line_summary(results[i].summary) << "\n";
  }
  return 0;
}

int cmd_gen_trace(const ConfigArgs& args, const std::string& out) {
  const auto config = build_config(args);
  if (config.workload == qoesim::WorkloadKind::kTrace) {
    throw qoesim::ConfigError("gen-trace needs a generator workload");
  }
  config.validate();
  double rate = 0.0;
  if (config.mean_rate) {
    rate = *config.mean_rate;
  } else {
    rate = qoesim::calibrate_rate(config).rate;
  }
  const auto requests = qoesim::build_requests(config, rate);
  std::vector<qoesim::TraceRecord> records;
  for (const auto& r : requests) {
    records.push_back({r.arrival, r.input_len, r.output_len,
                       r.params.ttft_target, r.params.consumption_speed});
  }
  if (out == "-") {
    qoesim::write_trace(std::cout, records);
  } else {
    qoesim::save_trace(out, records);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QoE-aware LLM serving simulator"};
  app.require_subcommand(1);

  ConfigArgs run_args;
  auto* run = app.add_subcommand("run", "run one experiment");
  add_config_options(run, run_args);

  std::vector<std::string> compare_paths;
  std::vector<std::string> compare_labels;
  auto* compare = app.add_subcommand("compare", "compare summaries");
  compare->add_option("reports", compare_paths, "summary.json or report dirs")
      ->required()
      ->expected(2, -1);
  compare->add_option("--labels", compare_labels)->delimiter(',');

  std::string cdf_report;
  std::string cdf_metric = "qoe";
  auto* cdf = app.add_subcommand("cdf", "empirical CDF of a per-request metric");
  cdf->add_option("report", cdf_report, "requests.csv or report dir")
      ->required();
  cdf->add_option("--metric", cdf_metric, "qoe, ttft or tds");

  ConfigArgs cal_args;
  auto* calibrate = app.add_subcommand(
      "calibrate", "find the highest Poisson rate FCFS sustains");
  add_config_options(calibrate, cal_args);

  ConfigArgs sweep_args;
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  std::size_t sweep_threads = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "run one experiment per value");
  add_config_options(sweep, sweep_args);
  sweep->add_option("--param", sweep_param, "config key to vary")->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--threads", sweep_threads);

  ConfigArgs gen_args;
  std::string gen_out = "-";
  auto* gen = app.add_subcommand("gen-trace", "write a generated trace CSV");
  add_config_options(gen, gen_args);
  gen->add_option("--out", gen_out, "output path, '-' for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*compare) return cmd_compare(compare_paths, compare_labels);
    if (*cdf) return cmd_cdf(cdf_report, cdf_metric);
    if (*calibrate) return cmd_calibrate(cal_args);
    if (*sweep) return cmd_sweep(sweep_args, sweep_param, sweep_values,
                                 sweep_threads);
    if (*gen) return cmd_gen_trace(gen_args, gen_out);
  } catch (const qoesim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeExit;
  }
  return 0;
}
