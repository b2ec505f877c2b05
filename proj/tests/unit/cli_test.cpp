// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run_cli(const std::string& args) {
  const std::string cmd =
      std::string(QOESIM_CLI_PATH) + " " + args + " 2>/dev/null";
  Outcome o;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return o;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) o.out.append(buf, n);
  const int status = ::pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("qoesim_cli_" +
            std::string(
                ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string small() const {
    return "--workload poisson --seed 3 --num-requests 30 --mean-rate 0.5 "
           "--max-output 120";
  }

  fs::path dir_;
};

TEST_F(Cli, RunWritesAReport) {
  const auto out = dir_ / "run";
  const auto o = run_cli("run " + small() + " --output-dir " + out.string());
  ASSERT_EQ(o.code, 0);
  EXPECT_NE(o.out.find("requests=30 "), std::string::npos) << o.out;
  for (const char* f : {"summary.json", "requests.csv", "timeseries.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
}

TEST_F(Cli, CompareAndCdfReadReports) {
  for (const char* p : {"fcfs", "andes"}) {
    ASSERT_EQ(run_cli("run " + small() + " --policy " + p + " --output-dir " +
                      (dir_ / p).string())
                  .code,
              0);
  }
  const auto cmp = run_cli("compare " + (dir_ / "fcfs").string() + " " +
                           (dir_ / "andes").string() +
                           " --labels fcfs,andes");
  ASSERT_EQ(cmp.code, 0);
  EXPECT_NE(cmp.out.find("andes/fcfs"), std::string::npos) << cmp.out;

  const auto c = run_cli("cdf " + (dir_ / "andes").string() + " --metric qoe");
  ASSERT_EQ(c.code, 0);
  std::istringstream in(c.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "value,fraction");
  std::string last;
  while (std::getline(in, line)) last = line;
  EXPECT_EQ(last.substr(last.find(',') + 1), "1");
}

TEST_F(Cli, ConfigFileAndFlagsAgree) {
  const auto cfg = dir_ / "c.json";
  {
    std::ofstream out(cfg);
    out << R"({"workload": "poisson", "seed": 3, "num-requests": 30,
              "mean-rate": 0.5, "max-output": 120})";
  }
  const auto a = run_cli("run --config " + cfg.string() + " --output-dir " +
                         (dir_ / "a").string());
  const auto b = run_cli("run " + small() + " --output-dir " +
                         (dir_ / "b").string());
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  auto summary_line = [](const std::string& out) {
    const auto at = out.find("requests=");
    return out.substr(at, out.find('\n', at) - at);
  };
  EXPECT_EQ(summary_line(a.out), summary_line(b.out));
}

TEST_F(Cli, GenTraceReplays) {
  const auto trace = dir_ / "t.csv";
  ASSERT_EQ(run_cli("gen-trace " + small() + " --out " + trace.string()).code,
            0);
  const auto replay = run_cli("run --workload trace --trace " + trace.string() +
                              " --output-dir " + (dir_ / "r").string());
  ASSERT_EQ(replay.code, 0);
  EXPECT_NE(replay.out.find("requests=30 "), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli("").code, 2);
  EXPECT_EQ(run_cli("run --colour red").code, 2);
  EXPECT_EQ(run_cli("run --workload poisson").code, 2);
  EXPECT_EQ(run_cli("run " + small() + " --policy fcfs --solver dp").code, 2);
  EXPECT_EQ(run_cli("run " + small() + " --delta-t soon").code, 2);
  EXPECT_EQ(run_cli("run --workload trace --trace " +
                    (dir_ / "missing.csv").string())
                .code,
            2);
}

TEST_F(Cli, RuntimeFailuresExitThree) {
  const auto o = run_cli("run " + small() +
                         " --kv-capacity 3000 --solver dp --dp-budget 1 --output-dir " +
                         (dir_ / "dp").string());
  EXPECT_EQ(o.code, 3);
}

}  // namespace
