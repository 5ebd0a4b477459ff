/*
 * Copyright 2026 The privcoll Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "privcoll/history.hpp"
#include "test_util.hpp"

namespace privcoll {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult Cli(const std::string& args) {
  std::string cmd = std::string("\"") + PRIVCOLL_CLI_PATH + "\" " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    r.output.append(buf.data(), n);
  }
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string Slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string Config(const std::string& name) {
  return std::string(PRIVCOLL_CONFIG_DIR) + "/" + name;
}

// Number of records in a history file; every line must be a JSON object.
size_t HistoryRecords(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  size_t n = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (!nlohmann::json::parse(line).is_object()) return 0;
    ++n;
  }
  return n;
}

fs::path WriteConfig(const std::string& name, const std::string& text) {
  fs::path p = testing::TempPath(name);
  std::ofstream(p) << text;
  return p;
}

const char* kSmall =
    "model = linear\nalpha = 0.05\nbatch_size = 20\nmax_iterations = 6\n"
    "seed = 5\nparties = 3\ndata.samples = 60\ndata.features = 9\n";

TEST(CliTest, HelpForEverySubcommand) {
  RunResult top = Cli("--help");
  EXPECT_EQ(top.code, 0);
  for (const char* sub : {"partition", "agg", "node", "simulate", "audit",
                          "bench", "compare"}) {
    SCOPED_TRACE(sub);
    EXPECT_NE(top.output.find(sub), std::string::npos);
    RunResult r = Cli(std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.output.find("--"), std::string::npos);
  }
}

TEST(CliTest, MissingSubcommandIsUsageError) {
  EXPECT_EQ(Cli("").code, 2);
  EXPECT_EQ(Cli("simulate").code, 2);  // --config is required
}

TEST(CliTest, SimulateWritesHistory) {
  fs::path cfg = WriteConfig("cli_small.cfg", kSmall);
  fs::path out = testing::TempPath("cli_sim");
  RunResult r = Cli("simulate --config " + cfg.string() + " --out " +
                    out.string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(HistoryRecords(out / "history.jsonl"), 6u);
  EXPECT_TRUE(fs::exists(out / "model.json"));
  EXPECT_TRUE(fs::exists(out / "config.txt"));
}

TEST(CliTest, ShippedConfigRuns) {
  fs::path out = testing::TempPath("cli_linear");
  RunResult r = Cli("simulate --config " + Config("linear.cfg") +
                    " --set max_iterations=3 --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_GE(HistoryRecords(out / "history.jsonl"), 1u);
}

TEST(CliTest, MalformedConfigExitsWithLocation) {
  fs::path bad = WriteConfig("cli_bad.cfg", "model = linear\nalpha = fast\n");
  RunResult r = Cli("simulate --config " + bad.string() + " --out " +
                    testing::TempPath("cli_bad"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("line 2"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("alpha"), std::string::npos) << r.output;

  fs::path missing = testing::TempPath("no_such.cfg");
  EXPECT_EQ(Cli("simulate --config " + missing.string() + " --out " +
                testing::TempPath("cli_missing"))
                .code,
            2);
}

TEST(CliTest, SeededRerunIsIdentical) {
  fs::path cfg = WriteConfig("cli_rerun.cfg", kSmall);
  fs::path a = testing::TempPath("cli_rerun_a");
  fs::path b = testing::TempPath("cli_rerun_b");
  ASSERT_EQ(Cli("simulate --config " + cfg.string() + " --seed 9 --out " +
                a.string())
                .code,
            0);
  ASSERT_EQ(Cli("simulate --config " + cfg.string() + " --seed 9 --out " +
                b.string())
                .code,
            0);
  std::string ha = Slurp(a / "history.jsonl");
  ASSERT_FALSE(ha.empty());
  EXPECT_EQ(StripTiming(ha), StripTiming(Slurp(b / "history.jsonl")));
  EXPECT_EQ(Slurp(a / "model.json"), Slurp(b / "model.json"));
}

TEST(CliTest, NodeRejectsBadId) {
  RunResult r = Cli("node --config " + Config("tcp_loopback.cfg") +
                    " --id 9");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("--id"), std::string::npos) << r.output;
}

TEST(CliTest, PlaintextWarns) {
  fs::path cfg = WriteConfig("cli_plain.cfg", kSmall);
  RunResult r = Cli("simulate --plaintext --config " + cfg.string() +
                    " --out " + testing::TempPath("cli_plain"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("WARNING"), std::string::npos);
}

TEST(CliTest, PartitionWritesNodeFiles) {
  fs::path cfg = WriteConfig("cli_part.cfg", kSmall);
  fs::path out = testing::TempPath("cli_part");
  ASSERT_EQ(Cli("partition --config " + cfg.string() + " --out " +
                out.string())
                .code,
            0);
  for (const char* f : {"node_1.csv", "node_2.csv", "node_3.csv",
                        "labels.csv", "plan.txt"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
}

TEST(CliTest, AuditReadsRecordedRun) {
  fs::path cfg = WriteConfig("cli_audit.cfg", kSmall);
  fs::path out = testing::TempPath("cli_audit");
  ASSERT_EQ(Cli("simulate --config " + cfg.string() + " --out " +
                out.string())
                .code,
            0);
  RunResult r = Cli("audit --run " + out.string() + " --adversary agg,1");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("status: PASS"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "audit.txt"));
  EXPECT_EQ(Cli("audit --run " + out.string() + " --adversary 7").code, 2);
}

TEST(CliTest, BenchAndCompare) {
  fs::path cfg = WriteConfig("cli_bench.cfg", kSmall);
  RunResult b = Cli("bench --config " + cfg.string() +
                    " --iterations 2 --profiles lan");
  EXPECT_EQ(b.code, 0) << b.output;
  EXPECT_NE(b.output.find("step2_bytes"), std::string::npos);
  EXPECT_NE(b.output.find("lan\t2\t"), std::string::npos);

  RunResult c = Cli("compare --plaintext --config " + cfg.string());
  EXPECT_EQ(c.code, 0) << c.output;
  EXPECT_NE(c.output.find("PASS"), std::string::npos);
  RunResult ring = Cli("compare --config " + cfg.string());
  EXPECT_EQ(ring.code, 0) << ring.output;
}

}  // namespace
}  // namespace privcoll
