// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

// Drives the meltcheck executable as a subprocess.
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "common/files.hpp"
#include "json.hpp"
#include "support.hpp"

namespace meltcheck {
namespace {

using nlohmann::json;

struct Result {
  int exit_code = -1;
  std::string out;
  std::string err;
};

Result cli(const std::string& args, const test::TempDir& dir) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  std::string cmd = std::string(MELTCHECK_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  int status = std::system(cmd.c_str());
  Result r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text(out);
  r.err = read_text(err);
  return r;
}

std::string config_arg() { return "--config " + (test::fixtures() / "run_config.json").string(); }

TEST(Cli, PlanWritesOneLinePerPair) {
  test::TempDir dir;
  auto r = cli(config_arg() + " --out " + (dir / "out").string() + " plan", dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["pairs"], 29);
  EXPECT_EQ(read_jsonl(dir / "out" / "plan.jsonl").size(), 29u);
}

TEST(Cli, MaxDepthFlagOverridesConfig) {
  test::TempDir dir;
  auto r = cli(config_arg() + " --out " + (dir / "out").string() + " --max-depth unlimited plan", dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  // s1 has 2 meltable objects, s2 and s3 have 3: (9-4) + 2 * (27-8).
  EXPECT_EQ(json::parse(r.out)["pairs"], 43);
}

TEST(Cli, RunIsByteStableAcrossRuns) {
  test::TempDir dir;
  for (int i = 0; i < 3; ++i) {
    auto out = dir / ("run" + std::to_string(i));
    auto r = cli(config_arg() + " --out " + out.string() + " --jobs " + std::to_string(i + 1) + " run", dir);
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(read_text(out / "issues.jsonl"), read_text(test::fixtures() / "golden" / "issues.jsonl"));
    EXPECT_EQ(read_text(out / "gt_flags.jsonl"), read_text(test::fixtures() / "golden" / "gt_flags.jsonl"));
    EXPECT_EQ(read_text(out / "plan.jsonl"), read_text(dir / "run0" / "plan.jsonl"));
    EXPECT_EQ(read_text(out / "melted.jsonl"), read_text(dir / "run0" / "melted.jsonl"));
  }
}

TEST(Cli, StubAdapterFlag) {
  test::TempDir dir;
  auto corpus = (test::fixtures() / "corpus").string();
  auto r = cli("--corpus " + corpus + " --out " + (dir / "out").string() + " --adapter stub:" +
                   (test::fixtures() / "stub" / "planted.json").string() + " run",
               dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["check"]["issues"], 6);
}

TEST(Cli, PrecisionLine) {
  test::TempDir dir;
  auto out = (dir / "out").string();
  ASSERT_EQ(cli(config_arg() + " --out " + out + " run", dir).exit_code, 0);
  auto r = cli(config_arg() + " --out " + out + " precision --verdicts " + (test::fixtures() / "verdicts.jsonl").string(), dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out, "80.00% (4/5 labeled, 1 pending)\n");
  r = cli(config_arg() + " --out " + out + " precision", dir);
  EXPECT_EQ(r.out, "undefined (0/0 labeled, 6 pending)\n");
}

TEST(Cli, CountPairs) {
  test::TempDir dir;
  EXPECT_EQ(cli("count-pairs 8 --max-depth unlimited", dir).out, "6305\n");
  EXPECT_EQ(cli("count-pairs 3", dir).out, "12\n");
  EXPECT_EQ(cli("count-pairs 3 --max-depth 1", dir).out, "3\n");
}

TEST(Cli, ErrorsAreJsonOnStderrWithStatusExit) {
  test::TempDir dir;
  auto r = cli("--corpus /nonexistent --out " + (dir / "out").string() + " plan", dir);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_TRUE(r.out.empty());
  auto err = json::parse(r.err);
  EXPECT_EQ(err["error"]["code"], "corpus");
  EXPECT_FALSE(err["error"]["message"].get<std::string>().empty());

  r = cli("count-pairs 80 --max-depth unlimited", dir);
  EXPECT_EQ(r.exit_code, 6);
  EXPECT_EQ(json::parse(r.err)["error"]["code"], "overflow");

  r = cli("frobnicate", dir);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(json::parse(r.err)["error"]["code"], "invalid_argument");
}

}  // namespace
}  // namespace meltcheck
