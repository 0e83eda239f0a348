// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

// Exercises the shared library through its C header only.
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "meltcheck/meltcheck.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string take(char* s) {
  std::string out = s ? s : "";
  mc_free(s);
  return out;
}

json last_error() { return json::parse(mc_last_error()); }

struct OutDir {
  fs::path path = fs::temp_directory_path() / ("meltcheck-capi-" + std::to_string(::getpid()));
  OutDir() { fs::remove_all(path); }
  ~OutDir() { fs::remove_all(path); }
};

mc_context* fixture_context(const fs::path& out) {
  json cfg = json::parse(slurp(fs::path(MELTCHECK_TEST_FIXTURES) / "run_config.json"));
  cfg["out"] = out.string();
  mc_context* ctx = nullptr;
  EXPECT_EQ(mc_context_create(cfg.dump().c_str(), MELTCHECK_TEST_FIXTURES, &ctx), MC_OK);
  return ctx;
}

TEST(CApi, CountPairs) {
  uint64_t n = 0;
  ASSERT_EQ(mc_count_pairs(8, 0, &n), MC_OK);
  EXPECT_EQ(n, 6305u);
  ASSERT_EQ(mc_count_pairs(4, 2, &n), MC_OK);
  EXPECT_EQ(n, 4u + 6u * 3u);
  EXPECT_EQ(mc_count_pairs(64, 0, &n), MC_ERR_OVERFLOW);
  EXPECT_EQ(last_error()["code"], "overflow");
  EXPECT_EQ(mc_count_pairs(3, 0, nullptr), MC_ERR_INVALID_ARGUMENT);
}

TEST(CApi, FormatPrecision) {
  char* s = nullptr;
  ASSERT_EQ(mc_format_precision(1824, 1979, &s), MC_OK);
  EXPECT_EQ(take(s), "92.17%");
  ASSERT_EQ(mc_format_precision(0, 0, &s), MC_OK);
  EXPECT_EQ(take(s), "undefined");
  EXPECT_EQ(mc_format_precision(5, 4, &s), MC_ERR_INVALID_ARGUMENT);
}

TEST(CApi, StatusNamesAndLastErrorReset) {
  EXPECT_STREQ(mc_status_name(MC_ERR_CORPUS), "corpus");
  uint64_t n = 0;
  mc_count_pairs(64, 0, &n);
  EXPECT_NE(mc_last_error(), nullptr);
  mc_count_pairs(3, 0, &n);
  EXPECT_EQ(mc_last_error(), nullptr);
}

TEST(CApi, BadConfigIsRejected) {
  mc_context* ctx = nullptr;
  EXPECT_EQ(mc_context_create("{not json", nullptr, &ctx), MC_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(mc_context_create(R"({"mystery": 1})", nullptr, &ctx), MC_ERR_INVALID_ARGUMENT);
  EXPECT_NE(last_error()["message"].get<std::string>().find("mystery"), std::string::npos);
  EXPECT_EQ(ctx, nullptr);
}

TEST(CApi, MissingCorpusIsCorpusError) {
  OutDir out;
  mc_context* ctx = nullptr;
  json cfg = {{"corpus", "/nonexistent"}, {"out", out.path.string()}};
  ASSERT_EQ(mc_context_create(cfg.dump().c_str(), nullptr, &ctx), MC_OK);
  char* summary = nullptr;
  EXPECT_EQ(mc_plan(ctx, &summary), MC_ERR_CORPUS);
  EXPECT_EQ(last_error()["code"], "corpus");
  mc_context_destroy(ctx);
}

TEST(CApi, RunWritesGoldenIssues) {
  OutDir out;
  mc_context* ctx = fixture_context(out.path);
  ASSERT_NE(ctx, nullptr);
  char* summary = nullptr;
  ASSERT_EQ(mc_run(ctx, &summary), MC_OK) << mc_last_error();
  auto s = json::parse(take(summary));
  EXPECT_EQ(s["check"]["issues"], 6);
  EXPECT_EQ(slurp(out.path / "issues.jsonl"), slurp(fs::path(MELTCHECK_TEST_FIXTURES) / "golden" / "issues.jsonl"));

  char* stats = nullptr;
  std::string verdicts = (fs::path(MELTCHECK_TEST_FIXTURES) / "verdicts.jsonl").string();
  ASSERT_EQ(mc_precision(ctx, verdicts.c_str(), &stats), MC_OK);
  EXPECT_EQ(json::parse(take(stats))["precision_text"], "80.00%");
  mc_context_destroy(ctx);
}

TEST(CApi, ServerAnswersOverHttp) {
  OutDir out;
  mc_context* ctx = fixture_context(out.path);
  char* summary = nullptr;
  ASSERT_EQ(mc_run(ctx, &summary), MC_OK);
  mc_free(summary);
  mc_server* server = nullptr;
  ASSERT_EQ(mc_server_start(ctx, "127.0.0.1", 0, nullptr, &server), MC_OK) << mc_last_error();
  int port = mc_server_port(server);
  ASSERT_GT(port, 0);
  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/api/stats");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body)["issues"], 6);
  res = client.Get("/api/images/s3/2.png");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  mc_server_stop(server);
  mc_server_wait(server);
  mc_server_destroy(server);
  mc_context_destroy(ctx);
}

TEST(CApi, NullArguments) {
  char* s = nullptr;
  EXPECT_EQ(mc_run(nullptr, &s), MC_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(mc_set_log_level("loud"), MC_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(mc_set_log_level("off"), MC_OK);
  mc_context_destroy(nullptr);
  mc_server_destroy(nullptr);
}

}  // namespace
