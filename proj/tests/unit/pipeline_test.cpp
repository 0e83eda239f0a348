// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include <gtest/gtest.h>

#include "common/error.hpp"
#include "common/files.hpp"
#include "pipeline/config.hpp"
#include "pipeline/coco_import.hpp"
#include "pipeline/pipeline.hpp"
#include "soundness.hpp"
#include "support.hpp"

namespace meltcheck {
namespace {

using nlohmann::json;
using pipeline::Pipeline;
using pipeline::RunConfig;

RunConfig fixture_config(const std::filesystem::path& out) {
  auto doc = read_json(test::fixtures() / "run_config.json");
  doc["out"] = out.string();
  return RunConfig::from_json(doc, test::fixtures());
}

TEST(Soundness, PerfectCaptionsNeverRaiseIssues) {
  auto result = test::soundness_sweep(test::sweep_seeds(), test::lex());
  EXPECT_EQ(result.max_meltable, 4u);
  EXPECT_GT(result.pairs, 100u);
  EXPECT_TRUE(result.issues.empty()) << result.issues.front();
}

TEST(Pipeline, RunMatchesGoldenFiles) {
  test::TempDir dir;
  Pipeline p(fixture_config(dir.path()));
  auto summary = p.run();
  EXPECT_EQ(summary["check"]["issues"], 6);
  EXPECT_EQ(read_text(dir / "issues.jsonl"), read_text(test::fixtures() / "golden" / "issues.jsonl"));
  EXPECT_EQ(read_text(dir / "gt_flags.jsonl"), read_text(test::fixtures() / "golden" / "gt_flags.jsonl"));
  EXPECT_EQ(read_jsonl(dir / "plan.jsonl").size(), 29u);
  EXPECT_TRUE(std::filesystem::exists(dir / "images" / "s3" / "2-4.png"));
  EXPECT_TRUE(std::filesystem::exists(dir / "images" / "s1" / "root.png"));
}

TEST(Pipeline, StagesRunSeparatelyMatchRun) {
  test::TempDir dir;
  {
    Pipeline p(fixture_config(dir.path()));
    p.plan();
    p.melt();
  }
  {
    // A fresh process picking up where the last one stopped.
    Pipeline p(fixture_config(dir.path()));
    p.caption();
    p.check();
    p.audit_gt();
  }
  EXPECT_EQ(read_text(dir / "issues.jsonl"), read_text(test::fixtures() / "golden" / "issues.jsonl"));
}

TEST(Pipeline, RerunReusesImagesAndCaptions) {
  test::TempDir dir;
  Pipeline(fixture_config(dir.path())).run();
  auto summary = Pipeline(fixture_config(dir.path())).run();
  EXPECT_EQ(summary["melt"]["backend_calls"], 0);
  EXPECT_EQ(summary["caption"]["adapters"]["planted"]["adapter_calls"], 0);
  EXPECT_EQ(read_text(dir / "issues.jsonl"), read_text(test::fixtures() / "golden" / "issues.jsonl"));
}

TEST(Pipeline, StagesNeedTheirInputs) {
  test::TempDir dir;
  Pipeline p(fixture_config(dir.path()));
  EXPECT_THROW(p.check(), Error);
}

TEST(Pipeline, AdapterFailureLandsInUnchecked) {
  test::TempDir dir;
  auto fixture = read_json(test::fixtures() / "stub" / "ref.json");
  fixture.erase("s1/3");
  write_file_atomic(dir / "partial.json", fixture.dump());
  auto cfg = fixture_config(dir / "out");
  cfg.adapters = {captioner::AdapterConfig::from_json({{"id", "partial"}, {"kind", "stub"}, {"fixture", (dir / "partial.json").string()}})};
  cfg.reference_adapter.reset();
  Pipeline p(cfg);
  auto summary = p.run();
  // s1/3 is used by (root, {3}) and ({3}, {2,3}).
  EXPECT_EQ(read_jsonl(dir / "out" / "unchecked.jsonl").size(), 2u);
  EXPECT_EQ(summary["check"]["issues"], 0);
}

TEST(Pipeline, PrecisionFromVerdictFile) {
  test::TempDir dir;
  Pipeline p(fixture_config(dir.path()));
  p.run();
  auto stats = p.precision(test::fixtures() / "verdicts.jsonl");
  EXPECT_EQ(stats["labeled"], 5);
  EXPECT_EQ(stats["erroneous"], 4);
  EXPECT_EQ(stats["pending"], 1);
  EXPECT_EQ(stats["precision_text"], "80.00%");
}

TEST(RunConfig, ParsesAndRejects) {
  auto cfg = fixture_config("/tmp/x");
  EXPECT_EQ(cfg.adapters.size(), 2u);
  EXPECT_EQ(cfg.audit_adapter().id, "ref");
  auto doc = read_json(test::fixtures() / "run_config.json");
  doc["plan"]["max_depth"] = "unlimited";
  EXPECT_FALSE(RunConfig::from_json(doc, test::fixtures()).plan.max_depth);
  doc["surprise"] = 1;
  EXPECT_THROW(RunConfig::from_json(doc, test::fixtures()), Error);
  doc = read_json(test::fixtures() / "run_config.json");
  doc["reference_adapter"] = "nobody";
  EXPECT_THROW(RunConfig::from_json(doc, test::fixtures()).validate(), Error);
  doc = read_json(test::fixtures() / "run_config.json");
  doc["adapters"][1]["id"] = "ref";
  EXPECT_THROW(RunConfig::from_json(doc, test::fixtures()).validate(), Error);
  EXPECT_EQ(RunConfig::from_json(cfg.to_json()).to_json(), cfg.to_json());
}

TEST(CocoImport, ConvertsPolygonsAndSkipsCrowds) {
  test::TempDir dir;
  std::filesystem::copy_file(test::fixtures() / "corpus" / "s1.png", dir / "000000000042.png");
  json instances = {
      {"images", {{{"id", 42}, {"file_name", "000000000042.png"}, {"width", 64}, {"height", 48}},
                  {{"id", 43}, {"file_name", "missing.png"}, {"width", 64}, {"height", 48}}}},
      {"categories", {{{"id", 1}, {"name", "person"}}, {{"id", 18}, {"name", "dog"}}, {{"id", 99}, {"name", "yeti"}}}},
      {"annotations",
       {{{"id", 7}, {"image_id", 42}, {"category_id", 18}, {"iscrowd", 0},
         {"segmentation", {{10, 10, 30, 10, 30, 30, 10, 30}}}, {"bbox", {10, 10, 20, 20}}},
        {{"id", 5}, {"image_id", 42}, {"category_id", 1}, {"iscrowd", 0},
         {"segmentation", {{40, 5, 50, 5, 50, 45, 40, 45}}}, {"bbox", {40, 5, 10, 42}}},
        {{"id", 9}, {"image_id", 42}, {"category_id", 1}, {"iscrowd", 1},
         {"segmentation", {{"counts", "xyz"}, {"size", {48, 64}}}}, {"bbox", {0, 0, 5, 5}}},
        {{"id", 11}, {"image_id", 42}, {"category_id", 99}, {"iscrowd", 0},
         {"segmentation", {{1, 1, 3, 1, 3, 3}}}, {"bbox", {1, 1, 2, 2}}}}}};
  json captions = {{"annotations", {{{"id", 2}, {"image_id", 42}, {"caption", "a dog and a man"}},
                                    {{"id", 1}, {"image_id", 42}, {"caption", "a man with his dog"}}}}};
  write_file_atomic(dir / "instances.json", instances.dump());
  write_file_atomic(dir / "captions.json", captions.dump());
  auto report = pipeline::import_coco(dir / "instances.json", dir / "captions.json", dir.path(), dir / "out" / "corpus.json");
  EXPECT_EQ(report.seeds, 1u);
  EXPECT_EQ(report.objects, 2u);
  EXPECT_EQ(report.skipped_crowd, 1u);
  EXPECT_EQ(report.images_missing, 1u);
  EXPECT_EQ(report.rejected_categories["yeti"], 1u);
  auto seeds = corpus::load_corpus(dir / "out" / "corpus.json");
  ASSERT_EQ(seeds.size(), 1u);
  EXPECT_EQ(seeds[0].seed_id, "000000000042");
  EXPECT_EQ(seeds[0].annotations[0].class_name, "person");  // source id 5 comes first
  EXPECT_EQ(seeds[0].annotations[0].object_id, 1);
  EXPECT_EQ(seeds[0].gt_captions.front(), "a man with his dog");
}

}  // namespace
}  // namespace meltcheck
