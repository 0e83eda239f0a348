// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include <gtest/gtest.h>

#include <random>

#include "common/error.hpp"
#include "corpus/corpus.hpp"
#include "mr_golden.hpp"
#include "oracle/oracle.hpp"
#include "planner/planner.hpp"
#include "support.hpp"

namespace meltcheck {
namespace {

using oracle::ClassSet;
using planner::MeltPair;

captioner::CaptionRecord caption(const std::string& key, const std::string& text) {
  return {"stub", key, text, 0, "2026-01-01T00:00:00Z"};
}

TEST(MrGolden, HandEvaluatedCases) {
  ASSERT_GE(test::mr_golden_cases().size(), 20u);
  for (const auto& c : test::mr_golden_cases()) {
    auto r1 = oracle::check_mr1(c.ancestor, c.descendant, c.deleted);
    EXPECT_EQ(r1.violated, !c.mr1.empty()) << c.name;
    EXPECT_EQ(r1.violating, c.mr1) << c.name;
    if (c.mr2) {
      auto r2 = oracle::check_mr2(c.ancestor, c.descendant, c.alldel);
      EXPECT_EQ(r2.violated, !c.mr2->empty()) << c.name;
      EXPECT_EQ(r2.violating, *c.mr2) << c.name;
    } else {
      EXPECT_TRUE(c.alldel.empty()) << c.name;
    }
  }
}

TEST(MrCheck, ClassMeltWithNothingMeltedIsAnInternalError) {
  try {
    oracle::check_mr2({"cat"}, {"cat"}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::internal);
  }
}

ClassSet random_subset(std::mt19937& rng, const std::vector<std::string>& pool) {
  ClassSet s;
  for (const auto& c : pool)
    if (rng() % 2) s.insert(c);
  return s;
}

TEST(MrProperties, ViolatingClassesAreMentionedAndWidenMonotonically) {
  const std::vector<std::string> pool = {"cat", "dog", "person", "car", "cup", "bus"};
  std::mt19937 rng(11);
  for (int i = 0; i < 2000; ++i) {
    ClassSet a = random_subset(rng, pool), d = random_subset(rng, pool), del = random_subset(rng, pool);
    auto r1 = oracle::check_mr1(a, d, del);
    for (const auto& c : r1.violating) EXPECT_TRUE(a.count(c) || d.count(c));
    // Deleting more can only excuse more losses.
    ClassSet bigger = del;
    bigger.insert(pool[rng() % pool.size()]);
    auto r1b = oracle::check_mr1(a, d, bigger);
    EXPECT_TRUE(std::includes(r1.violating.begin(), r1.violating.end(), r1b.violating.begin(), r1b.violating.end()));
    // A descendant naming exactly the ancestor's classes minus deleted ones passes.
    ClassSet kept;
    std::set_difference(a.begin(), a.end(), del.begin(), del.end(), std::inserter(kept, kept.end()));
    EXPECT_FALSE(oracle::check_mr1(a, kept, del).violated);
    if (!del.empty()) {
      EXPECT_FALSE(oracle::check_mr2(a, kept, del).violated);
      auto r2 = oracle::check_mr2(a, d, del);
      for (const auto& c : r2.violating) EXPECT_TRUE(d.count(c));
    }
  }
}

class FixtureSeeds : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { seeds_ = new std::vector<corpus::SeedImage>(corpus::load_corpus(test::fixtures() / "corpus")); }
  static void TearDownTestSuite() {
    delete seeds_;
    seeds_ = nullptr;
  }
  const corpus::SeedImage& seed(int i) const { return (*seeds_)[i]; }
  static std::vector<corpus::SeedImage>* seeds_;
};
std::vector<corpus::SeedImage>* FixtureSeeds::seeds_ = nullptr;

TEST_F(FixtureSeeds, DeletedAndFullyMeltedClasses) {
  // s3: dining table 1, cups 2 and 3, pizza 4.
  const auto& s3 = seed(2);
  MeltPair p{{"s3", {}}, {"s3", {2}}};
  EXPECT_EQ(oracle::deleted_classes(s3, p), ClassSet{"cup"});
  EXPECT_TRUE(oracle::alldel_classes(s3, p).empty());
  p = {{"s3", {2}}, {"s3", {2, 3}}};
  EXPECT_EQ(oracle::alldel_classes(s3, p), ClassSet{"cup"});
  p = {{"s3", {2}}, {"s3", {2, 4}}};
  EXPECT_EQ(oracle::deleted_classes(s3, p), ClassSet{"pizza"});
  EXPECT_EQ(oracle::alldel_classes(s3, p), ClassSet{"pizza"});
}

TEST_F(FixtureSeeds, OnlyPersonStillNamedAsManIsClassMelt) {
  const auto& s2 = seed(1);
  MeltPair p{{"s2", {}}, {"s2", {2}}};
  auto issue = oracle::evaluate_pair(s2, p, caption("s2/root", "a person walking a dog past a bus parked near a bench"),
                                     caption("s2/2", "a man walking a dog past a bus parked near a bench"), test::lex());
  ASSERT_TRUE(issue);
  EXPECT_EQ(issue->relation, oracle::Relation::mr2);
  EXPECT_EQ(issue->violating, ClassSet{"person"});
  EXPECT_EQ(issue->mr2_violating, ClassSet{"person"});
  EXPECT_TRUE(issue->mr1_violating.empty());
  EXPECT_EQ(issue->issue_id.size(), 16u);
}

TEST_F(FixtureSeeds, IntroducedBallIsObjectMeltOnly) {
  const auto& s3 = seed(2);
  MeltPair p{{"s3", {}}, {"s3", {2}}};
  auto issue = oracle::evaluate_pair(s3, p, caption("s3/root", "two cups and a pizza on a dining table"),
                                     caption("s3/2", "a cup and a pizza on a dining table next to a ball"),
                                     test::lex());
  ASSERT_TRUE(issue);
  EXPECT_EQ(issue->relation, oracle::Relation::mr1);
  EXPECT_EQ(issue->violating, ClassSet{"sports ball"});
}

TEST_F(FixtureSeeds, ConsistentCaptionsRaiseNothing) {
  const auto& s3 = seed(2);
  MeltPair p{{"s3", {}}, {"s3", {2}}};
  EXPECT_FALSE(oracle::evaluate_pair(s3, p, caption("s3/root", "two cups and a pizza on a dining table"),
                                     caption("s3/2", "a cup and a pizza on a dining table"), test::lex()));
}

TEST_F(FixtureSeeds, IssueJsonRoundTripsAndRejectsTampering) {
  const auto& s2 = seed(1);
  MeltPair p{{"s2", {}}, {"s2", {2}}};
  auto issue = oracle::evaluate_pair(s2, p, caption("s2/root", "a person walking a dog past a bus"),
                                     caption("s2/2", "a man walking a dog past a bus"), test::lex());
  ASSERT_TRUE(issue);
  auto json = issue->to_json();
  EXPECT_FALSE(json.dump().find("2026-01-01") != std::string::npos);
  auto back = oracle::issue_from_json(json);
  EXPECT_EQ(back.to_json(), json);
  json["violating_classes"] = {"dog"};
  EXPECT_THROW(oracle::issue_from_json(json), Error);
}

TEST(IssueId, StableAndSensitiveToEveryInput) {
  MeltPair p{{"s", {}}, {"s", {2}}};
  MeltPair q{{"s", {}}, {"s", {3}}};
  auto a = oracle::issue_id("ofa", p, "v1");
  EXPECT_EQ(a, oracle::issue_id("ofa", p, "v1"));
  EXPECT_NE(a, oracle::issue_id("blip", p, "v1"));
  EXPECT_NE(a, oracle::issue_id("ofa", q, "v1"));
  EXPECT_NE(a, oracle::issue_id("ofa", p, "v2"));
}

TEST(GtAudit, FlagsMissingInvariantClasses) {
  auto flag = oracle::audit_ground_truth("a zebra and a bird in a field", "a zebra in a field",
                                         {"a giraffe standing in the grass", "a giraffe and a bird"}, test::lex());
  ASSERT_TRUE(flag);
  EXPECT_EQ(flag->invariant, ClassSet{"zebra"});
  EXPECT_EQ(flag->missing, ClassSet{"zebra"});
}

TEST(GtAudit, NoFlagWhenGroundTruthCoversInvariants) {
  EXPECT_FALSE(oracle::audit_ground_truth("two cups on a dining table", "a cup on a dining table",
                                          {"coffee cups on a dining table"}, test::lex()));
  EXPECT_FALSE(oracle::audit_ground_truth("a bus and a bench", "a bus", {"a city bus"}, test::lex()));
}

TEST(GtAudit, NeverFlagsWhenAncestorCaptionIsInGroundTruth) {
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"a man riding a horse next to a dog", "a man riding a horse"},
      {"a pizza and two cups on a dining table", "a cup on a table"},
      {"a cat sleeping on a couch", "an empty couch"}};
  for (const auto& [a, d] : pairs) {
    EXPECT_FALSE(oracle::audit_ground_truth(a, d, {"something else", a}, test::lex())) << a;
  }
}

TEST(Precision, HeadlineRatioAndSentinel) {
  EXPECT_EQ(oracle::format_precision(1824, 1979), "92.17%");
  EXPECT_EQ(oracle::format_precision(0, 0), "undefined");
  EXPECT_EQ(oracle::format_precision(18, 20), "90.00%");
  EXPECT_EQ(oracle::format_precision(2, 3), "66.67%");
  EXPECT_EQ(oracle::format_precision(5, 5), "100.00%");
  EXPECT_EQ(oracle::format_precision(0, 7), "0.00%");
}

TEST(Precision, RoundsHalfUp) {
  EXPECT_EQ(oracle::format_precision(1, 20000), "0.01%");  // exactly 0.005%
  EXPECT_EQ(oracle::format_precision(1, 30000), "0.00%");
  EXPECT_EQ(oracle::format_precision(1, 16), "6.25%");
  EXPECT_EQ(oracle::format_precision(1, 8), "12.50%");
  EXPECT_EQ(oracle::format_precision(19999, 20000), "100.00%");  // exactly 9999.5 bp
  EXPECT_THROW(oracle::format_precision(3, 2), Error);
}

oracle::SuspiciousIssue stub_issue(const std::string& id, const std::string& adapter = "a") {
  oracle::SuspiciousIssue i;
  i.issue_id = id;
  i.adapter_id = adapter;
  return i;
}

oracle::Verdict verdict(const std::string& id, bool erroneous, const std::string& category,
                        const std::string& annotator = "ann") {
  oracle::Verdict v;
  v.issue_id = id;
  v.erroneous = erroneous;
  v.annotator = annotator;
  v.labeled_at = "2026-01-01T00:00:00Z";
  if (erroneous) {
    v.error_category = category;
    v.which_caption = "descendant";
  } else {
    v.fp_category = category;
  }
  return v;
}

TEST(Precision, CountsOnlyLabeledIssues) {
  std::vector<oracle::SuspiciousIssue> issues;
  std::vector<oracle::Verdict> verdicts;
  for (int i = 0; i < 25; ++i) issues.push_back(stub_issue("i" + std::to_string(i)));
  for (int i = 0; i < 18; ++i) verdicts.push_back(verdict("i" + std::to_string(i), true, "omission"));
  verdicts.push_back(verdict("i18", false, "synonym_rule"));
  verdicts.push_back(verdict("i19", false, "inpainting_artifact"));
  auto stats = oracle::compute_precision(issues, verdicts);
  EXPECT_EQ(stats.total.labeled, 20u);
  EXPECT_EQ(stats.total.pending, 5u);
  EXPECT_EQ(stats.total.erroneous, 18u);
  EXPECT_EQ(stats.total.precision_text, "90.00%");
  EXPECT_EQ(stats.error_categories["omission"], 18u);
  EXPECT_EQ(stats.fp_categories["synonym_rule"], 1u);
  EXPECT_EQ(stats.error_categories["quantity"], 0u);
}

TEST(Precision, LatestVerdictPerAnnotatorWins) {
  std::vector<oracle::SuspiciousIssue> issues = {stub_issue("x")};
  std::vector<oracle::Verdict> v = {verdict("x", true, "omission", "a"), verdict("x", false, "synonym_rule", "a")};
  auto stats = oracle::compute_precision(issues, v);
  EXPECT_EQ(stats.total.erroneous, 0u);
  EXPECT_EQ(stats.total.labeled, 1u);
  v.push_back(verdict("x", true, "action", "b"));
  stats = oracle::compute_precision(issues, v);
  EXPECT_EQ(stats.total.erroneous, 1u);
  EXPECT_EQ(stats.total.disputed, 1u);
}

TEST(Precision, ZeroLabeledIsUndefined) {
  auto stats = oracle::compute_precision({stub_issue("x")}, {});
  EXPECT_FALSE(stats.total.precision);
  EXPECT_EQ(stats.total.precision_text, "undefined");
  EXPECT_EQ(stats.to_json()["precision_text"], "undefined");
}

TEST(Verdicts, ValidationRules) {
  EXPECT_NO_THROW(verdict("x", true, "omission").validate());
  EXPECT_NO_THROW(verdict("x", false, "number_form").validate());
  EXPECT_THROW(verdict("x", true, "typo").validate(), Error);
  EXPECT_THROW(verdict("x", false, "omission").validate(), Error);
  auto v = verdict("x", true, "omission");
  v.which_caption.reset();
  EXPECT_THROW(v.validate(), Error);
  v = verdict("x", true, "omission");
  v.annotator.clear();
  EXPECT_THROW(v.validate(), Error);
  v = verdict("x", true, "quantity");
  EXPECT_EQ(oracle::Verdict::from_json(v.to_json()).to_json(), v.to_json());
}

}  // namespace
}  // namespace meltcheck
