// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "captioner/captioner.hpp"
#include "corpus/corpus.hpp"
#include "json.hpp"
#include "lexicon/lexicon.hpp"
#include "planner/planner.hpp"

namespace meltcheck::oracle {

using ClassSet = std::set<std::string>;

struct CheckResult {
  bool violated = false;
  ClassSet violating;
};

/// Object-melt relation: the descendant's classes must be a subset of the
/// ancestor's, and anything the descendant lost must be a deleted class.
CheckResult check_mr1(const ClassSet& ancestor, const ClassSet& descendant, const ClassSet& deleted);

/// Class-melt relation: once every instance of a class is gone, the
/// descendant may only name classes of the ancestor minus those.
/// Throws Error(internal) when `alldel` is empty; callers must skip MR2 then.
CheckResult check_mr2(const ClassSet& ancestor, const ClassSet& descendant, const ClassSet& alldel);

/// Classes of the objects removed along the edge (descendant minus ancestor).
ClassSet deleted_classes(const corpus::SeedImage& seed, const planner::MeltPair& pair);

/// Classes with at least one instance removed along the edge and no instance
/// left in the descendant.
ClassSet alldel_classes(const corpus::SeedImage& seed, const planner::MeltPair& pair);

enum class Relation { mr1, mr2, both };
std::string_view to_string(Relation relation);
Relation relation_from_string(std::string_view text);

struct LexiconOptions {
  unsigned depth = lexicon::kDefaultDepth;
  bool pair_relative = false;  // resolve only onto keywords the caption pair names
};

struct SuspiciousIssue {
  std::string issue_id;
  std::string adapter_id;
  std::string lexicon_version;
  planner::MeltPair pair;
  captioner::CaptionRecord ancestor_caption;
  captioner::CaptionRecord descendant_caption;
  lexicon::ObjectClassSet ancestor_set;
  lexicon::ObjectClassSet descendant_set;
  ClassSet deleted;
  ClassSet alldel;
  Relation relation = Relation::mr1;
  ClassSet violating;
  ClassSet mr1_violating;
  ClassSet mr2_violating;

  /// Timestamps and latencies are left out so reruns produce identical lines.
  nlohmann::json to_json() const;
};

/// Parses an issue and re-derives its verdict from the stored sets.
/// Throws Error(invalid_argument) when the record is malformed or the stored
/// relation/violating classes disagree with the recheck.
SuspiciousIssue issue_from_json(const nlohmann::json& value);

/// First 16 hex digits of SHA-256 over adapter, pair and lexicon version.
std::string issue_id(const std::string& adapter_id, const planner::MeltPair& pair,
                     const std::string& lexicon_version);

/// Extracts both object sets, runs MR1 (always) and MR2 (when some class is
/// fully melted) and returns an issue if either is violated.
std::optional<SuspiciousIssue> evaluate_pair(const corpus::SeedImage& seed,
                                             const planner::MeltPair& pair,
                                             const captioner::CaptionRecord& ancestor,
                                             const captioner::CaptionRecord& descendant,
                                             const lexicon::Lexicon& lex,
                                             const LexiconOptions& options = {});

struct GtFlag {
  ClassSet invariant;  // classes both captions agree on
  ClassSet gt_classes;
  ClassSet missing;    // invariant minus gt_classes, nonempty
};

/// Flags ground-truth captions that miss a class both captions of a pair name.
std::optional<GtFlag> audit_ground_truth(const std::string& ancestor_caption,
                                         const std::string& descendant_caption,
                                         const std::vector<std::string>& gt_captions,
                                         const lexicon::Lexicon& lex,
                                         unsigned depth = lexicon::kDefaultDepth);

// Human triage labels.
inline const std::vector<std::string> kErrorCategories = {"misclassification", "omission", "quantity",
                                                          "action", "no_caption"};
inline const std::vector<std::string> kFalsePositiveCategories = {
    "synonym_rule", "inpainting_artifact", "number_form", "insignificant_object"};
inline const std::vector<std::string> kWhichCaption = {"ancestor", "descendant", "both"};

struct Verdict {
  std::string issue_id;
  bool erroneous = false;
  std::optional<std::string> error_category;
  std::optional<std::string> which_caption;
  std::optional<std::string> fp_category;
  std::string annotator;
  std::string labeled_at;

  /// Throws Error(invalid_argument) naming the first broken rule.
  void validate() const;
  nlohmann::json to_json() const;
  static Verdict from_json(const nlohmann::json& value);
};

/// Formats erroneous/labeled as a percentage rounded half-up to two decimals
/// ("92.17%"), or "undefined" when nothing is labeled.
std::string format_precision(std::uint64_t erroneous, std::uint64_t labeled);

struct Counts {
  std::size_t issues = 0;
  std::size_t labeled = 0;
  std::size_t pending = 0;
  std::size_t erroneous = 0;
  std::size_t false_positive = 0;
  std::size_t disputed = 0;  // annotators' latest verdicts disagree
  std::optional<double> precision;
  std::string precision_text = "undefined";
};

struct Stats {
  Counts total;
  std::map<std::string, std::size_t> error_categories;
  std::map<std::string, std::size_t> fp_categories;
  std::map<std::string, std::size_t> which_caption;
  std::map<std::string, Counts> per_adapter;
  std::size_t verdicts = 0;
  std::size_t orphan_verdicts = 0;  // verdicts naming unknown issues

  nlohmann::json to_json() const;
};

/// The effective verdict of an issue is the most recent one in `verdicts`
/// (log order), after each annotator's earlier verdicts are superseded.
/// Pending issues are counted separately and never enter the ratio.
Stats compute_precision(const std::vector<SuspiciousIssue>& issues, const std::vector<Verdict>& verdicts);

/// Latest verdict per annotator for one issue, in log order of those verdicts.
std::vector<Verdict> latest_per_annotator(const std::vector<Verdict>& verdicts_for_issue);

}  // namespace meltcheck::oracle
