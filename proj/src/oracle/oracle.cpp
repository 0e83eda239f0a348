// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "oracle/oracle.hpp"

#include <algorithm>
#include <iterator>

#include "common/encoding.hpp"
#include "common/error.hpp"

namespace meltcheck::oracle {
using nlohmann::json;

namespace {

ClassSet difference(const ClassSet& a, const ClassSet& b) {
  ClassSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

bool contains(const std::vector<int>& sorted, int id) {
  return std::binary_search(sorted.begin(), sorted.end(), id);
}

bool one_of(const std::vector<std::string>& allowed, const std::string& value) {
  return std::find(allowed.begin(), allowed.end(), value) != allowed.end();
}

lexicon::TargetKeywords target_for(const std::string& a, const std::string& d,
                                   const lexicon::Lexicon& lex, const LexiconOptions& options) {
  if (!options.pair_relative) return lexicon::TargetKeywords::all();
  ClassSet keys = lexicon::literal_keywords(a, lex);
  keys.merge(lexicon::literal_keywords(d, lex));
  return lexicon::TargetKeywords::only(std::move(keys));
}

json caption_json(const captioner::CaptionRecord& r) {
  return json{{"state_key", r.state_key}, {"text", r.text}, {"empty", r.text.empty()}};
}

captioner::CaptionRecord caption_from(const json& v, const std::string& adapter_id) {
  captioner::CaptionRecord r;
  r.adapter_id = adapter_id;
  r.state_key = v.at("state_key").get<std::string>();
  r.text = v.at("text").get<std::string>();
  return r;
}

// Fills relation and violating sets from the stored class sets. Returns
// false when neither relation is violated.
bool recheck(SuspiciousIssue& issue) {
  CheckResult mr1 = check_mr1(issue.ancestor_set.classes, issue.descendant_set.classes, issue.deleted);
  CheckResult mr2;
  if (!issue.alldel.empty()) {
    mr2 = check_mr2(issue.ancestor_set.classes, issue.descendant_set.classes, issue.alldel);
  }
  if (!mr1.violated && !mr2.violated) return false;
  issue.relation = mr1.violated && mr2.violated ? Relation::both : mr1.violated ? Relation::mr1 : Relation::mr2;
  issue.mr1_violating = mr1.violating;
  issue.mr2_violating = mr2.violating;
  issue.violating = mr1.violating;
  issue.violating.insert(mr2.violating.begin(), mr2.violating.end());
  return true;
}

}  // namespace

CheckResult check_mr1(const ClassSet& ancestor, const ClassSet& descendant, const ClassSet& deleted) {
  CheckResult r;
  r.violating = difference(descendant, ancestor);
  ClassSet lost_unexplained = difference(difference(ancestor, descendant), deleted);
  r.violating.insert(lost_unexplained.begin(), lost_unexplained.end());
  r.violated = !r.violating.empty();
  return r;
}

CheckResult check_mr2(const ClassSet& ancestor, const ClassSet& descendant, const ClassSet& alldel) {
  if (alldel.empty()) {
    throw Error(ErrorCode::internal, "check_mr2 called with no fully melted class");
  }
  CheckResult r;
  r.violating = difference(descendant, difference(ancestor, alldel));
  r.violated = !r.violating.empty();
  return r;
}

ClassSet deleted_classes(const corpus::SeedImage& seed, const planner::MeltPair& pair) {
  ClassSet out;
  for (const auto& a : seed.annotations) {
    if (contains(pair.descendant.removed, a.object_id) && !contains(pair.ancestor.removed, a.object_id)) {
      out.insert(a.class_name);
    }
  }
  return out;
}

ClassSet alldel_classes(const corpus::SeedImage& seed, const planner::MeltPair& pair) {
  ClassSet touched = deleted_classes(seed, pair);
  for (const auto& a : seed.annotations) {
    if (!contains(pair.descendant.removed, a.object_id)) touched.erase(a.class_name);
  }
  return touched;
}

std::string_view to_string(Relation relation) {
  switch (relation) {
    case Relation::mr1: return "MR1";
    case Relation::mr2: return "MR2";
    case Relation::both: return "both";
  }
  return "MR1";
}

Relation relation_from_string(std::string_view text) {
  if (text == "MR1") return Relation::mr1;
  if (text == "MR2") return Relation::mr2;
  if (text == "both") return Relation::both;
  throw Error(ErrorCode::invalid_argument, "unknown relation '" + std::string(text) + "'");
}

std::string issue_id(const std::string& adapter_id, const planner::MeltPair& pair,
                     const std::string& lexicon_version) {
  std::string material = adapter_id + '\n' + planner::state_key(pair.ancestor) + '\n' +
                         planner::state_key(pair.descendant) + '\n' + lexicon_version;
  return sha256_hex(material).substr(0, 16);
}

json SuspiciousIssue::to_json() const {
  return json{{"issue_id", issue_id},
              {"adapter_id", adapter_id},
              {"lexicon_version", lexicon_version},
              {"pair", planner::to_json(pair)},
              {"ancestor_caption", caption_json(ancestor_caption)},
              {"descendant_caption", caption_json(descendant_caption)},
              {"ancestor_set", lexicon::to_json(ancestor_set)},
              {"descendant_set", lexicon::to_json(descendant_set)},
              {"deleted_classes", deleted},
              {"alldel_classes", alldel},
              {"mr_violated", to_string(relation)},
              {"violating_classes", violating},
              {"mr1_violating", mr1_violating},
              {"mr2_violating", mr2_violating},
              {"status", "pending"}};
}

SuspiciousIssue issue_from_json(const json& value) {
  SuspiciousIssue issue;
  std::string id = value.is_object() ? value.value("issue_id", std::string("?")) : "?";
  Relation stored = Relation::mr1;
  ClassSet stored_violating;
  try {
    issue.issue_id = value.at("issue_id").get<std::string>();
    issue.adapter_id = value.at("adapter_id").get<std::string>();
    issue.lexicon_version = value.at("lexicon_version").get<std::string>();
    issue.pair = planner::pair_from_json(value.at("pair"));
    issue.ancestor_caption = caption_from(value.at("ancestor_caption"), issue.adapter_id);
    issue.descendant_caption = caption_from(value.at("descendant_caption"), issue.adapter_id);
    issue.ancestor_set = lexicon::object_set_from_json(value.at("ancestor_set"));
    issue.descendant_set = lexicon::object_set_from_json(value.at("descendant_set"));
    issue.deleted = value.at("deleted_classes").get<ClassSet>();
    issue.alldel = value.at("alldel_classes").get<ClassSet>();
    stored = relation_from_string(value.at("mr_violated").get<std::string>());
    stored_violating = value.at("violating_classes").get<ClassSet>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, "issue " + id + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.code(), "issue " + id + ": " + e.what());
  }
  if (!recheck(issue) || issue.relation != stored || issue.violating != stored_violating) {
    throw Error(ErrorCode::invalid_argument,
                "issue " + id + ": stored verdict does not match a recheck of its class sets");
  }
  return issue;
}

std::optional<SuspiciousIssue> evaluate_pair(const corpus::SeedImage& seed,
                                             const planner::MeltPair& pair,
                                             const captioner::CaptionRecord& ancestor,
                                             const captioner::CaptionRecord& descendant,
                                             const lexicon::Lexicon& lex,
                                             const LexiconOptions& options) {
  SuspiciousIssue issue;
  auto target = target_for(ancestor.text, descendant.text, lex, options);
  issue.ancestor_set = lexicon::extract_object_set(ancestor.text, lex, target, options.depth);
  issue.descendant_set = lexicon::extract_object_set(descendant.text, lex, target, options.depth);
  issue.deleted = deleted_classes(seed, pair);
  issue.alldel = alldel_classes(seed, pair);
  if (!recheck(issue)) return std::nullopt;
  issue.adapter_id = ancestor.adapter_id;
  issue.lexicon_version = lex.version();
  issue.pair = pair;
  issue.ancestor_caption = ancestor;
  issue.descendant_caption = descendant;
  issue.issue_id = issue_id(issue.adapter_id, pair, lex.version());
  return issue;
}

std::optional<GtFlag> audit_ground_truth(const std::string& ancestor_caption,
                                         const std::string& descendant_caption,
                                         const std::vector<std::string>& gt_captions,
                                         const lexicon::Lexicon& lex, unsigned depth) {
  const auto all = lexicon::TargetKeywords::all();
  ClassSet a = lexicon::extract_object_set(ancestor_caption, lex, all, depth).classes;
  ClassSet d = lexicon::extract_object_set(descendant_caption, lex, all, depth).classes;
  GtFlag flag;
  std::set_intersection(a.begin(), a.end(), d.begin(), d.end(),
                        std::inserter(flag.invariant, flag.invariant.end()));
  for (const auto& gt : gt_captions) {
    flag.gt_classes.merge(lexicon::extract_object_set(gt, lex, all, depth).classes);
  }
  flag.missing = difference(flag.invariant, flag.gt_classes);
  if (flag.missing.empty()) return std::nullopt;
  return flag;
}

void Verdict::validate() const {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::invalid_argument, "verdict for " + issue_id + ": " + what);
  };
  if (issue_id.empty()) fail("issue_id is required");
  if (annotator.empty()) fail("annotator is required");
  if (erroneous) {
    if (!error_category) fail("erroneous verdicts need error_category");
    if (!one_of(kErrorCategories, *error_category)) fail("unknown error_category '" + *error_category + "'");
    if (!which_caption) fail("erroneous verdicts need which_caption");
    if (!one_of(kWhichCaption, *which_caption)) fail("unknown which_caption '" + *which_caption + "'");
    if (fp_category) fail("erroneous verdicts take no fp_category");
  } else {
    if (!fp_category) fail("false-positive verdicts need fp_category");
    if (!one_of(kFalsePositiveCategories, *fp_category)) fail("unknown fp_category '" + *fp_category + "'");
    if (error_category || which_caption) fail("false-positive verdicts take no error_category or which_caption");
  }
}

json Verdict::to_json() const {
  json out{{"issue_id", issue_id}, {"erroneous", erroneous}, {"annotator", annotator}, {"labeled_at", labeled_at}};
  if (error_category) out["error_category"] = *error_category;
  if (which_caption) out["which_caption"] = *which_caption;
  if (fp_category) out["fp_category"] = *fp_category;
  return out;
}

Verdict Verdict::from_json(const json& value) {
  if (!value.is_object()) throw Error(ErrorCode::invalid_argument, "verdict must be a JSON object");
  Verdict v;
  try {
    v.issue_id = value.value("issue_id", std::string());
    v.erroneous = value.at("erroneous").get<bool>();
    auto opt = [&](const char* key) -> std::optional<std::string> {
      auto it = value.find(key);
      if (it == value.end() || it->is_null()) return std::nullopt;
      return it->get<std::string>();
    };
    v.error_category = opt("error_category");
    v.which_caption = opt("which_caption");
    v.fp_category = opt("fp_category");
    v.annotator = value.value("annotator", std::string());
    v.labeled_at = value.value("labeled_at", std::string());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, std::string("verdict: ") + e.what());
  }
  return v;
}

std::string format_precision(std::uint64_t erroneous, std::uint64_t labeled) {
  if (labeled == 0) return "undefined";
  if (erroneous > labeled) throw Error(ErrorCode::invalid_argument, "more erroneous issues than labeled");
  // Basis points, rounded half-up, in integer arithmetic.
  unsigned __int128 bp = (static_cast<unsigned __int128>(erroneous) * 20000 + labeled) / (2 * static_cast<unsigned __int128>(labeled));
  auto whole = static_cast<std::uint64_t>(bp / 100), frac = static_cast<std::uint64_t>(bp % 100);
  return std::to_string(whole) + "." + (frac < 10 ? "0" : "") + std::to_string(frac) + "%";
}

std::vector<Verdict> latest_per_annotator(const std::vector<Verdict>& verdicts_for_issue) {
  std::map<std::string, std::size_t> last;
  for (std::size_t i = 0; i < verdicts_for_issue.size(); ++i) last[verdicts_for_issue[i].annotator] = i;
  std::vector<std::size_t> keep;
  for (const auto& [annotator, idx] : last) keep.push_back(idx);
  std::sort(keep.begin(), keep.end());
  std::vector<Verdict> out;
  for (auto i : keep) out.push_back(verdicts_for_issue[i]);
  return out;
}

namespace {

void finish(Counts& c) {
  c.pending = c.issues - c.labeled;
  c.precision_text = format_precision(c.erroneous, c.labeled);
  if (c.labeled > 0) c.precision = static_cast<double>(c.erroneous) / static_cast<double>(c.labeled);
}

json counts_json(const Counts& c) {
  return json{{"issues", c.issues},
              {"labeled", c.labeled},
              {"pending", c.pending},
              {"erroneous", c.erroneous},
              {"false_positive", c.false_positive},
              {"disputed", c.disputed},
              {"precision", c.precision ? json(*c.precision) : json(nullptr)},
              {"precision_text", c.precision_text}};
}

}  // namespace

Stats compute_precision(const std::vector<SuspiciousIssue>& issues, const std::vector<Verdict>& verdicts) {
  Stats s;
  for (const auto& c : kErrorCategories) s.error_categories[c] = 0;
  for (const auto& c : kFalsePositiveCategories) s.fp_categories[c] = 0;
  for (const auto& c : kWhichCaption) s.which_caption[c] = 0;
  s.verdicts = verdicts.size();

  std::map<std::string, std::vector<Verdict>> by_issue;
  std::map<std::string, const SuspiciousIssue*> known;
  for (const auto& issue : issues) known.emplace(issue.issue_id, &issue);
  for (const auto& v : verdicts) {
    if (known.count(v.issue_id)) {
      by_issue[v.issue_id].push_back(v);
    } else {
      ++s.orphan_verdicts;
    }
  }

  for (const auto& [id, issue] : known) {
    Counts& adapter = s.per_adapter[issue->adapter_id];
    ++s.total.issues;
    ++adapter.issues;
    auto it = by_issue.find(id);
    if (it == by_issue.end()) continue;
    std::vector<Verdict> current = latest_per_annotator(it->second);
    const Verdict& effective = current.back();
    bool disputed = std::any_of(current.begin(), current.end(),
                                [&](const Verdict& v) { return v.erroneous != effective.erroneous; });
    for (Counts* c : {&s.total, &adapter}) {
      ++c->labeled;
      if (effective.erroneous) {
        ++c->erroneous;
      } else {
        ++c->false_positive;
      }
      if (disputed) ++c->disputed;
    }
    if (effective.erroneous) {
      ++s.error_categories[effective.error_category.value_or("")];
      ++s.which_caption[effective.which_caption.value_or("")];
    } else {
      ++s.fp_categories[effective.fp_category.value_or("")];
    }
  }
  finish(s.total);
  for (auto& [name, c] : s.per_adapter) finish(c);
  return s;
}

json Stats::to_json() const {
  json out = counts_json(total);
  out["error_categories"] = error_categories;
  out["fp_categories"] = fp_categories;
  out["which_caption"] = which_caption;
  json adapters = json::object();
  for (const auto& [name, c] : per_adapter) adapters[name] = counts_json(c);
  out["per_adapter"] = adapters;
  out["verdicts"] = verdicts;
  out["orphan_verdicts"] = orphan_verdicts;
  return out;
}

}  // namespace meltcheck::oracle
