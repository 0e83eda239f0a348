// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace meltcheck::lexicon {

inline constexpr unsigned kDefaultDepth = 3;

/// Immutable lexical data: keyword classes, multiword groups, irregular
/// plurals, word senses ("denotations") and hypernym edges.
class Lexicon {
 public:
  static Lexicon load(const std::filesystem::path& path);
  /// Throws Error(invalid_argument) when a section is malformed, a word group
  /// targets a non-keyword, or the keyword list is not the 80 COCO classes.
  static Lexicon from_json(const nlohmann::json& doc);

  const std::string& version() const { return version_; }
  const std::set<std::string>& keywords() const { return keywords_; }
  bool is_keyword(std::string_view word) const;

  /// word tokens -> keyword, e.g. {"hot","dog"} -> "hot dog".
  const std::map<std::vector<std::string>, std::string>& word_groups() const {
    return word_groups_;
  }
  std::size_t longest_group() const { return longest_group_; }

  /// Sense lemmas of `lemma`, always including `lemma` itself, sorted.
  std::vector<std::string> denotations(std::string_view lemma) const;
  /// Parent lemmas, sorted; empty for roots and unknown words.
  std::vector<std::string> hypernyms(std::string_view lemma) const;

  /// Lowercase token -> singular lemma. Irregular forms come from plural_map
  /// (invariant nouns map to themselves); regular -s/-es/-ies stripping
  /// prefers a candidate the lexicon knows.
  std::string singularize(std::string_view token) const;

  /// Spelling variants such as "doughnut" -> "donut". Identity otherwise.
  std::string canonical_form(std::string_view lemma) const;

  /// True when the lemma is something we treat as a noun: a single-word
  /// keyword or an entry of the sense, hypernym or spelling tables.
  bool is_noun(std::string_view lemma) const;

  /// True if the lexicon has any record of `lemma`.
  bool knows(std::string_view lemma) const;

 private:
  std::string version_;
  std::set<std::string> keywords_;
  std::map<std::vector<std::string>, std::string> word_groups_;
  std::size_t longest_group_ = 1;
  std::map<std::string, std::string, std::less<>> plural_map_;
  std::map<std::string, std::string, std::less<>> surface_forms_;
  std::map<std::string, std::vector<std::string>, std::less<>> denotations_;
  std::map<std::string, std::vector<std::string>, std::less<>> hypernyms_;
  std::set<std::string, std::less<>> nouns_;
};

/// Resolution target for synonym mapping. `all()` means every keyword.
class TargetKeywords {
 public:
  static TargetKeywords all() { return TargetKeywords(); }
  static TargetKeywords only(std::set<std::string> keywords) {
    TargetKeywords t;
    t.subset_ = std::move(keywords);
    return t;
  }
  bool contains(const Lexicon& lex, const std::string& word) const {
    return subset_ ? subset_->count(word) > 0 : lex.is_keyword(word);
  }
  bool is_all() const { return !subset_.has_value(); }

 private:
  std::optional<std::set<std::string>> subset_;
};

struct Mapping {
  std::optional<std::string> keyword;
  /// word, then each node visited on the way, ending at the keyword.
  std::vector<std::string> path;
  /// 0 = word is itself a keyword or a direct sense hit; r = hypernym round r.
  unsigned round = 0;
};

/// Synonym/hypernym resolution. A keyword maps to itself. Otherwise the
/// word's senses are checked, then up to `depth` rounds each check the senses
/// of the current frontier and replace the frontier with its hypernyms.
/// Within a round the alphabetically first keyword wins.
Mapping map_to_keyword(std::string_view word, const TargetKeywords& target, const Lexicon& lex,
                       unsigned depth = kDefaultDepth);

struct Token {
  std::string surface;  // lowercased
  std::string lemma;    // singular, canonical spelling
  std::size_t begin = 0;  // byte offsets into the caption
  std::size_t end = 0;
};

std::vector<Token> tokenize(std::string_view caption, const Lexicon& lex);

enum class Rule { keyword, word_group, synonym };
std::string_view to_string(Rule rule);

/// An object-noun candidate after word-group handling.
struct Candidate {
  std::string text;        // keyword for groups, lemma otherwise
  std::size_t first = 0;   // token index range [first, last]
  std::size_t last = 0;
  bool group = false;      // matched a keyword word group (first rule)
  bool head_of_run = false;  // survived the later-noun rule over a run of nouns
};

/// Word-group rules over a token sequence: a multiword keyword is kept whole
/// and its words are consumed; a run of adjacent non-keyword-group nouns
/// keeps only its last noun.
std::vector<Candidate> select_candidates(const std::vector<Token>& tokens, const Lexicon& lex);

/// Convenience form over already-singular lemmas, all assumed adjacent.
std::vector<std::string> apply_wordgroup_rules(const std::vector<std::string>& lemmas,
                                               const Lexicon& lex);

struct TraceEntry {
  std::string keyword;
  std::string surface;
  std::size_t begin = 0;
  std::size_t end = 0;
  Rule rule = Rule::keyword;
  bool later_noun = false;  // kept as the last noun of an adjacent-noun run
  std::vector<std::string> path;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct ObjectClassSet {
  std::set<std::string> classes;
  std::vector<TraceEntry> trace;

  friend bool operator==(const ObjectClassSet&, const ObjectClassSet&) = default;
};

ObjectClassSet extract_object_set(std::string_view caption, const Lexicon& lex,
                                  const TargetKeywords& target = TargetKeywords::all(),
                                  unsigned depth = kDefaultDepth);

/// Keywords a caption names literally (keyword tokens and keyword groups).
/// Used to build the pair-relative resolution target.
std::set<std::string> literal_keywords(std::string_view caption, const Lexicon& lex);

nlohmann::json to_json(const ObjectClassSet& set);
ObjectClassSet object_set_from_json(const nlohmann::json& value);

}  // namespace meltcheck::lexicon
