// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "lexicon/lexicon.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>

#include "common/coco_classes.hpp"
#include "common/error.hpp"
#include "common/files.hpp"

namespace meltcheck::lexicon {
using nlohmann::json;

namespace {

std::vector<std::string> split_words(const std::string& phrase) {
  std::vector<std::string> words;
  std::istringstream in(phrase);
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorCode::invalid_argument, "lexicon: " + what);
}

std::map<std::string, std::string, std::less<>> string_map(const json& doc, const char* key) {
  std::map<std::string, std::string, std::less<>> out;
  if (!doc.contains(key)) return out;
  if (!doc[key].is_object()) bad(std::string(key) + " must be an object");
  for (const auto& [k, v] : doc[key].items()) {
    if (!v.is_string()) bad(std::string(key) + "." + k + " must be a string");
    out.emplace(k, v.get<std::string>());
  }
  return out;
}

std::map<std::string, std::vector<std::string>, std::less<>> list_map(const json& doc,
                                                                     const char* key) {
  std::map<std::string, std::vector<std::string>, std::less<>> out;
  if (!doc.contains(key)) return out;
  if (!doc[key].is_object()) bad(std::string(key) + " must be an object");
  for (const auto& [k, v] : doc[key].items()) {
    if (!v.is_array()) bad(std::string(key) + "." + k + " must be an array");
    std::vector<std::string> items;
    for (const auto& e : v) {
      if (!e.is_string()) bad(std::string(key) + "." + k + " entries must be strings");
      items.push_back(e.get<std::string>());
    }
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    out.emplace(k, std::move(items));
  }
  return out;
}

bool is_word_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u);
}

// Only spaces and hyphens between two tokens keep them in one noun run.
bool adjacent(std::string_view caption, const Token& a, const Token& b) {
  for (std::size_t i = a.end; i < b.begin; ++i) {
    if (caption[i] != ' ' && caption[i] != '-' && caption[i] != '\t') return false;
  }
  return true;
}

std::vector<Candidate> select(std::string_view caption, const std::vector<Token>& tokens,
                              const Lexicon& lex, bool assume_adjacent) {
  std::vector<Candidate> out;
  std::vector<Candidate> run;  // current run of adjacent single nouns
  auto flush = [&] {
    if (run.empty()) return;
    Candidate kept = run.back();
    kept.head_of_run = run.size() > 1;
    out.push_back(std::move(kept));
    run.clear();
  };

  std::size_t i = 0;
  while (i < tokens.size()) {
    // Longest keyword word group starting here.
    bool matched = false;
    const std::size_t max_len = std::min(lex.longest_group(), tokens.size() - i);
    for (std::size_t len = max_len; len >= 2 && !matched; --len) {
      bool joined = true;
      for (std::size_t k = i; k + 1 < i + len && joined; ++k) {
        joined = assume_adjacent || adjacent(caption, tokens[k], tokens[k + 1]);
      }
      if (!joined) continue;
      for (const auto& [words, keyword] : lex.word_groups()) {
        if (words.size() != len) continue;
        bool hit = true;
        for (std::size_t k = 0; k < len && hit; ++k) {
          const Token& t = tokens[i + k];
          hit = t.surface == words[k] || t.lemma == words[k];
        }
        if (hit) {
          flush();
          out.push_back(Candidate{keyword, i, i + len - 1, true, false});
          i += len;
          matched = true;
          break;
        }
      }
    }
    if (matched) continue;

    const Token& t = tokens[i];
    if (lex.is_noun(t.lemma)) {
      if (!run.empty() && !(assume_adjacent || adjacent(caption, tokens[run.back().last], t))) {
        flush();
      }
      run.push_back(Candidate{t.lemma, i, i, false, false});
    } else {
      flush();
    }
    ++i;
  }
  flush();
  return out;
}

// A node on a hypernym cycle, if any (iterative three-colour DFS).
std::optional<std::string> find_cycle(const std::map<std::string, std::vector<std::string>, std::less<>>& edges) {
  std::map<std::string, int> colour;  // 1 = on the stack, 2 = finished
  for (const auto& [start, _] : edges) {
    if (colour[start]) continue;
    std::vector<std::pair<std::string, std::size_t>> stack{{start, 0}};
    colour[start] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      auto it = edges.find(node);
      if (it == edges.end() || next == it->second.size()) {
        colour[node] = 2;
        stack.pop_back();
        continue;
      }
      const std::string child = it->second[next++];
      if (colour[child] == 1) return child;
      if (colour[child] == 0) {
        colour[child] = 1;
        stack.emplace_back(child, 0);
      }
    }
  }
  return std::nullopt;
}

}  // namespace

Lexicon Lexicon::load(const std::filesystem::path& path) { return from_json(read_json(path)); }

Lexicon Lexicon::from_json(const json& doc) {
  if (!doc.is_object()) bad("document must be an object");
  Lexicon lex;
  if (!doc.contains("version") || !doc["version"].is_string()) bad("version missing");
  lex.version_ = doc["version"].get<std::string>();

  if (!doc.contains("keywords") || !doc["keywords"].is_array()) bad("keywords missing");
  for (const auto& k : doc["keywords"]) {
    if (!k.is_string()) bad("keywords must be strings");
    lex.keywords_.insert(k.get<std::string>());
  }
  if (lex.keywords_.size() != kCocoClasses.size()) bad("keywords must list the 80 COCO classes");
  for (auto c : kCocoClasses) {
    if (!lex.keywords_.count(std::string(c))) bad("keyword '" + std::string(c) + "' missing");
  }

  // Every multiword keyword is its own group.
  for (const auto& k : lex.keywords_) {
    auto words = split_words(k);
    if (words.size() > 1) lex.word_groups_.emplace(words, k);
  }
  for (const auto& [phrase, target] : string_map(doc, "word_groups")) {
    auto words = split_words(phrase);
    if (words.size() < 2) bad("word group '" + phrase + "' must have at least two words");
    if (!lex.keywords_.count(target)) {
      bad("word group '" + phrase + "' targets non-keyword '" + target + "'");
    }
    lex.word_groups_[words] = target;
  }
  for (const auto& [words, _] : lex.word_groups_) {
    lex.longest_group_ = std::max(lex.longest_group_, words.size());
  }

  lex.plural_map_ = string_map(doc, "plural_map");
  lex.surface_forms_ = string_map(doc, "noun_surface_forms");
  lex.denotations_ = list_map(doc, "denotations");
  lex.hypernyms_ = list_map(doc, "hypernyms");
  if (auto node = find_cycle(lex.hypernyms_)) bad("hypernym cycle through '" + *node + "'");

  for (const auto& k : lex.keywords_) {
    if (k.find(' ') == std::string::npos) lex.nouns_.insert(k);
  }
  for (const auto& [k, _] : lex.denotations_) lex.nouns_.insert(k);
  for (const auto& [k, _] : lex.hypernyms_) lex.nouns_.insert(k);
  for (const auto& [k, v] : lex.surface_forms_) {
    lex.nouns_.insert(k);
    lex.nouns_.insert(v);
  }
  return lex;
}

bool Lexicon::is_keyword(std::string_view word) const {
  return keywords_.find(std::string(word)) != keywords_.end();
}

std::vector<std::string> Lexicon::denotations(std::string_view lemma) const {
  std::vector<std::string> out{std::string(lemma)};
  if (auto it = denotations_.find(lemma); it != denotations_.end()) {
    out.insert(out.end(), it->second.begin(), it->second.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> Lexicon::hypernyms(std::string_view lemma) const {
  if (auto it = hypernyms_.find(lemma); it != hypernyms_.end()) return it->second;
  return {};
}

bool Lexicon::knows(std::string_view lemma) const {
  return nouns_.count(lemma) > 0 || plural_map_.count(lemma) > 0;
}

bool Lexicon::is_noun(std::string_view lemma) const { return nouns_.count(lemma) > 0; }

std::string Lexicon::canonical_form(std::string_view lemma) const {
  if (auto it = surface_forms_.find(lemma); it != surface_forms_.end()) return it->second;
  return std::string(lemma);
}

std::string Lexicon::singularize(std::string_view token) const {
  if (auto it = plural_map_.find(token); it != plural_map_.end()) return it->second;
  if (nouns_.count(token)) return std::string(token);

  const std::string t(token);
  const std::size_t n = t.size();
  std::vector<std::string> candidates;
  if (n > 3 && ends_with(t, "ies")) candidates.push_back(t.substr(0, n - 3) + "y");
  if (n > 3 && ends_with(t, "ves")) {
    candidates.push_back(t.substr(0, n - 3) + "f");
    candidates.push_back(t.substr(0, n - 3) + "fe");
  }
  if (n > 3 && ends_with(t, "es")) candidates.push_back(t.substr(0, n - 2));
  if (n > 2 && ends_with(t, "s") && !ends_with(t, "ss")) candidates.push_back(t.substr(0, n - 1));
  for (const auto& c : candidates) {
    if (nouns_.count(c)) return c;
  }

  // Nothing known: plain English rules.
  if (n > 4 && ends_with(t, "ies")) return t.substr(0, n - 3) + "y";
  for (std::string_view sibilant : {"sses", "xes", "zes", "ches", "shes"}) {
    if (n > sibilant.size() && ends_with(t, sibilant)) return t.substr(0, n - 2);
  }
  if (ends_with(t, "ss") || ends_with(t, "us") || ends_with(t, "is")) return t;
  if (n > 2 && ends_with(t, "s")) return t.substr(0, n - 1);
  return t;
}

Mapping map_to_keyword(std::string_view word, const TargetKeywords& target, const Lexicon& lex,
                       unsigned depth) {
  const std::string w(word);
  if (lex.is_keyword(w)) return {w, {w}, 0};

  // Level zero: the word's own senses.
  std::vector<std::string> senses = lex.denotations(w);
  for (const auto& s : senses) {
    if (target.contains(lex, s)) return {s, {w, s}, 0};
  }

  // frontier node -> path from the word to that node
  std::map<std::string, std::vector<std::string>> frontier;
  std::set<std::string> visited;
  for (const auto& s : senses) {
    frontier.emplace(s, s == w ? std::vector<std::string>{w} : std::vector<std::string>{w, s});
    visited.insert(s);
  }

  for (unsigned round = 1; round <= depth && !frontier.empty(); ++round) {
    std::optional<std::string> best;
    std::vector<std::string> best_path;
    for (const auto& [node, path] : frontier) {
      for (const auto& e : lex.denotations(node)) {
        if (target.contains(lex, e) && (!best || e < *best)) {
          best = e;
          best_path = path;
          if (e != node) best_path.push_back(e);
        }
      }
    }
    if (best) return {best, best_path, round};

    std::map<std::string, std::vector<std::string>> next;
    for (const auto& [node, path] : frontier) {
      for (const auto& h : lex.hypernyms(node)) {
        if (visited.count(h) || next.count(h)) continue;
        auto extended = path;
        extended.push_back(h);
        next.emplace(h, std::move(extended));
      }
    }
    for (const auto& [node, _] : next) visited.insert(node);
    frontier = std::move(next);
  }
  return {std::nullopt, {}, 0};
}

std::vector<Token> tokenize(std::string_view caption, const Lexicon& lex) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < caption.size()) {
    if (!is_word_char(caption[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < caption.size() && is_word_char(caption[i])) ++i;
    Token t;
    t.begin = start;
    t.end = i;
    t.surface.reserve(i - start);
    for (std::size_t k = start; k < i; ++k) {
      t.surface.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(caption[k]))));
    }
    t.lemma = lex.canonical_form(lex.singularize(t.surface));
    tokens.push_back(std::move(t));
  }
  return tokens;
}

std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::keyword: return "keyword";
    case Rule::word_group: return "word_group";
    case Rule::synonym: return "synonym";
  }
  return "keyword";
}

std::vector<Candidate> select_candidates(const std::vector<Token>& tokens, const Lexicon& lex) {
  // Offsets are unavailable here, so every pair of neighbours counts as adjacent.
  return select({}, tokens, lex, true);
}

std::vector<std::string> apply_wordgroup_rules(const std::vector<std::string>& lemmas,
                                               const Lexicon& lex) {
  std::vector<Token> tokens;
  for (const auto& l : lemmas) tokens.push_back(Token{l, lex.canonical_form(l), 0, 0});
  std::vector<std::string> kept;
  for (const auto& c : select({}, tokens, lex, true)) kept.push_back(c.text);
  return kept;
}

ObjectClassSet extract_object_set(std::string_view caption, const Lexicon& lex,
                                  const TargetKeywords& target, unsigned depth) {
  ObjectClassSet result;
  const auto tokens = tokenize(caption, lex);
  for (const Candidate& c : select(caption, tokens, lex, false)) {
    TraceEntry entry;
    entry.begin = tokens[c.first].begin;
    entry.end = tokens[c.last].end;
    entry.surface = std::string(caption.substr(entry.begin, entry.end - entry.begin));
    entry.later_noun = c.head_of_run;
    if (c.group) {
      entry.keyword = c.text;
      entry.rule = Rule::word_group;
      entry.path = {c.text};
    } else {
      Mapping m = map_to_keyword(c.text, target, lex, depth);
      if (!m.keyword) continue;
      entry.keyword = *m.keyword;
      entry.rule = m.path.size() == 1 ? Rule::keyword : Rule::synonym;
      entry.path = std::move(m.path);
    }
    result.classes.insert(entry.keyword);
    result.trace.push_back(std::move(entry));
  }
  return result;
}

std::set<std::string> literal_keywords(std::string_view caption, const Lexicon& lex) {
  std::set<std::string> out;
  const auto tokens = tokenize(caption, lex);
  for (const Candidate& c : select(caption, tokens, lex, false)) {
    if (c.group || lex.is_keyword(c.text)) out.insert(c.text);
  }
  return out;
}

json to_json(const ObjectClassSet& set) {
  json trace = json::array();
  for (const auto& t : set.trace) {
    trace.push_back({{"class", t.keyword},
                     {"surface", t.surface},
                     {"begin", t.begin},
                     {"end", t.end},
                     {"rule", to_string(t.rule)},
                     {"later_noun", t.later_noun},
                     {"path", t.path}});
  }
  return json{{"classes", set.classes}, {"trace", trace}};
}

ObjectClassSet object_set_from_json(const json& value) {
  ObjectClassSet set;
  try {
    for (const auto& c : value.at("classes")) set.classes.insert(c.get<std::string>());
    if (value.contains("trace")) {
      for (const auto& t : value["trace"]) {
        TraceEntry e;
        e.keyword = t.at("class").get<std::string>();
        e.surface = t.at("surface").get<std::string>();
        e.begin = t.at("begin").get<std::size_t>();
        e.end = t.at("end").get<std::size_t>();
        std::string rule = t.at("rule").get<std::string>();
        e.rule = rule == "word_group" ? Rule::word_group
                 : rule == "synonym"  ? Rule::synonym
                                      : Rule::keyword;
        e.later_noun = t.value("later_noun", false);
        e.path = t.at("path").get<std::vector<std::string>>();
        set.trace.push_back(std::move(e));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, std::string("object set: ") + e.what());
  }
  return set;
}

}  // namespace meltcheck::lexicon
