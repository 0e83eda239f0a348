// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <set>
#include <string>
#include <vector>

#include "corpus/corpus.hpp"
#include "oracle/oracle.hpp"
#include "planner/planner.hpp"
#include "support.hpp"

namespace meltcheck::test {

/// Caption naming exactly the classes still present in `state`.
inline std::string perfect_caption(const corpus::SeedImage& seed, const planner::MeltState& state) {
  std::set<std::string> classes;
  for (const auto& a : seed.annotations) {
    if (!std::binary_search(state.removed.begin(), state.removed.end(), a.object_id)) classes.insert(a.class_name);
  }
  std::string text = "a picture of";
  bool first = true;
  for (const auto& c : classes) {
    text += first ? " a " : " and a ";
    text += c;
    first = false;
  }
  return text;
}

/// Seeds with up to four meltable objects, including repeated classes and
/// multiword keywords.
inline std::vector<corpus::SeedImage> sweep_seeds() {
  auto seeds = corpus::load_corpus(fixtures() / "corpus");
  seeds.push_back(make_seed("k1", 64, 48,
                            {{1, "dining table", 0, 20, 60, 46}, {2, "hot dog", 2, 2, 10, 8}, {3, "cup", 14, 2, 18, 8},
                             {4, "cup", 22, 2, 26, 8}, {5, "person", 30, 2, 36, 16}}));
  seeds.push_back(make_seed("k2", 64, 48,
                            {{1, "bus", 0, 0, 40, 30}, {2, "person", 42, 2, 46, 12}, {3, "person", 48, 2, 52, 12},
                             {4, "traffic light", 56, 2, 60, 12}, {5, "fire hydrant", 42, 30, 48, 40}}));
  seeds.push_back(make_seed("k3", 64, 48,
                            {{1, "bed", 0, 0, 40, 30}, {2, "teddy bear", 42, 2, 50, 12}, {3, "cell phone", 52, 2, 56, 6},
                             {4, "tennis racket", 42, 30, 52, 40}, {5, "sheep", 54, 30, 60, 40}}));
  return seeds;
}

struct SweepResult {
  std::size_t pairs = 0;
  std::size_t max_meltable = 0;
  std::vector<std::string> issues;  // "adapter pair: relation"
};

/// Every pair at unlimited depth, perfect captions on both sides.
inline SweepResult soundness_sweep(const std::vector<corpus::SeedImage>& seeds, const lexicon::Lexicon& lex) {
  SweepResult out;
  for (const auto& seed : seeds) {
    out.max_meltable = std::max(out.max_meltable, corpus::meltable_objects(seed).size());
    for (const auto& pair : planner::enumerate_pairs(seed, {std::nullopt, std::nullopt})) {
      ++out.pairs;
      captioner::CaptionRecord a{"perfect", planner::state_key(pair.ancestor), perfect_caption(seed, pair.ancestor), 0, ""};
      captioner::CaptionRecord d{"perfect", planner::state_key(pair.descendant), perfect_caption(seed, pair.descendant), 0, ""};
      if (auto issue = oracle::evaluate_pair(seed, pair, a, d, lex)) {
        out.issues.push_back(a.state_key + " -> " + d.state_key + ": " + std::string(oracle::to_string(issue->relation)));
      }
    }
  }
  return out;
}

}  // namespace meltcheck::test
