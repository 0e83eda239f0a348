// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "pipeline/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <thread>

#include "common/error.hpp"
#include "common/files.hpp"
#include "oracle/oracle.hpp"

namespace meltcheck::pipeline {
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  if (jobs <= 1 || n <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> threads;
  for (unsigned t = 0; t < std::min<std::size_t>(jobs, n); ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
}

std::string join_lines(const std::vector<json>& values) {
  std::string out;
  for (const auto& v : values) {
    out += to_jsonl(v);
    out += '\n';
  }
  return out;
}

std::string image_relpath(const planner::MeltState& s) {
  return "images/" + s.seed_id + "/" + planner::state_suffix(s.removed) + ".png";
}

}  // namespace

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)), layout_{config_.out} {}

const std::vector<corpus::SeedImage>& Pipeline::seeds() {
  if (!seeds_) {
    if (config_.corpus.empty()) throw Error(ErrorCode::invalid_argument, "no corpus configured");
    seeds_ = corpus::load_corpus(config_.corpus);
    for (std::size_t i = 0; i < seeds_->size(); ++i) seed_index_[(*seeds_)[i].seed_id] = i;
  }
  return *seeds_;
}

const corpus::SeedImage& Pipeline::seed(const std::string& seed_id) {
  seeds();
  auto it = seed_index_.find(seed_id);
  if (it == seed_index_.end()) {
    throw Error(ErrorCode::not_found, "plan names seed '" + seed_id + "' which is not in the corpus");
  }
  return (*seeds_)[it->second];
}

const lexicon::Lexicon& Pipeline::lex() {
  if (!lexicon_) lexicon_ = lexicon::Lexicon::load(config_.lexicon_path);
  return *lexicon_;
}

std::vector<planner::MeltPair> Pipeline::read_plan() const {
  if (!fs::is_regular_file(layout_.plan())) {
    throw Error(ErrorCode::not_found, layout_.plan().string() + " is missing; run the plan stage first");
  }
  std::vector<planner::MeltPair> pairs;
  for (const auto& line : read_jsonl(layout_.plan())) {
    if (!line.parse_ok) {
      throw Error(ErrorCode::invalid_argument,
                  layout_.plan().string() + ":" + std::to_string(line.line_number) + ": not JSON");
    }
    try {
      pairs.push_back(planner::pair_from_json(line.value));
    } catch (const Error& e) {
      throw Error(ErrorCode::invalid_argument,
                  layout_.plan().string() + ":" + std::to_string(line.line_number) + ": " + e.what());
    }
  }
  return pairs;
}

json Pipeline::plan() {
  std::vector<json> lines;
  json per_seed = json::object();
  for (const auto& s : seeds()) {
    auto pairs = planner::enumerate_pairs(s, config_.plan);
    per_seed[s.seed_id] = {{"meltable", corpus::meltable_objects(s).size()}, {"pairs", pairs.size()}};
    for (const auto& p : pairs) lines.push_back(planner::to_json(p));
  }
  write_file_atomic(layout_.plan(), join_lines(lines));
  return json{{"stage", "plan"}, {"seeds", seeds().size()}, {"pairs", lines.size()}, {"per_seed", per_seed}};
}

json Pipeline::melt() {
  const auto pairs = read_plan();
  std::vector<planner::MeltState> states = planner::unique_states(pairs);
  auto backend = melter::make_backend(config_.backend);
  melter::Melter melter(*backend, config_.melt, layout_.images());

  struct Outcome {
    std::optional<melter::MeltedImage> image;
    std::string error;
  };
  std::vector<Outcome> outcomes(states.size());
  // Resolve seeds up front so worker threads only read.
  std::vector<const corpus::SeedImage*> seed_of(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) seed_of[i] = &seed(states[i].seed_id);

  parallel_for(states.size(), config_.jobs, [&](std::size_t i) {
    try {
      outcomes[i].image = melter.melt(*seed_of[i], states[i]);
      if (states[i].removed.empty()) {
        auto path = layout_.root / image_relpath(states[i]);
        if (!fs::is_regular_file(path) || read_bytes(path) != outcomes[i].image->png) {
          write_file_atomic(path, outcomes[i].image->png);
        }
      }
    } catch (const Error& e) {
      outcomes[i].error = e.what();
      spdlog::error("melt {}: {}", planner::state_key(states[i]), e.what());
    }
  });

  std::vector<json> lines;
  std::size_t skipped = 0, failed = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    json line;
    if (outcomes[i].image) {
      line = outcomes[i].image->to_json();
      if (outcomes[i].image->skipped) {
        ++skipped;
      } else {
        line["image"] = image_relpath(states[i]);
      }
    } else {
      ++failed;
      line = {{"state_key", planner::state_key(states[i])},
              {"seed_id", states[i].seed_id},
              {"removed", states[i].removed},
              {"failed", true},
              {"error", outcomes[i].error}};
    }
    lines.push_back(std::move(line));
  }
  write_file_atomic(layout_.melted(), join_lines(lines));
  return json{{"stage", "melt"},
              {"states", states.size()},
              {"melted", states.size() - skipped - failed},
              {"skipped", skipped},
              {"failed", failed},
              {"backend", backend->id()},
              {"backend_calls", melter.backend_calls()}};
}

json Pipeline::caption() {
  const auto pairs = read_plan();
  std::map<std::string, json> melted;
  for (const auto& line : read_jsonl(layout_.melted())) {
    if (line.parse_ok && line.value.contains("state_key")) {
      melted[line.value["state_key"].get<std::string>()] = line.value;
    }
  }
  captioner::Captioner::ImageSource images = [&](const planner::MeltState& s) {
    const std::string key = planner::state_key(s);
    auto it = melted.find(key);
    if (it == melted.end()) throw Error(ErrorCode::not_found, "state " + key + " was not melted");
    const json& entry = it->second;
    if (entry.value("skipped", false)) {
      throw Error(ErrorCode::not_found, "state " + key + " was skipped: " + entry.value("skip_reason", ""));
    }
    if (entry.value("failed", false)) {
      throw Error(ErrorCode::backend, "state " + key + " failed to melt: " + entry.value("error", ""));
    }
    return read_bytes(layout_.root / entry.at("image").get<std::string>());
  };

  json per_adapter = json::object();
  for (const auto& cfg : config_.adapters) {
    captioner::CaptionCache cache(layout_.captions(cfg.id));
    auto adapter = captioner::make_adapter(cfg);
    captioner::Captioner captioner(*adapter, cache);
    auto results = captioner::caption_pairs(pairs, captioner, images, config_.jobs);
    std::size_t ok = 0, empty = 0;
    json failures = json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (results[i].ok()) {
        ++ok;
        if (results[i].descendant->text.empty() || results[i].ancestor->text.empty()) ++empty;
      } else {
        failures.push_back({{"pair", planner::to_json(pairs[i])}, {"error", results[i].error}});
      }
    }
    per_adapter[cfg.id] = {{"pairs", pairs.size()},
                           {"captioned", ok},
                           {"failed", failures.size()},
                           {"pairs_with_empty_caption", empty},
                           {"adapter_calls", captioner.adapter_calls()},
                           {"failures", failures}};
  }
  return json{{"stage", "caption"}, {"adapters", per_adapter}};
}

json Pipeline::check() {
  const auto pairs = read_plan();
  const lexicon::Lexicon& lexicon = lex();
  std::vector<json> issue_lines, unchecked;
  json per_adapter = json::object();
  for (const auto& cfg : config_.adapters) {
    captioner::CaptionCache cache(layout_.captions(cfg.id));
    std::size_t checked = 0, issues = 0;
    std::map<std::string, std::size_t> by_relation{{"MR1", 0}, {"MR2", 0}, {"both", 0}};
    for (const auto& pair : pairs) {
      auto a = cache.find(cfg.id, planner::state_key(pair.ancestor));
      auto d = cache.find(cfg.id, planner::state_key(pair.descendant));
      if (!a || !d) {
        unchecked.push_back({{"adapter_id", cfg.id},
                             {"pair", planner::to_json(pair)},
                             {"reason", "missing caption"}});
        continue;
      }
      ++checked;
      auto issue = oracle::evaluate_pair(seed(pair.ancestor.seed_id), pair, *a, *d, lexicon, config_.lexicon);
      if (!issue) continue;
      ++issues;
      ++by_relation[std::string(oracle::to_string(issue->relation))];
      issue_lines.push_back(issue->to_json());
    }
    per_adapter[cfg.id] = {{"pairs", pairs.size()}, {"checked", checked}, {"issues", issues}, {"by_relation", by_relation}};
  }
  write_file_atomic(layout_.issues(), join_lines(issue_lines));
  write_file_atomic(layout_.unchecked(), join_lines(unchecked));
  return json{{"stage", "check"},
              {"issues", issue_lines.size()},
              {"unchecked", unchecked.size()},
              {"lexicon_version", lexicon.version()},
              {"adapters", per_adapter}};
}

json Pipeline::audit_gt() {
  const auto pairs = read_plan();
  const auto& adapter = config_.audit_adapter();
  const lexicon::Lexicon& lexicon = lex();
  captioner::CaptionCache cache(layout_.captions(adapter.id));

  struct SeedAudit {
    oracle::ClassSet missing;
    json flagged_pairs = json::array();
    std::size_t pairs = 0;
  };
  std::map<std::string, SeedAudit> audits;
  for (const auto& pair : pairs) {
    if (!pair.ancestor.removed.empty()) continue;
    const auto& s = seed(pair.ancestor.seed_id);
    if (s.gt_captions.empty()) continue;
    auto a = cache.find(adapter.id, planner::state_key(pair.ancestor));
    auto d = cache.find(adapter.id, planner::state_key(pair.descendant));
    if (!a || !d) continue;
    SeedAudit& audit = audits[s.seed_id];
    ++audit.pairs;
    auto flag = oracle::audit_ground_truth(a->text, d->text, s.gt_captions, lexicon, config_.lexicon.depth);
    if (!flag) continue;
    audit.missing.insert(flag->missing.begin(), flag->missing.end());
    audit.flagged_pairs.push_back({{"descendant", planner::state_key(pair.descendant)},
                                   {"invariant_classes", flag->invariant},
                                   {"missing_classes", flag->missing}});
  }

  std::vector<json> lines;
  json flagged = json::array();
  for (const auto& [sid, audit] : audits) {
    if (audit.missing.empty()) continue;
    flagged.push_back(sid);
    lines.push_back({{"seed_id", sid},
                     {"adapter_id", adapter.id},
                     {"missing_classes", audit.missing},
                     {"gt_captions", seed(sid).gt_captions},
                     {"pairs", audit.flagged_pairs}});
  }
  write_file_atomic(layout_.gt_flags(), join_lines(lines));
  return json{{"stage", "audit-gt"},
              {"adapter_id", adapter.id},
              {"seeds_audited", audits.size()},
              {"seeds_flagged", lines.size()},
              {"flagged", flagged}};
}

json Pipeline::precision(const std::optional<fs::path>& verdicts_path) {
  std::vector<oracle::SuspiciousIssue> issues;
  for (const auto& line : read_jsonl(layout_.issues())) {
    try {
      if (!line.parse_ok) throw Error(ErrorCode::invalid_argument, "not JSON");
      issues.push_back(oracle::issue_from_json(line.value));
    } catch (const Error& e) {
      spdlog::warn("{}:{}: {}", layout_.issues().string(), line.line_number, e.what());
    }
  }
  const fs::path vpath = verdicts_path.value_or(layout_.verdicts());
  std::vector<oracle::Verdict> verdicts;
  for (const auto& line : read_jsonl(vpath)) {
    try {
      if (!line.parse_ok) throw Error(ErrorCode::invalid_argument, "not JSON");
      oracle::Verdict v = oracle::Verdict::from_json(line.value);
      v.validate();
      verdicts.push_back(std::move(v));
    } catch (const Error& e) {
      spdlog::warn("{}:{}: {}", vpath.string(), line.line_number, e.what());
    }
  }
  json out = oracle::compute_precision(issues, verdicts).to_json();
  out["stage"] = "precision";
  return out;
}

json Pipeline::run() {
  json out{{"stage", "run"}};
  out["plan"] = plan();
  out["melt"] = melt();
  out["caption"] = caption();
  out["check"] = check();
  bool any_gt = false;
  for (const auto& s : seeds()) any_gt = any_gt || !s.gt_captions.empty();
  if (any_gt && !config_.adapters.empty() &&
      (config_.reference_adapter || config_.adapters.size() == 1)) {
    out["audit_gt"] = audit_gt();
  }
  return out;
}

}  // namespace meltcheck::pipeline
