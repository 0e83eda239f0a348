// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "corpus/corpus.hpp"
#include "json.hpp"
#include "lexicon/lexicon.hpp"
#include "pipeline/config.hpp"

namespace meltcheck::pipeline {

/// File layout under the output directory.
struct OutputLayout {
  std::filesystem::path root;

  std::filesystem::path plan() const { return root / "plan.jsonl"; }
  std::filesystem::path melted() const { return root / "melted.jsonl"; }
  std::filesystem::path images() const { return root / "images"; }
  std::filesystem::path captions(const std::string& adapter_id) const {
    return root / "captions" / (adapter_id + ".jsonl");
  }
  std::filesystem::path issues() const { return root / "issues.jsonl"; }
  std::filesystem::path unchecked() const { return root / "unchecked.jsonl"; }
  std::filesystem::path verdicts() const { return root / "verdicts.jsonl"; }
  std::filesystem::path gt_flags() const { return root / "gt_flags.jsonl"; }
};

/// The stages. Each reads and writes only files under the output directory
/// (plus the corpus and lexicon), so any stage can be rerun on its own.
/// Every stage returns a JSON summary.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config);

  const RunConfig& config() const { return config_; }
  const OutputLayout& layout() const { return layout_; }

  /// corpus -> plan.jsonl
  nlohmann::json plan();
  /// plan.jsonl -> images/{seed}/{suffix}.png, melted.jsonl
  nlohmann::json melt();
  /// plan.jsonl, melted.jsonl, images -> captions/{adapter}.jsonl
  nlohmann::json caption();
  /// plan.jsonl, captions -> issues.jsonl, unchecked.jsonl
  nlohmann::json check();
  /// plan.jsonl, reference captions -> gt_flags.jsonl
  nlohmann::json audit_gt();
  /// issues.jsonl, verdicts -> statistics (no files written)
  nlohmann::json precision(const std::optional<std::filesystem::path>& verdicts = std::nullopt);
  /// plan, melt, caption, check, then audit-gt when any seed has GT captions.
  nlohmann::json run();

  std::vector<planner::MeltPair> read_plan() const;

 private:
  const std::vector<corpus::SeedImage>& seeds();
  const corpus::SeedImage& seed(const std::string& seed_id);
  const lexicon::Lexicon& lex();

  RunConfig config_;
  OutputLayout layout_;
  std::optional<std::vector<corpus::SeedImage>> seeds_;
  std::map<std::string, std::size_t> seed_index_;
  std::optional<lexicon::Lexicon> lexicon_;
};

}  // namespace meltcheck::pipeline
