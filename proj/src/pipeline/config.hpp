// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "captioner/captioner.hpp"
#include "json.hpp"
#include "melter/melter.hpp"
#include "oracle/oracle.hpp"
#include "planner/planner.hpp"

namespace meltcheck::pipeline {

std::filesystem::path default_lexicon_path();

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path out = "out";
  planner::PlanOptions plan;
  melter::BackendConfig backend;
  melter::MeltOptions melt;
  std::vector<captioner::AdapterConfig> adapters;
  std::optional<std::string> reference_adapter;  // GT audit source
  std::filesystem::path lexicon_path = default_lexicon_path();
  oracle::LexiconOptions lexicon;
  unsigned jobs = 1;

  /// Relative paths are resolved against `base_dir` (the config file's
  /// directory). Unknown top-level keys are rejected.
  static RunConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& file);
  nlohmann::json to_json() const;

  /// Checks the cross-field invariants. `need_corpus` is false for stages
  /// that only read the output directory.
  void validate(bool need_corpus = true) const;

  /// The adapter used for the GT audit: reference_adapter if set, else the
  /// only adapter. Throws when neither applies.
  const captioner::AdapterConfig& audit_adapter() const;
};

/// Parses "--adapter" values: a JSON config file path, or "stub:FIXTURE"
/// (id taken from the fixture file stem), or "stub:ID=FIXTURE".
captioner::AdapterConfig adapter_from_flag(const std::string& flag);

/// Parses a depth flag: a positive integer or "unlimited".
planner::MaxDepth parse_max_depth(const std::string& text);

}  // namespace meltcheck::pipeline
