// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"

namespace meltcheck::pipeline {

struct CocoImportReport {
  std::size_t images_seen = 0;
  std::size_t seeds = 0;
  std::size_t objects = 0;
  std::size_t skipped_crowd = 0;      // iscrowd=1 or RLE segmentation
  std::size_t skipped_empty = 0;      // polygon covers no pixel centre
  std::size_t images_without_objects = 0;
  std::size_t images_missing = 0;     // file not found under the image directory
  std::map<std::string, std::size_t> rejected_categories;  // outside the 80 keyword classes

  nlohmann::json to_json() const;
};

/// Converts COCO instance annotations (and optionally caption annotations)
/// into a corpus manifest written to `manifest`. Image paths in the manifest
/// are relative to the manifest's directory. Object ids are renumbered 1..n
/// per image in annotation-id order; the COCO id is kept as "source_id".
CocoImportReport import_coco(const std::filesystem::path& instances,
                             const std::optional<std::filesystem::path>& captions,
                             const std::filesystem::path& image_dir,
                             const std::filesystem::path& manifest);

}  // namespace meltcheck::pipeline
