// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "common/png_codec.hpp"
#include "json.hpp"

namespace meltcheck::corpus {

struct Point {
  double x = 0;
  double y = 0;
};

using Ring = std::vector<Point>;

/// Object footprint. Either one or more polygon rings (each filled with the
/// even-odd rule, rings OR-ed together) or a bitmap the size of the image.
struct Region {
  std::vector<Ring> rings;
  std::optional<GrayImage> bitmap;
};

struct BBox {
  double x = 0, y = 0, w = 0, h = 0;
};

struct ObjectAnnotation {
  int object_id = 0;
  std::string class_name;
  Region region;
  BBox bbox;
  std::int64_t area_px = 0;  // pixel count of the rasterized region
};

struct SeedImage {
  std::string seed_id;
  std::filesystem::path image_path;
  std::vector<std::uint8_t> png;  // original bytes, served unmodified for the root state
  Image image;
  std::vector<ObjectAnnotation> annotations;
  std::vector<std::string> gt_captions;

  const ObjectAnnotation* find(int object_id) const;
};

/// Accepts either the manifest file itself or a directory holding corpus.json.
/// Seeds come back sorted by seed_id. Validation failures throw
/// Error(ErrorCode::corpus) naming the seed and the offending field path.
std::vector<SeedImage> load_corpus(const std::filesystem::path& path);

/// Pure validation/parse of one manifest entry; `base_dir` resolves relative
/// image and bitmap paths.
SeedImage parse_seed(const nlohmann::json& entry, const std::filesystem::path& base_dir,
                     std::size_t index);

/// All object ids except those tied for the maximum area, ascending.
std::vector<int> meltable_objects(const SeedImage& seed);

/// Fills pixels whose centre lies inside the region (even-odd per ring).
GrayImage rasterize(const Region& region, int width, int height);

/// Grows every 255 pixel by a Euclidean disk of `radius` pixels.
GrayImage dilate(const GrayImage& mask, int radius);

inline constexpr int kDefaultMaskMargin = 3;

/// Union of the named objects' regions, dilated by `margin`.
/// Throws Error(invalid_argument) for an empty id set or an unknown id.
GrayImage build_mask(const SeedImage& seed, const std::set<int>& object_ids,
                     int margin = kDefaultMaskMargin);

std::size_t mask_population(const GrayImage& mask);

bool valid_seed_id(std::string_view id);

}  // namespace meltcheck::corpus
