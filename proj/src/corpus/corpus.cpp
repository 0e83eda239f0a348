// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "corpus/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "common/coco_classes.hpp"
#include "common/error.hpp"
#include "common/files.hpp"

namespace meltcheck::corpus {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class FieldError {
 public:
  FieldError(std::string seed_id, std::string field)
      : seed_id_(std::move(seed_id)), field_(std::move(field)) {}

  [[noreturn]] void raise(const std::string& what) const {
    throw Error(ErrorCode::corpus, "seed '" + seed_id_ + "': " + field_ + ": " + what);
  }

 private:
  std::string seed_id_;
  std::string field_;
};

Ring parse_ring(const json& value, const FieldError& where) {
  if (!value.is_array()) where.raise("polygon must be an array");
  Ring ring;
  bool nested = !value.empty() && value.front().is_array();
  if (nested) {
    for (const auto& v : value) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        where.raise("vertex must be [x, y]");
      }
      ring.push_back({v[0].get<double>(), v[1].get<double>()});
    }
  } else {
    // COCO style flat [x1, y1, x2, y2, ...]
    if (value.size() % 2 != 0) where.raise("flat polygon has an odd coordinate count");
    for (std::size_t i = 0; i < value.size(); i += 2) {
      if (!value[i].is_number() || !value[i + 1].is_number()) {
        where.raise("vertex coordinates must be numbers");
      }
      ring.push_back({value[i].get<double>(), value[i + 1].get<double>()});
    }
  }
  if (ring.size() < 3) {
    where.raise("polygon needs at least 3 vertices, got " + std::to_string(ring.size()));
  }
  return ring;
}

}  // namespace

const ObjectAnnotation* SeedImage::find(int object_id) const {
  for (const auto& a : annotations) {
    if (a.object_id == object_id) return &a;
  }
  return nullptr;
}

bool valid_seed_id(std::string_view id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

SeedImage parse_seed(const json& entry, const fs::path& base_dir, std::size_t index) {
  std::string label = "#" + std::to_string(index);
  if (!entry.is_object()) FieldError(label, "entry").raise("must be an object");
  if (!entry.contains("seed_id") || !entry["seed_id"].is_string()) {
    FieldError(label, "seed_id").raise("missing or not a string");
  }
  SeedImage seed;
  seed.seed_id = entry["seed_id"].get<std::string>();
  const std::string& sid = seed.seed_id;
  if (!valid_seed_id(sid)) {
    FieldError(sid, "seed_id").raise("only [A-Za-z0-9_.-] allowed");
  }

  if (!entry.contains("image_path") || !entry["image_path"].is_string()) {
    FieldError(sid, "image_path").raise("missing or not a string");
  }
  seed.image_path = base_dir / entry["image_path"].get<std::string>();
  if (!fs::exists(seed.image_path)) {
    FieldError(sid, "image_path").raise("missing image file '" + seed.image_path.string() + "'");
  }
  try {
    seed.png = read_bytes(seed.image_path);
    seed.image = decode_png_rgb(seed.png);
  } catch (const Error& e) {
    FieldError(sid, "image_path").raise(e.what());
  }

  if (entry.contains("gt_captions")) {
    const auto& gt = entry["gt_captions"];
    if (!gt.is_array()) FieldError(sid, "gt_captions").raise("must be an array");
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (!gt[i].is_string()) {
        FieldError(sid, "gt_captions[" + std::to_string(i) + "]").raise("must be a string");
      }
      seed.gt_captions.push_back(gt[i].get<std::string>());
    }
  }

  if (!entry.contains("annotations") || !entry["annotations"].is_array() ||
      entry["annotations"].empty()) {
    FieldError(sid, "annotations").raise("at least one annotation required");
  }
  const auto& anns = entry["annotations"];
  const int width = seed.image.width;
  const int height = seed.image.height;
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string base = "annotations[" + std::to_string(i) + "]";
    const json& a = anns[i];
    if (!a.is_object()) FieldError(sid, base).raise("must be an object");
    if (!a.contains("object_id") || !a["object_id"].is_number_integer()) {
      FieldError(sid, base + ".object_id").raise("missing or not an integer");
    }
    ObjectAnnotation obj;
    obj.object_id = a["object_id"].get<int>();
    const std::string tag = " (object_id " + std::to_string(obj.object_id) + ")";
    if (obj.object_id < 0) FieldError(sid, base + ".object_id").raise("must be >= 0");
    if (seed.find(obj.object_id)) {
      FieldError(sid, base + ".object_id").raise("duplicate object_id" + tag);
    }
    if (!a.contains("class") || !a["class"].is_string()) {
      FieldError(sid, base + ".class").raise("missing or not a string" + tag);
    }
    obj.class_name = a["class"].get<std::string>();
    if (!is_coco_class(obj.class_name)) {
      FieldError(sid, base + ".class").raise("unknown class '" + obj.class_name + "'" + tag);
    }

    if (a.contains("polygon")) {
      obj.region.rings.push_back(parse_ring(a["polygon"], FieldError(sid, base + ".polygon")));
    } else if (a.contains("polygons")) {
      const auto& parts = a["polygons"];
      if (!parts.is_array() || parts.empty()) {
        FieldError(sid, base + ".polygons").raise("must be a non-empty array");
      }
      for (std::size_t p = 0; p < parts.size(); ++p) {
        obj.region.rings.push_back(parse_ring(
            parts[p], FieldError(sid, base + ".polygons[" + std::to_string(p) + "]")));
      }
    } else if (a.contains("bitmap_path")) {
      FieldError where(sid, base + ".bitmap_path");
      if (!a["bitmap_path"].is_string()) where.raise("must be a string");
      fs::path bitmap_path = base_dir / a["bitmap_path"].get<std::string>();
      if (!fs::exists(bitmap_path)) {
        where.raise("missing bitmap file '" + bitmap_path.string() + "'" + tag);
      }
      GrayImage bitmap;
      try {
        bitmap = decode_png_gray(read_bytes(bitmap_path));
      } catch (const Error& e) {
        where.raise(e.what());
      }
      if (bitmap.width != width || bitmap.height != height) {
        where.raise("bitmap size differs from image size" + tag);
      }
      obj.region.bitmap = std::move(bitmap);
    } else {
      FieldError(sid, base).raise("needs one of polygon, polygons, bitmap_path" + tag);
    }

    if (!a.contains("bbox") || !a["bbox"].is_array() || a["bbox"].size() != 4) {
      FieldError(sid, base + ".bbox").raise("must be [x, y, w, h]" + tag);
    }
    for (const auto& v : a["bbox"]) {
      if (!v.is_number()) FieldError(sid, base + ".bbox").raise("must be numeric" + tag);
    }
    obj.bbox = {a["bbox"][0].get<double>(), a["bbox"][1].get<double>(),
                a["bbox"][2].get<double>(), a["bbox"][3].get<double>()};
    constexpr double eps = 1e-6;
    if (obj.bbox.x < -eps || obj.bbox.y < -eps || obj.bbox.w < 0 || obj.bbox.h < 0 ||
        obj.bbox.x + obj.bbox.w > width + eps || obj.bbox.y + obj.bbox.h > height + eps) {
      FieldError(sid, base + ".bbox").raise("outside image bounds" + tag);
    }

    obj.area_px = static_cast<std::int64_t>(
        mask_population(rasterize(obj.region, width, height)));
    if (obj.area_px <= 0) FieldError(sid, base).raise("region covers no pixels" + tag);
    seed.annotations.push_back(std::move(obj));
  }
  return seed;
}

std::vector<SeedImage> load_corpus(const fs::path& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::corpus, "corpus path '" + path.string() + "' does not exist");
  }
  fs::path manifest = fs::is_directory(path) ? path / "corpus.json" : path;
  json doc = read_json(manifest);
  if (!doc.is_array()) {
    throw Error(ErrorCode::corpus, manifest.string() + ": manifest must be a JSON array");
  }
  std::vector<SeedImage> seeds;
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    SeedImage seed = parse_seed(doc[i], manifest.parent_path(), i);
    if (auto [it, inserted] = seen.emplace(seed.seed_id, i); !inserted) {
      throw Error(ErrorCode::corpus, "seed '" + seed.seed_id + "': seed_id: duplicate seed_id (entries " +
                                         std::to_string(it->second) + " and " +
                                         std::to_string(i) + ")");
    }
    seeds.push_back(std::move(seed));
  }
  std::sort(seeds.begin(), seeds.end(),
            [](const SeedImage& a, const SeedImage& b) { return a.seed_id < b.seed_id; });
  return seeds;
}

std::vector<int> meltable_objects(const SeedImage& seed) {
  std::int64_t largest = 0;
  for (const auto& a : seed.annotations) largest = std::max(largest, a.area_px);
  std::vector<int> ids;
  for (const auto& a : seed.annotations) {
    if (a.area_px != largest) ids.push_back(a.object_id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

GrayImage rasterize(const Region& region, int width, int height) {
  GrayImage mask{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 0)};
  if (region.bitmap) {
    for (std::size_t i = 0; i < mask.pixels.size(); ++i) {
      if (region.bitmap->pixels[i] != 0) mask.pixels[i] = 255;
    }
  }
  std::vector<double> crossings;
  for (const Ring& ring : region.rings) {
    const std::size_t n = ring.size();
    for (int y = 0; y < height; ++y) {
      const double yc = y + 0.5;
      crossings.clear();
      for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& pi = ring[i];
        const Point& pj = ring[j];
        if ((pi.y > yc) != (pj.y > yc)) {
          crossings.push_back((pj.x - pi.x) * (yc - pi.y) / (pj.y - pi.y) + pi.x);
        }
      }
      std::sort(crossings.begin(), crossings.end());
      for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
        // Pixel centre xc is inside when crossings[k] <= xc < crossings[k+1].
        int x0 = static_cast<int>(std::ceil(crossings[k] - 0.5));
        int x1 = static_cast<int>(std::ceil(crossings[k + 1] - 0.5));
        x0 = std::max(x0, 0);
        x1 = std::min(x1, width);
        for (int x = x0; x < x1; ++x) mask.pixels[static_cast<std::size_t>(y) * width + x] = 255;
      }
    }
  }
  return mask;
}

GrayImage dilate(const GrayImage& mask, int radius) {
  if (radius <= 0) return mask;
  std::vector<std::pair<int, int>> disk;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) disk.emplace_back(dx, dy);
    }
  }
  GrayImage out = mask;
  const int w = mask.width;
  const int h = mask.height;
  auto at = [&](int x, int y) { return mask.pixels[static_cast<std::size_t>(y) * w + x]; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (at(x, y) == 0) continue;
      // Interior pixels cannot grow the mask beyond what their border neighbours do.
      bool border = x == 0 || y == 0 || x == w - 1 || y == h - 1 || at(x - 1, y) == 0 ||
                    at(x + 1, y) == 0 || at(x, y - 1) == 0 || at(x, y + 1) == 0;
      if (!border) continue;
      for (auto [dx, dy] : disk) {
        int nx = x + dx, ny = y + dy;
        if (nx >= 0 && ny >= 0 && nx < w && ny < h) {
          out.pixels[static_cast<std::size_t>(ny) * w + nx] = 255;
        }
      }
    }
  }
  return out;
}

GrayImage build_mask(const SeedImage& seed, const std::set<int>& object_ids, int margin) {
  if (object_ids.empty()) {
    throw Error(ErrorCode::invalid_argument, "build_mask: empty object set for seed '" + seed.seed_id + "'");
  }
  const int w = seed.image.width;
  const int h = seed.image.height;
  GrayImage mask{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 0)};
  for (int id : object_ids) {
    const ObjectAnnotation* obj = seed.find(id);
    if (!obj) {
      throw Error(ErrorCode::invalid_argument, "build_mask: unknown object_id " + std::to_string(id) +
                                                   " in seed '" + seed.seed_id + "'");
    }
    GrayImage part = rasterize(obj->region, w, h);
    for (std::size_t i = 0; i < part.pixels.size(); ++i) mask.pixels[i] |= part.pixels[i];
  }
  return dilate(mask, margin);
}

std::size_t mask_population(const GrayImage& mask) {
  return static_cast<std::size_t>(std::count(mask.pixels.begin(), mask.pixels.end(), 255));
}

}  // namespace meltcheck::corpus
