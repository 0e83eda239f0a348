// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "pipeline/coco_import.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <set>
#include <vector>

#include "common/coco_classes.hpp"
#include "common/error.hpp"
#include "common/files.hpp"
#include "corpus/corpus.hpp"

namespace meltcheck::pipeline {
using nlohmann::json;
namespace fs = std::filesystem;

json CocoImportReport::to_json() const {
  return json{{"images_seen", images_seen},
              {"seeds", seeds},
              {"objects", objects},
              {"skipped_crowd", skipped_crowd},
              {"skipped_empty", skipped_empty},
              {"images_without_objects", images_without_objects},
              {"images_missing", images_missing},
              {"rejected_categories", rejected_categories}};
}

CocoImportReport import_coco(const fs::path& instances, const std::optional<fs::path>& captions,
                             const fs::path& image_dir, const fs::path& manifest) {
  const json doc = read_json(instances);
  CocoImportReport report;
  try {
    std::map<long long, std::string> categories;
    for (const auto& c : doc.at("categories")) categories[c.at("id").get<long long>()] = c.at("name").get<std::string>();

    std::map<long long, std::vector<const json*>> anns_by_image;
    for (const auto& a : doc.at("annotations")) anns_by_image[a.at("image_id").get<long long>()].push_back(&a);

    std::map<long long, std::vector<std::string>> caps_by_image;
    if (captions) {
      const json cdoc = read_json(*captions);
      std::vector<std::pair<long long, const json*>> rows;
      for (const auto& c : cdoc.at("annotations")) rows.emplace_back(c.value("id", 0LL), &c);
      std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
      for (const auto& [id, c] : rows) {
        caps_by_image[c->at("image_id").get<long long>()].push_back(c->at("caption").get<std::string>());
      }
    }

    const fs::path manifest_dir = manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
    json seeds = json::array();
    std::set<std::string> used_ids;
    for (const auto& img : doc.at("images")) {
      ++report.images_seen;
      const long long image_id = img.at("id").get<long long>();
      const std::string file_name = img.at("file_name").get<std::string>();
      const int width = img.at("width").get<int>(), height = img.at("height").get<int>();
      const fs::path image_path = image_dir / file_name;
      if (!fs::is_regular_file(image_path)) {
        ++report.images_missing;
        continue;
      }

      auto anns = anns_by_image[image_id];
      std::sort(anns.begin(), anns.end(),
                [](const json* x, const json* y) { return x->at("id").get<long long>() < y->at("id").get<long long>(); });
      json objects = json::array();
      int next_id = 1;
      for (const json* a : anns) {
        const std::string name = categories.count(a->at("category_id").get<long long>())
                                     ? categories[a->at("category_id").get<long long>()]
                                     : "category#" + std::to_string(a->at("category_id").get<long long>());
        if (!is_coco_class(name)) {
          ++report.rejected_categories[name];
          continue;
        }
        const json& seg = a->at("segmentation");
        if (a->value("iscrowd", 0) != 0 || !seg.is_array() || seg.empty()) {
          ++report.skipped_crowd;
          continue;
        }
        corpus::Region region;
        for (const auto& flat : seg) {
          corpus::Ring ring;
          for (std::size_t i = 0; i + 1 < flat.size(); i += 2) {
            ring.push_back({flat[i].get<double>(), flat[i + 1].get<double>()});
          }
          if (ring.size() >= 3) region.rings.push_back(std::move(ring));
        }
        if (region.rings.empty() || corpus::mask_population(corpus::rasterize(region, width, height)) == 0) {
          ++report.skipped_empty;
          continue;
        }
        // Clamp the box to the image; COCO boxes can overshoot by rounding.
        std::vector<double> box = a->at("bbox").get<std::vector<double>>();
        double x0 = std::clamp(box.at(0), 0.0, double(width)), y0 = std::clamp(box.at(1), 0.0, double(height));
        double x1 = std::clamp(box.at(0) + box.at(2), x0, double(width));
        double y1 = std::clamp(box.at(1) + box.at(3), y0, double(height));
        objects.push_back({{"object_id", next_id++},
                           {"source_id", a->at("id")},
                           {"class", name},
                           {"polygons", seg},
                           {"bbox", {x0, y0, x1 - x0, y1 - y0}}});
      }
      if (objects.empty()) {
        ++report.images_without_objects;
        continue;
      }

      std::string seed_id = fs::path(file_name).stem().string();
      if (!corpus::valid_seed_id(seed_id) || used_ids.count(seed_id)) seed_id = "coco-" + std::to_string(image_id);
      used_ids.insert(seed_id);
      report.objects += objects.size();
      ++report.seeds;
      seeds.push_back({{"seed_id", seed_id},
                       {"image_path", fs::relative(fs::absolute(image_path), fs::absolute(manifest_dir)).generic_string()},
                       {"annotations", objects},
                       {"gt_captions", caps_by_image[image_id]}});
    }
    write_file_atomic(manifest, seeds.dump(2) + "\n");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, "COCO import: " + std::string(e.what()));
  }
  for (const auto& [name, count] : report.rejected_categories) {
    spdlog::warn("COCO import: rejected {} object(s) of category '{}'", count, name);
  }
  return report;
}

}  // namespace meltcheck::pipeline
