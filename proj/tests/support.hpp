// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "corpus/corpus.hpp"
#include "lexicon/lexicon.hpp"

namespace meltcheck::test {

inline std::filesystem::path fixtures() { return MELTCHECK_TEST_FIXTURES; }
inline std::filesystem::path data_dir() { return MELTCHECK_DATA_DIR; }

inline const lexicon::Lexicon& lex() {
  static const lexicon::Lexicon l = lexicon::Lexicon::load(data_dir() / "lexicon.json");
  return l;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "meltcheck-test-XXXXXX").string();
    path_ = ::mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline corpus::Ring rect_ring(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

/// In-memory seed: one object per (id, class, rect). Image is a flat grey.
struct ObjSpec {
  int id;
  std::string cls;
  double x0, y0, x1, y1;
};

inline corpus::SeedImage make_seed(const std::string& id, int w, int h, const std::vector<ObjSpec>& objs) {
  corpus::SeedImage s;
  s.seed_id = id;
  s.image = Image{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3, 128)};
  for (const auto& o : objs) {
    corpus::ObjectAnnotation a;
    a.object_id = o.id;
    a.class_name = o.cls;
    a.region.rings.push_back(rect_ring(o.x0, o.y0, o.x1, o.y1));
    a.bbox = {o.x0, o.y0, o.x1 - o.x0, o.y1 - o.y0};
    a.area_px = static_cast<std::int64_t>(corpus::mask_population(corpus::rasterize(a.region, w, h)));
    s.annotations.push_back(std::move(a));
  }
  return s;
}

}  // namespace meltcheck::test
