// Copyright 2026 The kfsearch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "support.hpp"

#include <fstream>

#include "kfsearch/annotation.hpp"
#include "kfsearch/spatial.hpp"

namespace testing_support {

namespace fs = std::filesystem;

fs::path fixture(const std::string& name) { return fs::path(KFSEARCH_FIXTURE_DIR) / name; }

std::vector<kfs::KeyframeRecord> load_records(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing fixture " + path.string());
  std::vector<kfs::KeyframeRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    kfs::KeyframeRecord r;
    r.id = j.at("id").get<kfs::KeyframeId>();
    r.scene_tags = j.value("scene_tags", "");
    r.objcolor_bboxes = j.value("objcolor_bboxes", "");
    r.objcolor_classes = j.value("objcolor_classes", "");
    r.visual_features = j.value("visual_features", "");
    r.is_bw = j.value("is_bw", false);
    r.aspect = kfs::parse_aspect(j.value("aspect", "other"));
    out.push_back(std::move(r));
  }
  return out;
}

kfs::SnapshotPtr build(const std::vector<kfs::KeyframeRecord>& records) {
  kfs::IndexWriter writer;
  for (const auto& r : records) writer.add(r);
  return writer.commit();
}

TempDir::TempDir() {
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    fs::path p = fs::temp_directory_path() / ("kfsearch-test-" + std::to_string(rd()));
    if (fs::create_directory(p)) {
      path_ = p;
      return;
    }
  }
  throw std::runtime_error("cannot create temp dir");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

kfs::BoundingBox random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x0 = u(rng), x1 = u(rng), y0 = u(rng), y1 = u(rng);
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  if (x1 - x0 < 0.01) x1 = std::min(1.0, x0 + 0.05), x0 = x1 - 0.05;
  if (y1 - y0 < 0.01) y1 = std::min(1.0, y0 + 0.05), y0 = y1 - 0.05;
  return {x0, y0, x1, y1};
}

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::vector<kfs::KeyframeRecord> random_records(std::mt19937_64& rng, std::size_t n, std::size_t videos) {
  std::vector<kfs::KeyframeRecord> out;
  std::uniform_int_distribution<int> small(0, 4);
  std::uniform_real_distribution<double> rel(0.1, 4.0);
  for (std::size_t i = 0; i < n; ++i) {
    kfs::KeyframeRecord r;
    r.id = {"video" + std::to_string(i % videos), static_cast<std::uint32_t>(i / videos)};
    std::vector<kfs::Detection> dets;
    for (int d = small(rng); d > 0; --d) dets.push_back({{kfs::ClassLabel(pick(rng, kObjects))}, random_box(rng), 1.0});
    std::vector<kfs::ColorCellAssignment> cells;
    std::vector<kfs::ClassLabel> colors;
    for (int c = small(rng); c > 0; --c) {
      const kfs::ClassLabel color(pick(rng, kColors));
      cells.push_back({kfs::GridCell(small(rng), small(rng)), {color}});
      if (std::find(colors.begin(), colors.end(), color) == colors.end()) colors.push_back(color);
    }
    r.objcolor_bboxes = kfs::encode_bboxes(dets, cells);
    r.objcolor_classes = kfs::encode_classes(dets, colors);
    std::vector<kfs::TagAnnotation> tags;
    for (int t = small(rng); t > 0; --t) tags.push_back({kfs::ClassLabel(pick(rng, kTags)), rel(rng)});
    r.scene_tags = kfs::encode_tags(tags);
    r.is_bw = small(rng) == 0;
    r.aspect = static_cast<kfs::Aspect>(small(rng) % 3);
    out.push_back(std::move(r));
  }
  return out;
}

kfs::QuerySpec random_spec(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> small(0, 3);
  kfs::QuerySpec spec;
  do {
    spec = {};
    for (int i = small(rng); i > 0; --i) {
      const bool color = small(rng) == 0;
      spec.canvas.push_back({kfs::ClassLabel(color ? pick(rng, kColors) : pick(rng, kObjects)),
                             color ? kfs::CanvasKind::kColor : kfs::CanvasKind::kObject, random_box(rng)});
    }
    for (int i = small(rng); i > 0; --i) {
      const std::string& tag = pick(rng, kTags);
      spec.tags.push_back(small(rng) == 0 ? tag.substr(0, 3) + "*" : tag);
    }
  } while (spec.canvas.empty() && spec.tags.empty());
  for (int i = small(rng) - 1; i > 0; --i) spec.occurrence_caps[pick(rng, kObjects)] = small(rng);
  if (small(rng) == 0) spec.bw = small(rng) % 2 == 0;
  if (small(rng) == 0) spec.aspect = static_cast<kfs::Aspect>(small(rng) % 3);
  return spec;
}

}  // namespace testing_support
