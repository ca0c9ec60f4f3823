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

#include "kfsearch/spatial.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace kfs {

namespace {

void append(std::string& out, const std::string& token) {
  if (!out.empty()) out.push_back(' ');
  out += token;
}

}  // namespace

HypernymMap load_hypernyms(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open hypernym map " + path);
  const auto j = nlohmann::json::parse(in);
  HypernymMap map;
  for (const auto& [label, ancestors] : j.items()) {
    auto& dst = map[normalize_label(label)];
    for (const auto& a : ancestors) dst.push_back(normalize_label(a.get<std::string>()));
  }
  return map;
}

std::vector<Detection> filter_by_confidence(std::vector<Detection> detections, double threshold) {
  std::erase_if(detections, [&](const Detection& d) { return d.confidence < threshold; });
  return detections;
}

std::vector<Detection> expand_hypernyms(std::vector<Detection> detections, const HypernymMap& map) {
  for (auto& d : detections) {
    std::set<std::string> seen;
    for (const auto& l : d.labels) seen.insert(l.name());
    for (std::size_t i = 0; i < d.labels.size(); ++i) {
      auto it = map.find(d.labels[i].name());
      if (it == map.end()) continue;
      for (const auto& ancestor : it->second) {
        if (!ancestor.empty() && seen.insert(ancestor).second) d.labels.emplace_back(ancestor);
      }
    }
  }
  return detections;
}

std::string encode_bboxes(const std::vector<Detection>& detections,
                          const std::vector<ColorCellAssignment>& color_cells) {
  std::string out;
  for (const auto& d : detections) {
    for (const auto& cell : cells_covered(d.box)) {
      for (const auto& label : d.labels) append(out, cell_token(cell, label));
    }
  }
  for (const auto& cc : color_cells) {
    for (const auto& color : cc.colors) append(out, cell_token(cc.cell, color));
  }
  return out;
}

std::string encode_classes(const std::vector<Detection>& detections,
                           const std::vector<ClassLabel>& palette_colors) {
  std::vector<ClassLabel> order;
  std::map<std::string, int> counts;
  for (const auto& d : detections) {
    for (const auto& label : d.labels) {
      if (counts[label.name()]++ == 0) order.push_back(label);
    }
  }
  std::string out;
  for (const auto& label : order) {
    const int n = std::min(counts[label.name()], kMaxOccurrences);
    for (int i = 1; i <= n; ++i) append(out, occurrence_token(label, i));
  }
  std::set<std::string> emitted;
  for (const auto& color : palette_colors) {
    if (emitted.insert(color.name()).second) append(out, color.name());
  }
  return out;
}

DetectionLine parse_detection_line(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  DetectionLine out{j.at("id").get<KeyframeId>(), {}};
  for (const auto& d : j.value("detections", nlohmann::json::array())) {
    Detection det;
    std::set<std::string> seen;
    for (const auto& l : d.at("labels")) {
      ClassLabel label(l.get<std::string>());
      if (seen.insert(label.name()).second) det.labels.push_back(std::move(label));
    }
    if (det.labels.empty()) throw InvalidArgument("detection without labels");
    det.box = d.at("box").get<BoundingBox>();
    det.confidence = d.value("confidence", 1.0);
    if (det.confidence < 0 || det.confidence > 1) {
      throw InvalidArgument("detection confidence outside [0, 1]");
    }
    out.detections.push_back(std::move(det));
  }
  return out;
}

}  // namespace kfs
