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

#ifndef KFSEARCH_SPATIAL_HPP_
#define KFSEARCH_SPATIAL_HPP_

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "kfsearch/core.hpp"

namespace kfs {

/// One detector output. A detector may emit several labels for the same
/// region (e.g. car + vehicle).
struct Detection {
  std::vector<ClassLabel> labels;
  BoundingBox box;
  double confidence = 1.0;
};

struct ColorCellAssignment {
  GridCell cell;
  std::vector<ClassLabel> colors;
};

inline constexpr double kDefaultDetectionConfidence = 0.25;
/// Occurrence tokens stop at this count per label.
inline constexpr int kMaxOccurrences = 20;

/// label -> ancestors, applied transitively.
using HypernymMap = std::map<std::string, std::vector<std::string>>;

/// Loads {"car": ["vehicle"], "horse": ["mammal", "animal"], ...}.
HypernymMap load_hypernyms(const std::string& path);

/// Keeps detections with confidence >= threshold.
std::vector<Detection> filter_by_confidence(std::vector<Detection> detections, double threshold);

/// Appends every (transitive) ancestor not already carried by the detection.
std::vector<Detection> expand_hypernyms(std::vector<Detection> detections, const HypernymMap& map);

/// Object&Color BBoxes field: one cell token per (detection, covered cell,
/// label), then one per (color cell, color).
std::string encode_bboxes(const std::vector<Detection>& detections,
                          const std::vector<ColorCellAssignment>& color_cells);

/// Object&Color Classes field: label1..labelN for each label carried by N
/// detections (labels in order of first appearance), then each global color
/// name once.
std::string encode_classes(const std::vector<Detection>& detections,
                           const std::vector<ClassLabel>& palette_colors);

struct DetectionLine {
  KeyframeId id;
  std::vector<Detection> detections;
};

/// Parses {"id": ..., "detections": [{"labels": [...], "box": [x0,y0,x1,y1], "confidence": c}]}.
DetectionLine parse_detection_line(std::string_view line);

}  // namespace kfs

#endif  // KFSEARCH_SPATIAL_HPP_
