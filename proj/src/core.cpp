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

#include "kfsearch/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <utility>

namespace kfs {

namespace {

bool valid_video_id(std::string_view v) {
  if (v.empty()) return false;
  return std::none_of(v.begin(), v.end(), [](char c) {
    return c == ':' || c == '/' || std::isspace(static_cast<unsigned char>(c));
  });
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

KeyframeId::KeyframeId(std::string video, std::uint32_t segment)
    : video_id(std::move(video)), segment_index(segment) {
  if (!valid_video_id(video_id)) {
    throw InvalidArgument("invalid video id '" + video_id + "'");
  }
}

std::string KeyframeId::str() const {
  return video_id + ":" + std::to_string(segment_index);
}

KeyframeId KeyframeId::parse(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos) {
    throw InvalidArgument("keyframe id must be <video>:<segment>, got '" + std::string(text) + "'");
  }
  std::string_view seg = text.substr(colon + 1);
  std::uint32_t value = 0;
  auto [ptr, ec] = std::from_chars(seg.data(), seg.data() + seg.size(), value);
  if (seg.empty() || ec != std::errc() || ptr != seg.data() + seg.size()) {
    throw InvalidArgument("bad segment index in keyframe id '" + std::string(text) + "'");
  }
  return KeyframeId(std::string(text.substr(0, colon)), value);
}

void to_json(nlohmann::json& j, const KeyframeId& id) {
  j = nlohmann::json{{"video", id.video_id}, {"segment", id.segment_index}};
}

void from_json(const nlohmann::json& j, KeyframeId& id) {
  if (j.is_string()) {
    id = KeyframeId::parse(j.get<std::string>());
    return;
  }
  if (!j.is_object() || !j.contains("video") || !j.contains("segment")) {
    throw InvalidArgument("keyframe id must be an object {video, segment} or a string");
  }
  const auto& seg = j.at("segment");
  if (!seg.is_number_integer() || seg.get<std::int64_t>() < 0) {
    throw InvalidArgument("keyframe segment must be a non-negative integer");
  }
  id = KeyframeId(j.at("video").get<std::string>(), seg.get<std::uint32_t>());
}

std::string_view aspect_name(Aspect aspect) {
  switch (aspect) {
    case Aspect::k4x3:
      return "4:3";
    case Aspect::k16x9:
      return "16:9";
    case Aspect::kOther:
      return "other";
  }
  return "other";
}

Aspect parse_aspect(std::string_view name) {
  if (name == "4:3") return Aspect::k4x3;
  if (name == "16:9") return Aspect::k16x9;
  if (name == "other") return Aspect::kOther;
  throw InvalidArgument("unknown aspect '" + std::string(name) + "'");
}

Aspect classify_aspect(double width, double height) {
  if (!(width > 0) || !(height > 0)) return Aspect::kOther;
  const double ratio = width / height;
  if (std::abs(ratio - 4.0 / 3.0) < 0.05) return Aspect::k4x3;
  if (std::abs(ratio - 16.0 / 9.0) < 0.05) return Aspect::k16x9;
  return Aspect::kOther;
}

GridCell::GridCell(int column, int row) : column_(column), row_(row) {
  if (column < 0 || column >= kGridSize || row < 0 || row >= kGridSize) {
    throw InvalidArgument("grid cell out of range");
  }
}

GridCell GridCell::from_code(std::string_view code) {
  if (code.size() != 2 || code[0] < 'a' || code[0] > 'g' || code[1] < '1' || code[1] > '7') {
    throw InvalidArgument("bad grid cell code '" + std::string(code) + "'");
  }
  return GridCell(code[0] - 'a', code[1] - '1');
}

std::string GridCell::code() const {
  return std::string{column_letter(), static_cast<char>('0' + row_number())};
}

BoundingBox::BoundingBox(double x0, double y0, double x1, double y1)
    : x_min(x0), y_min(y0), x_max(x1), y_max(y1) {
  const bool in_range = x0 >= 0 && y0 >= 0 && x1 <= 1 && y1 <= 1;
  if (!in_range || !(x0 < x1) || !(y0 < y1)) {
    throw InvalidArgument("bounding box must satisfy 0 <= min < max <= 1");
  }
}

BoundingBox BoundingBox::united(const BoundingBox& o) const {
  return BoundingBox(std::min(x_min, o.x_min), std::min(y_min, o.y_min), std::max(x_max, o.x_max),
                     std::max(y_max, o.y_max));
}

bool BoundingBox::contains(const BoundingBox& o) const {
  return x_min <= o.x_min && y_min <= o.y_min && x_max >= o.x_max && y_max >= o.y_max;
}

void to_json(nlohmann::json& j, const BoundingBox& box) {
  j = nlohmann::json::array({box.x_min, box.y_min, box.x_max, box.y_max});
}

void from_json(const nlohmann::json& j, BoundingBox& box) {
  if (!j.is_array() || j.size() != 4) {
    throw InvalidArgument("box must be [x0, y0, x1, y1]");
  }
  box = BoundingBox(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

std::string normalize_label(std::string_view raw) {
  std::string out;
  out.reserve(raw.size() + 1);
  for (char c : raw) {
    char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if ((lower >= 'a' && lower <= 'z') || is_digit(lower)) out.push_back(lower);
  }
  if (!out.empty() && is_digit(out.back())) out.push_back('x');
  return out;
}

ClassLabel::ClassLabel(std::string_view raw) : name_(normalize_label(raw)) {
  if (name_.empty()) {
    throw InvalidArgument("class label '" + std::string(raw) + "' is empty after normalization");
  }
}

std::string cell_token(const GridCell& cell, const ClassLabel& label) {
  return cell.code() + label.name();
}

std::string occurrence_token(const ClassLabel& label, int n) {
  if (n < 1) throw InvalidArgument("occurrence count must be >= 1");
  return label.name() + std::to_string(n);
}

std::optional<ParsedCellToken> parse_cell_token(std::string_view token) {
  if (token.size() < 3) return std::nullopt;
  if (token[0] < 'a' || token[0] > 'g' || token[1] < '1' || token[1] > '7') return std::nullopt;
  std::string_view label = token.substr(2);
  if (!is_valid_token(label) || is_digit(label.back())) return std::nullopt;
  return ParsedCellToken{GridCell(token[0] - 'a', token[1] - '1'), std::string(label)};
}

std::optional<ParsedOccurrenceToken> parse_occurrence_token(std::string_view token) {
  if (!is_valid_token(token)) return std::nullopt;
  std::size_t split = token.size();
  while (split > 0 && is_digit(token[split - 1])) --split;
  if (split == 0 || split == token.size()) return std::nullopt;
  std::string_view digits = token.substr(split);
  if (digits.front() == '0') return std::nullopt;
  int n = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  return ParsedOccurrenceToken{std::string(token.substr(0, split)), n};
}

std::vector<GridCell> cells_covered(const BoundingBox& box) {
  constexpr double kCell = 1.0 / kGridSize;
  std::vector<GridCell> out;
  for (int row = 0; row < kGridSize; ++row) {
    const double y0 = row * kCell, y1 = (row + 1) * kCell;
    const double oy = std::min(box.y_max, y1) - std::max(box.y_min, y0);
    if (oy <= 0) continue;
    for (int col = 0; col < kGridSize; ++col) {
      const double x0 = col * kCell, x1 = (col + 1) * kCell;
      const double ox = std::min(box.x_max, x1) - std::max(box.x_min, x0);
      if (ox <= 0) continue;
      // Compared in cell-relative units so exact cell-aligned boxes are not
      // lost to rounding.
      if ((ox / kCell) * (oy / kCell) >= kCellCoverageThreshold - 1e-12) {
        out.emplace_back(col, row);
      }
    }
  }
  if (out.empty()) {
    const double cx = (box.x_min + box.x_max) / 2, cy = (box.y_min + box.y_max) / 2;
    const int col = std::clamp(static_cast<int>(std::floor(cx * kGridSize)), 0, kGridSize - 1);
    const int row = std::clamp(static_cast<int>(std::floor(cy * kGridSize)), 0, kGridSize - 1);
    out.emplace_back(col, row);
  }
  return out;
}

std::string_view field_name(Field field) {
  switch (field) {
    case Field::kSceneTags:
      return "scene_tags";
    case Field::kObjColorBBoxes:
      return "objcolor_bboxes";
    case Field::kObjColorClasses:
      return "objcolor_classes";
    case Field::kVisualFeatures:
      return "visual_features";
  }
  return "";
}

Field parse_field(std::string_view name) {
  for (int i = 0; i < kFieldCount; ++i) {
    if (field_name(static_cast<Field>(i)) == name) return static_cast<Field>(i);
  }
  throw InvalidArgument("unknown field '" + std::string(name) + "'");
}

const std::string& KeyframeRecord::field(Field f) const {
  switch (f) {
    case Field::kSceneTags:
      return scene_tags;
    case Field::kObjColorBBoxes:
      return objcolor_bboxes;
    case Field::kObjColorClasses:
      return objcolor_classes;
    case Field::kVisualFeatures:
      return visual_features;
  }
  throw InvalidArgument("unknown field");
}

std::string& KeyframeRecord::field(Field f) {
  return const_cast<std::string&>(std::as_const(*this).field(f));
}

KeyframeMetadata parse_metadata_line(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  KeyframeMetadata meta;
  meta.id = j.at("id").get<KeyframeId>();
  meta.width = j.value("width", 0.0);
  meta.height = j.value("height", 0.0);
  if (j.contains("is_bw") && !j["is_bw"].is_null()) meta.is_bw = j["is_bw"].get<bool>();
  if (j.contains("aspect") && !j["aspect"].is_null()) {
    meta.aspect = parse_aspect(j["aspect"].get<std::string>());
  }
  if (j.contains("image") && j["image"].is_string()) meta.image = j["image"].get<std::string>();
  return meta;
}

std::vector<std::string_view> split_tokens(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

bool is_valid_token(std::string_view token) {
  if (token.empty()) return false;
  return std::all_of(token.begin(), token.end(),
                     [](char c) { return (c >= 'a' && c <= 'z') || is_digit(c); });
}

}  // namespace kfs
