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

#ifndef KFSEARCH_CORE_HPP_
#define KFSEARCH_CORE_HPP_

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace kfs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an argument violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Raised when a lookup by id or name fails.
class NotFound : public Error {
 public:
  using Error::Error;
};

inline constexpr int kGridSize = 7;
inline constexpr int kGridCells = kGridSize * kGridSize;

/// Identity of one keyframe: the video it belongs to and its segment index.
/// Textual form is "<video>:<segment>".
struct KeyframeId {
  std::string video_id;
  std::uint32_t segment_index = 0;

  KeyframeId() = default;
  KeyframeId(std::string video, std::uint32_t segment);

  std::string str() const;
  static KeyframeId parse(std::string_view text);

  auto operator<=>(const KeyframeId&) const = default;
  bool operator==(const KeyframeId&) const = default;
};

void to_json(nlohmann::json& j, const KeyframeId& id);
/// Accepts either {"video": ..., "segment": ...} or the "<video>:<segment>" string form.
void from_json(const nlohmann::json& j, KeyframeId& id);

enum class Aspect : std::uint8_t { k4x3 = 0, k16x9 = 1, kOther = 2 };

std::string_view aspect_name(Aspect aspect);
Aspect parse_aspect(std::string_view name);
/// 4:3 and 16:9 are matched within 0.05 of the width/height ratio.
Aspect classify_aspect(double width, double height);

/// One cell of the 7x7 grid. Columns a..g run left to right, rows 1..7 top to bottom.
class GridCell {
 public:
  /// column and row are zero-based indices in [0, 7).
  GridCell(int column, int row);

  static GridCell from_code(std::string_view code);

  int column() const { return column_; }
  int row() const { return row_; }
  char column_letter() const { return static_cast<char>('a' + column_); }
  int row_number() const { return row_ + 1; }
  int linear() const { return row_ * kGridSize + column_; }
  std::string code() const;

  auto operator<=>(const GridCell&) const = default;
  bool operator==(const GridCell&) const = default;

 private:
  int column_;
  int row_;
};

/// Normalized box, origin top-left, coordinates in [0, 1].
struct BoundingBox {
  double x_min = 0, y_min = 0, x_max = 1, y_max = 1;

  BoundingBox() = default;
  BoundingBox(double x0, double y0, double x1, double y1);

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  BoundingBox united(const BoundingBox& other) const;
  bool contains(const BoundingBox& other) const;
};

void to_json(nlohmann::json& j, const BoundingBox& box);
void from_json(const nlohmann::json& j, BoundingBox& box);

/// Object class or color name. Always lowercase [a-z0-9], never empty, never
/// ending in a digit, so class+occurrence tokens stay unambiguous.
class ClassLabel {
 public:
  /// Applies normalization: lowercase, drops characters outside [a-z0-9],
  /// appends "x" when the result ends in a digit.
  explicit ClassLabel(std::string_view raw);

  const std::string& name() const { return name_; }

  auto operator<=>(const ClassLabel&) const = default;
  bool operator==(const ClassLabel&) const = default;

 private:
  std::string name_;
};

std::string normalize_label(std::string_view raw);

/// "e3" + "car" -> "e3car".
std::string cell_token(const GridCell& cell, const ClassLabel& label);
/// "person" + 2 -> "person2".
std::string occurrence_token(const ClassLabel& label, int n);

struct ParsedCellToken {
  GridCell cell;
  std::string label;
};
struct ParsedOccurrenceToken {
  std::string label;
  int n;
};
std::optional<ParsedCellToken> parse_cell_token(std::string_view token);
std::optional<ParsedOccurrenceToken> parse_occurrence_token(std::string_view token);

/// Fraction of a cell's area the box must overlap for the cell to count as covered.
inline constexpr double kCellCoverageThreshold = 0.20;

/// Cells overlapped by at least kCellCoverageThreshold of their area, in
/// row-major order. When no cell reaches the threshold the cell containing
/// the box center is returned instead, so the result is never empty.
std::vector<GridCell> cells_covered(const BoundingBox& box);

enum class Field : std::uint8_t {
  kSceneTags = 0,
  kObjColorBBoxes = 1,
  kObjColorClasses = 2,
  kVisualFeatures = 3,
};
inline constexpr int kFieldCount = 4;

std::string_view field_name(Field field);
Field parse_field(std::string_view name);

/// One indexed keyframe. Text fields are space-separated [a-z0-9] tokens.
struct KeyframeRecord {
  KeyframeId id;
  std::string scene_tags;
  std::string objcolor_bboxes;
  std::string objcolor_classes;
  std::string visual_features;
  bool is_bw = false;
  Aspect aspect = Aspect::kOther;
  /// Path of the source image, empty when the keyframe has no thumbnail.
  std::string image_path;

  const std::string& field(Field f) const;
  std::string& field(Field f);
};

/// One line of the keyframe metadata ingest file.
struct KeyframeMetadata {
  KeyframeId id;
  double width = 0;
  double height = 0;
  std::optional<bool> is_bw;
  std::optional<Aspect> aspect;
  std::optional<std::string> image;
};

KeyframeMetadata parse_metadata_line(std::string_view line);

/// Splits on ASCII whitespace, skipping empty pieces.
std::vector<std::string_view> split_tokens(std::string_view text);
bool is_valid_token(std::string_view token);

}  // namespace kfs

template <>
struct std::hash<kfs::KeyframeId> {
  std::size_t operator()(const kfs::KeyframeId& id) const noexcept {
    return std::hash<std::string>{}(id.video_id) * 1000003u ^ id.segment_index;
  }
};

#endif  // KFSEARCH_CORE_HPP_
