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

#ifndef KFSEARCH_QUERY_HPP_
#define KFSEARCH_QUERY_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kfsearch/core.hpp"
#include "kfsearch/feature.hpp"
#include "kfsearch/index.hpp"

namespace kfs {

inline constexpr int kQuerySpecVersion = 1;

enum class CanvasKind : std::uint8_t { kObject, kColor };

/// A box drawn on the 7x7 query canvas.
struct CanvasItem {
  ClassLabel label;
  CanvasKind kind = CanvasKind::kObject;
  BoundingBox box;
};

/// A user query. Either similarity mode (example_id only) or a combination of
/// tags and canvas boxes with optional caps and flags.
///
/// JSON (version 1):
///   {"version": 1,
///    "tags": ["park", "music*"],
///    "canvas": [{"label": "car", "kind": "object", "box": [x0, y0, x1, y1]}],
///    "occurrence_caps": {"dog": 0, "person": 1},
///    "flags": {"bw": false, "aspect": "16:9"},
///    "example_id": "video:segment"}
struct QuerySpec {
  /// Full terms, or prefixes ending with '*'.
  std::vector<std::string> tags;
  std::vector<CanvasItem> canvas;
  std::map<std::string, int> occurrence_caps;
  std::optional<bool> bw;
  std::optional<Aspect> aspect;
  std::optional<KeyframeId> example_id;

  bool similarity_mode() const { return example_id.has_value(); }
  /// Throws InvalidArgument when the spec is empty or mixes similarity mode
  /// with other fields.
  void validate() const;

  nlohmann::json to_json() const;
  /// Normalizes labels and tags; validates.
  static QuerySpec from_json(const nlohmann::json& j);
};

/// Rankers for the BBox, Annotation and OClass stages, written "BB-AN-OC".
struct RankerTriple {
  Ranker bb;
  Ranker an;
  Ranker oc;

  std::string name() const;
  static RankerTriple parse(std::string_view name);
  /// All 64 combinations, BB-major in BM25, TFIDF, TF, NormTF order.
  static std::vector<RankerTriple> all();
  static RankerTriple default_triple() { return parse("NormTF-BM25-TF"); }

  bool operator==(const RankerTriple&) const = default;
};

struct CompiledQuery {
  QueryTerms oclass_terms;
  QueryTerms annotation_terms;
  QueryTerms bbox_terms;
  FilterSpec filters;
  bool has_tags = false;
  bool has_canvas = false;
};

/// Splits a spec into per-stage term vectors and filters. Wildcard tags are
/// expanded against the scene tags dictionary of the snapshot.
CompiledQuery compile(const QuerySpec& spec, const Snapshot& snapshot);

struct PipelineOptions {
  double weight_oclass = 1.0;
  double weight_annotation = 1.0;
  double weight_bbox = 2.0;
  std::size_t rescore_window = 10000;
};

struct ResultEntry {
  KeyframeId id;
  double score = 0;
  std::uint32_t doc = 0;
};

struct ResultPage {
  std::vector<ResultEntry> entries;

  struct Group {
    std::string video_id;
    std::vector<ResultEntry> entries;
  };
  /// Groups by video in order of each video's best-ranked entry; keeps
  /// within-group order.
  std::vector<Group> group_by_video() const;
};

struct Execution {
  ResultPage page;
  /// Documents selected by the first stage after filtering, in stage order.
  std::vector<std::uint32_t> stage1;
};

/// Runs the cascade. With canvas boxes: OClass search selects and filters the
/// candidates, Annotation search (if tags) and BBox search rescore the top
/// rescore_window of them, and the normalized stage scores are fused by the
/// configured weights. Tags only: Annotation search alone. Similarity mode is
/// routed to similar().
Execution run_query(const Snapshot& snapshot, const QuerySpec& spec, const RankerTriple& triple,
                    std::size_t page_size, const PipelineOptions& options = {});

inline ResultPage execute(const Snapshot& snapshot, const QuerySpec& spec, const RankerTriple& triple,
                          std::size_t page_size, const PipelineOptions& options = {}) {
  return run_query(snapshot, spec, triple, page_size, options).page;
}

/// Top-k documents by TF (dot product) over the visual features field; ties by
/// keyframe id. Throws NotFound for an unknown id.
std::vector<ResultEntry> similar(const Snapshot& snapshot, const KeyframeId& query, std::size_t k);
std::vector<ResultEntry> similar(const Snapshot& snapshot, const EncoderState& encoder,
                                 std::span<const double> query, std::size_t k);
std::vector<ResultEntry> similar(const Snapshot& snapshot, const SurrogateDocument& query, std::size_t k);

nlohmann::json to_json(const ResultPage& page, const Snapshot& snapshot, bool group_by_video);

}  // namespace kfs

#endif  // KFSEARCH_QUERY_HPP_
