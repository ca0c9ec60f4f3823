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

#ifndef KFSEARCH_INGEST_HPP_
#define KFSEARCH_INGEST_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kfsearch/annotation.hpp"
#include "kfsearch/color.hpp"
#include "kfsearch/feature.hpp"
#include "kfsearch/index.hpp"
#include "kfsearch/spatial.hpp"

namespace kfs {

/// Sources for one index build. Relative paths are resolved against the
/// directory of the manifest file.
///
///   {"metadata": "keyframes.jsonl", "images": "images", "tags": "tags.jsonl",
///    "detections": "detections.jsonl", "vectors": "vectors.csv",
///    "palette": "palette.txt", "hypernyms": "hypernyms.json",
///    "encoder": {"seed": 42, "threshold": 1.8, "scale": 10, "fit_sample": 10000},
///    "detector_confidence": 0.25, "threads": 0}
///
/// Only "metadata" is required.
struct IngestManifest {
  std::filesystem::path metadata;
  std::optional<std::filesystem::path> images;
  std::optional<std::filesystem::path> tags;
  std::optional<std::filesystem::path> detections;
  std::optional<std::filesystem::path> vectors;
  std::optional<std::filesystem::path> palette;
  std::optional<std::filesystem::path> hypernyms;
  std::uint64_t encoder_seed = 42;
  double encoder_threshold = kDefaultFeatureThreshold;
  double encoder_scale = kDefaultFeatureScale;
  std::size_t encoder_fit_sample = 10000;
  double detector_confidence = kDefaultDetectionConfidence;
  unsigned threads = 0;

  /// Throws Error when a referenced file does not exist.
  static IngestManifest load(const std::filesystem::path& path);
  static IngestManifest from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
};

struct IngestReport {
  std::size_t records = 0;
  /// Per-record problems that did not prevent indexing (e.g. undecodable image).
  std::vector<std::pair<std::string, std::string>> warnings;
  /// Unparseable lines or ids unknown to the metadata, as (source:line, reason).
  std::vector<std::pair<std::string, std::string>> skipped;
  std::size_t missing_tags = 0;
  std::size_t missing_detections = 0;
  std::size_t missing_vectors = 0;
  std::size_t missing_images = 0;
  std::vector<std::string> object_vocabulary;
  nlohmann::json field_stats;

  nlohmann::json to_json() const;
};

/// Builds the index into out_dir: segment + MANIFEST, encoder.json (when
/// vectors are present), palette.txt, meta.json and ingest_report.json.
/// Throws Error when no record could be indexed.
IngestReport build_index(const IngestManifest& manifest, const std::filesystem::path& out_dir);

/// Encoders applied to one keyframe's sources.
struct RecordSources {
  KeyframeMetadata meta;
  std::vector<TagAnnotation> tags;
  std::vector<Detection> detections;
  std::optional<FeatureVector> vector;
  std::optional<std::filesystem::path> image;
};

struct RecordBuildResult {
  KeyframeRecord record;
  std::vector<std::string> labels;
  std::optional<std::string> warning;
};

RecordBuildResult build_record(const RecordSources& sources, const Palette& palette, const HypernymMap& hypernyms,
                               double detector_confidence, const EncoderState* encoder);

}  // namespace kfs

#endif  // KFSEARCH_INGEST_HPP_
