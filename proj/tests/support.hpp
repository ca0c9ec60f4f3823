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

#ifndef KFSEARCH_TESTS_SUPPORT_HPP_
#define KFSEARCH_TESTS_SUPPORT_HPP_

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "kfsearch/core.hpp"
#include "kfsearch/index.hpp"
#include "kfsearch/query.hpp"

namespace testing_support {

std::filesystem::path fixture(const std::string& name);

/// Reads records from JSON lines: {"id", "scene_tags", "objcolor_bboxes",
/// "objcolor_classes", "visual_features", "is_bw", "aspect"}; missing fields
/// are empty.
std::vector<kfs::KeyframeRecord> load_records(const std::filesystem::path& path);

kfs::SnapshotPtr build(const std::vector<kfs::KeyframeRecord>& records);

/// Fresh directory under the system temp dir, removed by the destructor.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline const std::vector<std::string> kObjects = {"person", "car", "dog", "cat", "bus", "tree", "horse", "boat"};
inline const std::vector<std::string> kColors = {"red", "blue", "green", "white", "black", "yellow"};
inline const std::vector<std::string> kTags = {"music", "musician", "park", "street", "beach", "night",
                                               "sunset", "crowd", "concert", "road"};

kfs::BoundingBox random_box(std::mt19937_64& rng);

/// Records built with the library encoders from random detections, colors
/// and tags.
std::vector<kfs::KeyframeRecord> random_records(std::mt19937_64& rng, std::size_t n, std::size_t videos = 10);

/// A valid non-similarity spec over the vocabularies above.
kfs::QuerySpec random_spec(std::mt19937_64& rng);

}  // namespace testing_support

#endif  // KFSEARCH_TESTS_SUPPORT_HPP_
