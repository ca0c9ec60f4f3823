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

#ifndef KFSEARCH_ANNOTATION_HPP_
#define KFSEARCH_ANNOTATION_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "kfsearch/core.hpp"

namespace kfs {

struct TagAnnotation {
  ClassLabel tag;
  double relevance;
};

/// Upper bound on how many times one tag is repeated in the scene tags field.
inline constexpr int kMaxTagRepetitions = 50;

/// Builds the scene tags field: each tag repeated ceil(relevance) times
/// (clamped to kMaxTagRepetitions). Duplicate tags are merged by summing
/// their relevances first. Distinct tags are emitted by descending relevance,
/// then lexicographically.
std::string encode_tags(const std::vector<TagAnnotation>& annotations);

struct TagLine {
  KeyframeId id;
  std::vector<TagAnnotation> tags;
};

/// Parses {"id": ..., "tags": [{"tag": ..., "relevance": ...}]}.
TagLine parse_tag_line(std::string_view line);

}  // namespace kfs

#endif  // KFSEARCH_ANNOTATION_HPP_
