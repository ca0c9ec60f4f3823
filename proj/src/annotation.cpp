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

#include "kfsearch/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace kfs {

std::string encode_tags(const std::vector<TagAnnotation>& annotations) {
  std::map<std::string, double> merged;
  for (const auto& a : annotations) {
    if (!(a.relevance > 0) || !std::isfinite(a.relevance)) {
      throw InvalidArgument("tag '" + a.tag.name() + "' has non-positive relevance");
    }
    merged[a.tag.name()] += a.relevance;
  }

  std::vector<std::pair<std::string, double>> ordered(merged.begin(), merged.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& l, const auto& r) { return l.second > r.second; });

  std::string out;
  for (const auto& [tag, relevance] : ordered) {
    const double reps = std::min<double>(std::ceil(relevance), kMaxTagRepetitions);
    for (int i = 0; i < static_cast<int>(reps); ++i) {
      if (!out.empty()) out.push_back(' ');
      out += tag;
    }
  }
  return out;
}

TagLine parse_tag_line(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  TagLine out{j.at("id").get<KeyframeId>(), {}};
  for (const auto& t : j.value("tags", nlohmann::json::array())) {
    const double relevance = t.at("relevance").get<double>();
    if (!(relevance > 0) || !std::isfinite(relevance)) throw InvalidArgument("tag relevance must be positive");
    out.tags.push_back({ClassLabel(t.at("tag").get<std::string>()), relevance});
  }
  return out;
}

}  // namespace kfs
