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

#include "kfsearch/query.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <unordered_map>

#include "kfsearch/spatial.hpp"

namespace kfs {

namespace {

bool is_wildcard(std::string_view tag) { return !tag.empty() && tag.back() == '*'; }

std::string normalize_prefix(std::string_view raw) {
  std::string out;
  for (char c : raw) {
    char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if ((lower >= 'a' && lower <= 'z') || (lower >= '0' && lower <= '9')) out.push_back(lower);
  }
  return out;
}

std::string normalize_tag(std::string_view raw) {
  if (is_wildcard(raw)) {
    std::string prefix = normalize_prefix(raw.substr(0, raw.size() - 1));
    if (prefix.size() < 2) {
      throw InvalidArgument("wildcard tag '" + std::string(raw) + "' needs at least 2 prefix characters");
    }
    return prefix + "*";
  }
  return ClassLabel(raw).name();
}

std::string_view kind_name(CanvasKind kind) { return kind == CanvasKind::kColor ? "color" : "object"; }

CanvasKind parse_kind(std::string_view name) {
  if (name == "object") return CanvasKind::kObject;
  if (name == "color") return CanvasKind::kColor;
  throw InvalidArgument("canvas kind must be 'object' or 'color'");
}

}  // namespace

// ---------------------------------------------------------------------------
// QuerySpec

void QuerySpec::validate() const {
  if (similarity_mode()) {
    if (!tags.empty() || !canvas.empty() || !occurrence_caps.empty() || bw || aspect) {
      throw InvalidArgument("a similarity query cannot carry tags, canvas, caps or flags");
    }
    return;
  }
  if (tags.empty() && canvas.empty()) throw InvalidArgument("query needs tags or canvas boxes");
  for (const auto& [label, cap] : occurrence_caps) {
    if (cap < 0) throw InvalidArgument("occurrence cap for '" + label + "' is negative");
  }
}

nlohmann::json QuerySpec::to_json() const {
  nlohmann::json j = {{"version", kQuerySpecVersion}};
  if (example_id) {
    j["example_id"] = example_id->str();
    return j;
  }
  j["tags"] = tags;
  j["canvas"] = nlohmann::json::array();
  for (const auto& item : canvas) {
    j["canvas"].push_back({{"label", item.label.name()}, {"kind", kind_name(item.kind)}, {"box", item.box}});
  }
  j["occurrence_caps"] = occurrence_caps;
  nlohmann::json flags = nlohmann::json::object();
  if (bw) flags["bw"] = *bw;
  if (aspect) flags["aspect"] = aspect_name(*aspect);
  j["flags"] = flags;
  return j;
}

QuerySpec QuerySpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("query spec must be a JSON object");
  if (j.contains("version") && j["version"] != kQuerySpecVersion) {
    throw InvalidArgument("unsupported query spec version " + j["version"].dump());
  }
  QuerySpec spec;
  try {
    for (const auto& t : j.value("tags", nlohmann::json::array())) {
      spec.tags.push_back(normalize_tag(t.get<std::string>()));
    }
    for (const auto& c : j.value("canvas", nlohmann::json::array())) {
      spec.canvas.push_back({ClassLabel(c.at("label").get<std::string>()),
                             parse_kind(c.value("kind", std::string("object"))), c.at("box").get<BoundingBox>()});
    }
    const auto caps = j.value("occurrence_caps", nlohmann::json::object());
    if (!caps.is_object()) throw InvalidArgument("occurrence_caps must be an object");
    for (const auto& [label, cap] : caps.items()) {
      if (!cap.is_number_integer()) throw InvalidArgument("occurrence cap must be an integer");
      spec.occurrence_caps[ClassLabel(label).name()] = cap.get<int>();
    }
    const auto flags = j.value("flags", nlohmann::json::object());
    if (flags.contains("bw") && !flags["bw"].is_null()) spec.bw = flags["bw"].get<bool>();
    if (flags.contains("aspect") && !flags["aspect"].is_null()) {
      spec.aspect = parse_aspect(flags["aspect"].get<std::string>());
    }
    if (j.contains("example_id") && !j["example_id"].is_null()) {
      spec.example_id = j["example_id"].get<KeyframeId>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed query spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// RankerTriple

std::string RankerTriple::name() const {
  return std::string(bb.name()) + "-" + std::string(an.name()) + "-" + std::string(oc.name());
}

RankerTriple RankerTriple::parse(std::string_view name) {
  const auto first = name.find('-');
  const auto second = first == std::string_view::npos ? first : name.find('-', first + 1);
  if (second == std::string_view::npos || name.find('-', second + 1) != std::string_view::npos) {
    throw InvalidArgument("ranker triple must be BB-AN-OC, got '" + std::string(name) + "'");
  }
  return RankerTriple{Ranker::parse(name.substr(0, first)), Ranker::parse(name.substr(first + 1, second - first - 1)),
                      Ranker::parse(name.substr(second + 1))};
}

std::vector<RankerTriple> RankerTriple::all() {
  std::vector<RankerTriple> out;
  for (auto bb : kAllRankerKinds)
    for (auto an : kAllRankerKinds)
      for (auto oc : kAllRankerKinds) out.push_back({Ranker(bb), Ranker(an), Ranker(oc)});
  return out;
}

// ---------------------------------------------------------------------------
// compile

CompiledQuery compile(const QuerySpec& spec, const Snapshot& snapshot) {
  spec.validate();
  if (spec.similarity_mode()) throw InvalidArgument("similarity queries are not compiled into subqueries");
  CompiledQuery out;

  std::vector<std::string> oclass, bbox, annotation;
  std::vector<std::string> object_order;
  std::unordered_map<std::string, int> object_boxes;
  std::vector<std::string> colors;
  for (const auto& item : spec.canvas) {
    for (const auto& cell : cells_covered(item.box)) bbox.push_back(cell_token(cell, item.label));
    if (item.kind == CanvasKind::kObject) {
      if (object_boxes[item.label.name()]++ == 0) object_order.push_back(item.label.name());
    } else if (std::find(colors.begin(), colors.end(), item.label.name()) == colors.end()) {
      colors.push_back(item.label.name());
    }
  }
  // n boxes of one object ask for at least n instances: label1 .. labeln.
  for (const auto& name : object_order) {
    const int n = std::min(object_boxes[name], kMaxOccurrences);
    for (int i = 1; i <= n; ++i) oclass.push_back(occurrence_token(ClassLabel(name), i));
  }
  for (const auto& c : colors) oclass.push_back(c);

  for (const auto& tag : spec.tags) {
    if (is_wildcard(tag)) {
      for (auto& [term, df] : snapshot.expand_wildcard(Field::kSceneTags, tag.substr(0, tag.size() - 1))) {
        annotation.push_back(term);
      }
    } else {
      annotation.push_back(tag);
    }
  }

  out.oclass_terms = make_query_terms(oclass);
  out.bbox_terms = make_query_terms(bbox);
  out.annotation_terms = make_query_terms(annotation);
  out.has_canvas = !spec.canvas.empty();
  out.has_tags = !out.annotation_terms.empty();

  for (const auto& [label, cap] : spec.occurrence_caps) {
    out.filters.must_not.push_back({Field::kObjColorClasses, occurrence_token(ClassLabel(label), cap + 1)});
  }
  out.filters.bw = spec.bw;
  out.filters.aspect = spec.aspect;
  return out;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

std::vector<ResultEntry> to_entries(const Snapshot& snapshot, const std::vector<ScoredDoc>& docs,
                                    std::size_t page_size) {
  std::vector<ResultEntry> out;
  const std::size_t n = std::min(page_size, docs.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({snapshot.id(docs[i].doc), docs[i].score, docs[i].doc});
  return out;
}

std::vector<ScoredDoc> apply_filters(const Snapshot& snapshot, std::vector<ScoredDoc> docs, const FilterSpec& f) {
  if (f.empty()) return docs;
  std::erase_if(docs, [&](const ScoredDoc& d) { return !snapshot.matches(d.doc, f); });
  return docs;
}

double max_of(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, x);
  return m;
}

}  // namespace

Execution run_query(const Snapshot& snapshot, const QuerySpec& spec, const RankerTriple& triple,
                    std::size_t page_size, const PipelineOptions& options) {
  Execution exec;
  if (spec.similarity_mode()) {
    spec.validate();
    exec.page.entries = similar(snapshot, *spec.example_id, page_size);
    for (const auto& e : exec.page.entries) exec.stage1.push_back(e.doc);
    return exec;
  }
  const CompiledQuery q = compile(spec, snapshot);

  if (!q.has_canvas) {
    auto ranked = apply_filters(snapshot, snapshot.score(Field::kSceneTags, q.annotation_terms, triple.an), q.filters);
    exec.stage1.reserve(ranked.size());
    for (const auto& d : ranked) exec.stage1.push_back(d.doc);
    exec.page.entries = to_entries(snapshot, ranked, page_size);
    return exec;
  }

  auto stage1 = apply_filters(snapshot, snapshot.score(Field::kObjColorClasses, q.oclass_terms, triple.oc), q.filters);
  exec.stage1.reserve(stage1.size());
  for (const auto& d : stage1) exec.stage1.push_back(d.doc);
  if (stage1.empty()) return exec;

  const std::size_t window = std::min(options.rescore_window, stage1.size());
  const std::span<const std::uint32_t> window_docs(exec.stage1.data(), window);

  std::vector<double> oc(window);
  for (std::size_t i = 0; i < window; ++i) oc[i] = stage1[i].score;
  std::vector<double> an;
  if (q.has_tags) an = snapshot.score_docs(Field::kSceneTags, q.annotation_terms, triple.an, window_docs);
  const std::vector<double> bb = snapshot.score_docs(Field::kObjColorBBoxes, q.bbox_terms, triple.bb, window_docs);

  const double max_oc = max_of(oc), max_an = max_of(an), max_bb = max_of(bb);
  std::vector<ScoredDoc> fused(window);
  for (std::size_t i = 0; i < window; ++i) {
    double s = 0;
    if (max_oc > 0) s += options.weight_oclass * oc[i] / max_oc;
    if (q.has_tags && max_an > 0) s += options.weight_annotation * an[i] / max_an;
    if (max_bb > 0) s += options.weight_bbox * bb[i] / max_bb;
    fused[i] = {stage1[i].doc, s};
  }
  // Ties keep their stage-1 order.
  std::stable_sort(fused.begin(), fused.end(), [](const ScoredDoc& l, const ScoredDoc& r) { return l.score > r.score; });

  // Candidates past the window keep their stage-1 order below the rescored
  // block, scaled so the page stays in descending score order.
  if (window < stage1.size()) {
    const double floor_score = fused.back().score;
    const double boundary = stage1[window - 1].score;
    for (std::size_t i = window; i < stage1.size() && fused.size() < page_size; ++i) {
      const double s = boundary > 0 ? floor_score * stage1[i].score / boundary : 0.0;
      fused.push_back({stage1[i].doc, s});
    }
  }
  exec.page.entries = to_entries(snapshot, fused, page_size);
  return exec;
}

std::vector<ResultPage::Group> ResultPage::group_by_video() const {
  std::vector<Group> groups;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& e : entries) {
    auto [it, fresh] = slot.try_emplace(e.id.video_id, groups.size());
    if (fresh) groups.push_back({e.id.video_id, {}});
    groups[it->second].entries.push_back(e);
  }
  return groups;
}

// ---------------------------------------------------------------------------
// Similarity

std::vector<ResultEntry> similar(const Snapshot& snapshot, const SurrogateDocument& query, std::size_t k) {
  if (k == 0) throw InvalidArgument("k must be >= 1");
  QueryTerms terms(query.term_freqs.begin(), query.term_freqs.end());
  auto ranked = snapshot.score(Field::kVisualFeatures, terms, Ranker(RankerKind::kTF));
  auto by_score_then_id = [&](const ScoredDoc& l, const ScoredDoc& r) {
    if (l.score != r.score) return l.score > r.score;
    return snapshot.id(l.doc) < snapshot.id(r.doc);
  };
  const std::size_t n = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n), ranked.end(), by_score_then_id);
  return to_entries(snapshot, ranked, n);
}

std::vector<ResultEntry> similar(const Snapshot& snapshot, const KeyframeId& query, std::size_t k) {
  auto doc = snapshot.ordinal(query);
  if (!doc) throw NotFound("unknown keyframe " + query.str());
  SurrogateDocument q;
  for (auto& [term, tf] : snapshot.doc_terms(Field::kVisualFeatures, *doc)) q.term_freqs.emplace_back(term, tf);
  return similar(snapshot, q, k);
}

std::vector<ResultEntry> similar(const Snapshot& snapshot, const EncoderState& encoder,
                                 std::span<const double> query, std::size_t k) {
  return similar(snapshot, encode_features(query, encoder), k);
}

nlohmann::json to_json(const ResultPage& page, const Snapshot& snapshot, bool group_by_video) {
  auto entry_json = [&](const ResultEntry& e) {
    return nlohmann::json{{"id", e.id.str()},
                          {"video", e.id.video_id},
                          {"segment", e.id.segment_index},
                          {"score", e.score},
                          {"has_thumbnail", !snapshot.image_path(e.doc).empty()}};
  };
  nlohmann::json j;
  j["results"] = nlohmann::json::array();
  for (const auto& e : page.entries) j["results"].push_back(entry_json(e));
  if (group_by_video) {
    j["groups"] = nlohmann::json::array();
    for (const auto& g : page.group_by_video()) {
      nlohmann::json members = nlohmann::json::array();
      for (const auto& e : g.entries) members.push_back(entry_json(e));
      j["groups"].push_back({{"video", g.video_id}, {"results", members}});
    }
  }
  return j;
}

}  // namespace kfs
