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

#include "kfsearch/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "kfsearch/annotation.hpp"
#include "kfsearch/parallel.hpp"

namespace kfs {

namespace fs = std::filesystem;

namespace {

std::optional<fs::path> optional_path(const nlohmann::json& j, const char* key, const fs::path& base) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  fs::path p = j[key].get<std::string>();
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) throw Error(std::string("manifest ") + key + " path does not exist: " + p.string());
  return p;
}

template <typename Line, typename Parse>
std::map<KeyframeId, Line> read_jsonl(const fs::path& path, const char* source, Parse parse,
                                      std::vector<std::pair<std::string, std::string>>& skipped) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::map<KeyframeId, Line> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (split_tokens(line).empty()) continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    try {
      Line parsed = parse(line);
      KeyframeId id = parsed.id;
      if (!out.emplace(id, std::move(parsed)).second) skipped.emplace_back(where, "duplicate id " + id.str());
    } catch (const std::exception& e) {
      skipped.emplace_back(where, e.what());
    }
  }
  return out;
}

std::optional<fs::path> find_image(const KeyframeMetadata& meta, const IngestManifest& m, const fs::path& base) {
  if (meta.image) {
    fs::path p = *meta.image;
    if (p.is_relative()) p = (m.images ? *m.images : base) / p;
    return p;
  }
  if (!m.images) return std::nullopt;
  for (const char* ext : {".png", ".jpg", ".jpeg"}) {
    fs::path p = *m.images / meta.id.video_id / (std::to_string(meta.id.segment_index) + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

}  // namespace

IngestManifest IngestManifest::from_json(const nlohmann::json& j, const fs::path& base) {
  IngestManifest m;
  auto metadata = optional_path(j, "metadata", base);
  if (!metadata) throw Error("manifest needs a 'metadata' path");
  m.metadata = *metadata;
  m.images = optional_path(j, "images", base);
  m.tags = optional_path(j, "tags", base);
  m.detections = optional_path(j, "detections", base);
  m.vectors = optional_path(j, "vectors", base);
  m.palette = optional_path(j, "palette", base);
  m.hypernyms = optional_path(j, "hypernyms", base);
  if (j.contains("encoder")) {
    const auto& e = j["encoder"];
    m.encoder_seed = e.value("seed", m.encoder_seed);
    m.encoder_threshold = e.value("threshold", m.encoder_threshold);
    m.encoder_scale = e.value("scale", m.encoder_scale);
    m.encoder_fit_sample = e.value("fit_sample", m.encoder_fit_sample);
  }
  m.detector_confidence = j.value("detector_confidence", m.detector_confidence);
  m.threads = j.value("threads", m.threads);
  if (m.encoder_fit_sample == 0) throw Error("encoder fit_sample must be positive");
  return m;
}

IngestManifest IngestManifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  return from_json(nlohmann::json::parse(in), path.parent_path());
}

nlohmann::json IngestReport::to_json() const {
  nlohmann::json j;
  j["records"] = records;
  j["failures"] = skipped.size();
  j["skipped"] = nlohmann::json::array();
  for (const auto& [where, why] : skipped) j["skipped"].push_back({{"source", where}, {"reason", why}});
  j["warnings"] = nlohmann::json::array();
  for (const auto& [id, why] : warnings) j["warnings"].push_back({{"id", id}, {"reason", why}});
  j["missing"] = {{"tags", missing_tags},
                  {"detections", missing_detections},
                  {"vectors", missing_vectors},
                  {"images", missing_images}};
  j["object_vocabulary_size"] = object_vocabulary.size();
  j["fields"] = field_stats;
  return j;
}

RecordBuildResult build_record(const RecordSources& src, const Palette& palette, const HypernymMap& hypernyms,
                               double detector_confidence, const EncoderState* encoder) {
  RecordBuildResult out;
  KeyframeRecord& r = out.record;
  r.id = src.meta.id;
  r.scene_tags = encode_tags(src.tags);

  auto detections = expand_hypernyms(filter_by_confidence(src.detections, detector_confidence), hypernyms);
  for (const auto& d : detections) {
    for (const auto& l : d.labels) out.labels.push_back(l.name());
  }

  std::vector<ColorCellAssignment> color_cells;
  std::vector<ClassLabel> global_colors;
  double width = src.meta.width, height = src.meta.height;
  std::optional<bool> image_bw;
  if (src.image) {
    try {
      const Image image = decode_image(src.image->string());
      const ColorExtraction colors = extract_colors(image, palette);
      color_cells = colors.cells;
      image_bw = colors.is_bw;
      if (!(width > 0 && height > 0)) {
        width = image.width;
        height = image.height;
      }
      std::vector<bool> used(palette.size(), false);
      for (const auto& cc : color_cells) {
        for (const auto& c : cc.colors) used[*palette.index_of(c.name())] = true;
      }
      for (std::size_t i = 0; i < palette.size(); ++i) {
        if (used[i]) global_colors.push_back(palette[i].name);
      }
      r.image_path = fs::absolute(*src.image).lexically_normal().string();
    } catch (const std::exception& e) {
      out.warning = std::string("image skipped: ") + e.what();
    }
  }
  r.objcolor_bboxes = encode_bboxes(detections, color_cells);
  r.objcolor_classes = encode_classes(detections, global_colors);

  if (src.vector && encoder) {
    if (src.vector->size() == encoder->dim()) {
      r.visual_features = encode_features(*src.vector, *encoder).text();
    } else {
      out.warning = "vector dimension " + std::to_string(src.vector->size()) + " does not match encoder dimension " +
                    std::to_string(encoder->dim());
    }
  }

  r.is_bw = src.meta.is_bw.value_or(image_bw.value_or(false));
  r.aspect = src.meta.aspect.value_or(classify_aspect(width, height));
  return out;
}

IngestReport build_index(const IngestManifest& m, const fs::path& out_dir) {
  IngestReport report;
  const fs::path base = m.metadata.parent_path();

  auto metadata = read_jsonl<KeyframeMetadata>(m.metadata, "metadata", parse_metadata_line, report.skipped);
  std::map<KeyframeId, TagLine> tags;
  std::map<KeyframeId, DetectionLine> detections;
  std::map<KeyframeId, VectorLine> vectors;
  if (m.tags) tags = read_jsonl<TagLine>(*m.tags, "tags", parse_tag_line, report.skipped);
  if (m.detections) {
    detections = read_jsonl<DetectionLine>(*m.detections, "detections", parse_detection_line, report.skipped);
  }
  if (m.vectors) vectors = read_jsonl<VectorLine>(*m.vectors, "vectors", parse_vector_line, report.skipped);

  auto drop_unknown = [&](auto& source, const char* name) {
    for (auto it = source.begin(); it != source.end();) {
      if (!metadata.count(it->first)) {
        report.skipped.emplace_back(name, "id " + it->first.str() + " has no keyframe metadata");
        it = source.erase(it);
      } else {
        ++it;
      }
    }
  };
  drop_unknown(tags, "tags");
  drop_unknown(detections, "detections");
  drop_unknown(vectors, "vectors");

  const Palette palette = m.palette ? Palette::load(m.palette->string()) : Palette::default_palette();
  const HypernymMap hypernyms = m.hypernyms ? load_hypernyms(m.hypernyms->string()) : HypernymMap{};

  std::optional<EncoderState> encoder;
  if (!vectors.empty()) {
    std::vector<FeatureVector> sample;
    const std::size_t dim = vectors.begin()->second.values.size();
    for (const auto& [id, v] : vectors) {
      if (sample.size() >= m.encoder_fit_sample) break;
      if (v.values.size() == dim) sample.push_back(v.values);
    }
    encoder = fit(sample, m.encoder_seed, m.encoder_threshold, m.encoder_scale);
  }

  std::vector<RecordSources> sources;
  sources.reserve(metadata.size());
  for (const auto& [id, meta] : metadata) {
    RecordSources s{meta, {}, {}, std::nullopt, std::nullopt};
    if (auto it = tags.find(id); it != tags.end()) s.tags = it->second.tags;
    else ++report.missing_tags;
    if (auto it = detections.find(id); it != detections.end()) s.detections = it->second.detections;
    else ++report.missing_detections;
    if (auto it = vectors.find(id); it != vectors.end()) s.vector = it->second.values;
    else ++report.missing_vectors;
    s.image = find_image(meta, m, base);
    if (!s.image) ++report.missing_images;
    sources.push_back(std::move(s));
  }

  std::vector<std::optional<RecordBuildResult>> built(sources.size());
  std::vector<std::string> errors(sources.size());
  parallel_for(sources.size(), m.threads, [&](std::size_t i) {
    try {
      built[i] = build_record(sources[i], palette, hypernyms, m.detector_confidence, encoder ? &*encoder : nullptr);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  IndexWriter writer;
  std::set<std::string> vocabulary;
  for (std::size_t i = 0; i < built.size(); ++i) {
    const std::string id = sources[i].meta.id.str();
    if (!built[i]) {
      report.skipped.emplace_back("record " + id, errors[i]);
      continue;
    }
    if (built[i]->warning) report.warnings.emplace_back(id, *built[i]->warning);
    vocabulary.insert(built[i]->labels.begin(), built[i]->labels.end());
    try {
      writer.add(std::move(built[i]->record));
      ++report.records;
    } catch (const std::exception& e) {
      report.skipped.emplace_back("record " + id, e.what());
    }
  }
  if (report.records == 0) throw Error("ingest produced no records");
  report.object_vocabulary.assign(vocabulary.begin(), vocabulary.end());

  const SnapshotPtr snapshot = writer.commit();
  for (int f = 0; f < kFieldCount; ++f) {
    const auto field = static_cast<Field>(f);
    const auto& fi = snapshot->field(field);
    report.field_stats[std::string(field_name(field))] = {{"terms", fi.term_count()},
                                                          {"postings", fi.posting_count()},
                                                          {"sparsity", snapshot->sparsity(field)},
                                                          {"average_length", fi.average_length()}};
  }

  fs::create_directories(out_dir);
  save_snapshot(*snapshot, out_dir);
  if (encoder) encoder->save((out_dir / "encoder.json").string());
  {
    std::ofstream out(out_dir / "palette.txt", std::ios::trunc);
    out << palette.to_text();
  }
  {
    nlohmann::json meta = {{"grid_size", kGridSize}, {"objects", report.object_vocabulary}};
    std::ofstream out(out_dir / "meta.json", std::ios::trunc);
    out << meta.dump(2) << "\n";
  }
  {
    std::ofstream out(out_dir / "ingest_report.json", std::ios::trunc);
    out << report.to_json().dump(2) << "\n";
  }
  return report;
}

}  // namespace kfs
