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

// On-disk layout (all integers little-endian), see docs/index-format.md:
//
//   segment_<generation>.kfs
//     magic "KFSSEG01" | u32 version | u64 generation | u32 doc_count
//     doc_count x { str video | u32 segment | u8 is_bw | u8 aspect | str image }
//     4 x field {
//       str name | u32 term_count | term_count x str term
//       u64 offsets[term_count + 1] | u32 docs[postings] | u32 tfs[postings]
//       u32 doc_len[doc_count]
//     }
//     u64 fnv1a-64 of every preceding byte
//   MANIFEST
//     JSON {format, version, generation, segment, doc_count}
//
// str = u32 byte length + bytes.

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "kfsearch/index.hpp"

namespace kfs {

static_assert(std::endian::native == std::endian::little, "segment files are written in host order");

namespace {

constexpr char kMagic[8] = {'K', 'F', 'S', 'S', 'E', 'G', '0', '1'};
constexpr std::uint32_t kSegmentVersion = 1;
constexpr int kManifestVersion = 1;

class Fnv1a {
 public:
  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void raw(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    hash_.update(data, n);
  }
  template <typename T>
  void pod(T v) {
    raw(&v, sizeof v);
  }
  template <typename T>
  void array(const std::vector<T>& v) {
    if (!v.empty()) raw(v.data(), v.size() * sizeof(T));
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void checksum() {
    const std::uint64_t h = hash_.value();
    out_.write(reinterpret_cast<const char*>(&h), sizeof h);
  }

 private:
  std::ostream& out_;
  Fnv1a hash_;
};

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  void raw(void* dst, std::size_t n) {
    if (n > bytes_.size() - pos_) throw Error("segment file truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T pod() {
    T v;
    raw(&v, sizeof v);
    return v;
  }
  template <typename T>
  std::vector<T> array(std::size_t count) {
    if (count > (bytes_.size() - pos_) / sizeof(T)) throw Error("segment file truncated");
    std::vector<T> v(count);
    if (count) raw(v.data(), count * sizeof(T));
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    if (n > bytes_.size() - pos_) throw Error("segment file truncated");
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void verify_checksum() {
    if (bytes_.size() - pos_ != sizeof(std::uint64_t)) throw Error("segment file has trailing bytes");
    Fnv1a h;
    h.update(bytes_.data(), pos_);
    if (pod<std::uint64_t>() != h.value()) throw Error("segment checksum mismatch");
  }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

std::string segment_name(std::uint64_t generation) {
  std::ostringstream s;
  s << "segment_" << std::setw(8) << std::setfill('0') << generation << ".kfs";
  return s.str();
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

class SegmentIo {
 public:
  static void write(const Snapshot& s, std::ostream& out) {
    Writer w(out);
    w.raw(kMagic, sizeof kMagic);
    w.pod(kSegmentVersion);
    w.pod(s.generation_);
    w.pod(s.doc_count());
    for (std::uint32_t d = 0; d < s.doc_count(); ++d) {
      w.str(s.ids_[d].video_id);
      w.pod(s.ids_[d].segment_index);
      w.pod(s.is_bw_[d]);
      w.pod(static_cast<std::uint8_t>(s.aspect_[d]));
      w.str(s.image_paths_[d]);
    }
    for (int f = 0; f < kFieldCount; ++f) {
      const FieldIndex& fi = s.fields_[f];
      w.str(std::string(field_name(static_cast<Field>(f))));
      w.pod(static_cast<std::uint32_t>(fi.terms_.size()));
      for (const auto& t : fi.terms_) w.str(t);
      w.array(fi.post_offsets_);
      w.array(fi.post_docs_);
      w.array(fi.post_tfs_);
      w.array(fi.doc_len_);
    }
    w.checksum();
  }

  static SnapshotPtr read(std::string bytes) {
    Reader r(std::move(bytes));
    char magic[8];
    r.raw(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw Error("not a kfsearch segment");
    const auto version = r.pod<std::uint32_t>();
    if (version != kSegmentVersion) throw Error("unsupported segment version " + std::to_string(version));

    auto snap = std::make_shared<Snapshot>();
    snap->generation_ = r.pod<std::uint64_t>();
    const auto n = r.pod<std::uint32_t>();
    for (std::uint32_t d = 0; d < n; ++d) {
      std::string video = r.str();
      const auto segment = r.pod<std::uint32_t>();
      snap->ids_.emplace_back(std::move(video), segment);
      snap->is_bw_.push_back(r.pod<std::uint8_t>());
      const auto aspect = r.pod<std::uint8_t>();
      if (aspect > static_cast<std::uint8_t>(Aspect::kOther)) throw Error("bad aspect in segment");
      snap->aspect_.push_back(static_cast<Aspect>(aspect));
      snap->image_paths_.push_back(r.str());
    }
    for (std::uint32_t d = 0; d < n; ++d) {
      if (!snap->ordinals_.emplace(snap->ids_[d], d).second) throw Error("duplicate id in segment");
    }
    for (int f = 0; f < kFieldCount; ++f) {
      FieldIndex& fi = snap->fields_[f];
      if (r.str() != field_name(static_cast<Field>(f))) throw Error("segment field order mismatch");
      const auto terms = r.pod<std::uint32_t>();
      fi.terms_.reserve(terms);
      for (std::uint32_t t = 0; t < terms; ++t) fi.terms_.push_back(r.str());
      fi.post_offsets_ = r.array<std::uint64_t>(terms + 1ULL);
      const std::uint64_t postings = fi.post_offsets_.back();
      fi.post_docs_ = r.array<std::uint32_t>(postings);
      fi.post_tfs_ = r.array<std::uint32_t>(postings);
      fi.doc_len_ = r.array<std::uint32_t>(n);
      validate(fi, n);
      for (auto len : fi.doc_len_) fi.total_len_ += len;
      fi.finish();
    }
    r.verify_checksum();
    return snap;
  }

 private:
  static void validate(const FieldIndex& fi, std::uint32_t n) {
    if (fi.post_offsets_.front() != 0) throw Error("corrupt posting offsets");
    if (!std::is_sorted(fi.terms_.begin(), fi.terms_.end()) ||
        std::adjacent_find(fi.terms_.begin(), fi.terms_.end()) != fi.terms_.end()) {
      throw Error("corrupt term dictionary");
    }
    for (std::size_t t = 0; t + 1 < fi.post_offsets_.size(); ++t) {
      if (fi.post_offsets_[t + 1] <= fi.post_offsets_[t]) throw Error("corrupt posting offsets");
      for (auto p = fi.post_offsets_[t]; p < fi.post_offsets_[t + 1]; ++p) {
        if (fi.post_docs_[p] >= n || fi.post_tfs_[p] == 0) throw Error("corrupt posting entry");
        if (p > fi.post_offsets_[t] && fi.post_docs_[p] <= fi.post_docs_[p - 1]) {
          throw Error("posting list not strictly increasing");
        }
      }
    }
  }
};

void save_snapshot(const Snapshot& snapshot, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string segment = segment_name(snapshot.generation());
  {
    const fs::path tmp = dir / (segment + ".tmp");
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    SegmentIo::write(snapshot, out);
    out.close();
    if (!out) throw Error("failed writing " + tmp.string());
    fs::rename(tmp, dir / segment);
  }
  {
    const nlohmann::json manifest = {{"format", "kfsearch-index"},
                                     {"version", kManifestVersion},
                                     {"generation", snapshot.generation()},
                                     {"segment", segment},
                                     {"doc_count", snapshot.doc_count()}};
    const fs::path tmp = dir / "MANIFEST.tmp";
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << manifest.dump(2) << "\n";
    out.close();
    if (!out) throw Error("failed writing " + tmp.string());
    fs::rename(tmp, dir / "MANIFEST");
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with("segment_") && name.ends_with(".kfs") && name != segment) {
      std::error_code ec;
      fs::remove(entry.path(), ec);
    }
  }
}

SnapshotPtr load_snapshot(const std::filesystem::path& dir) {
  const auto manifest = nlohmann::json::parse(slurp(dir / "MANIFEST"));
  if (manifest.value("format", "") != "kfsearch-index") throw Error("not a kfsearch index: " + dir.string());
  if (manifest.value("version", 0) != kManifestVersion) throw Error("unsupported index manifest version");
  const auto segment = manifest.at("segment").get<std::string>();
  if (segment.find('/') != std::string::npos) throw Error("bad segment name in manifest");
  auto snap = SegmentIo::read(slurp(dir / segment));
  if (snap->generation() != manifest.at("generation").get<std::uint64_t>() ||
      snap->doc_count() != manifest.at("doc_count").get<std::uint32_t>()) {
    throw Error("manifest does not match segment " + segment);
  }
  return snap;
}

}  // namespace kfs
