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

#ifndef KFSEARCH_INDEX_HPP_
#define KFSEARCH_INDEX_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kfsearch/core.hpp"

namespace kfs {

enum class RankerKind : std::uint8_t { kBM25 = 0, kTFIDF = 1, kTF = 2, kNormTF = 3 };
inline constexpr std::array<RankerKind, 4> kAllRankerKinds = {RankerKind::kBM25, RankerKind::kTFIDF,
                                                              RankerKind::kTF, RankerKind::kNormTF};

struct Ranker {
  RankerKind kind = RankerKind::kBM25;
  double k1 = 1.2;
  double b = 0.75;

  Ranker() = default;
  Ranker(RankerKind kind, double k1 = 1.2, double b = 0.75);

  std::string_view name() const;
  /// "BM25", "TFIDF", "TF" or "NormTF" (case-insensitive).
  static Ranker parse(std::string_view name);

  bool operator==(const Ranker&) const = default;
};

/// (term, query term frequency) with distinct terms.
using QueryTerms = std::vector<std::pair<std::string, std::uint32_t>>;

/// Merges duplicate terms by summing their frequencies; keeps first-seen order.
QueryTerms make_query_terms(std::span<const std::string> terms);
QueryTerms make_query_terms(std::string_view text);

struct ScoredDoc {
  std::uint32_t doc;
  double score;
  bool operator==(const ScoredDoc&) const = default;
};

/// Immutable inverted index over one text field.
class FieldIndex {
 public:
  FieldIndex() = default;

  std::uint32_t doc_count() const { return static_cast<std::uint32_t>(doc_len_.size()); }
  std::size_t term_count() const { return terms_.size(); }
  std::size_t posting_count() const { return post_docs_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }

  std::optional<std::uint32_t> find(std::string_view term) const;
  std::uint32_t df(std::uint32_t term_id) const;
  std::span<const std::uint32_t> posting_docs(std::uint32_t term_id) const;
  std::span<const std::uint32_t> posting_tfs(std::uint32_t term_id) const;
  /// Term frequency of a term in a document, 0 when absent.
  std::uint32_t tf(std::uint32_t term_id, std::uint32_t doc) const;

  std::uint32_t doc_length(std::uint32_t doc) const { return doc_len_[doc]; }
  double average_length() const;
  /// Forward view: the document's (term id, tf) pairs sorted by term id.
  std::span<const std::uint32_t> doc_term_ids(std::uint32_t doc) const;
  std::span<const std::uint32_t> doc_term_tfs(std::uint32_t doc) const;

  double bm25_idf(std::uint32_t df) const;
  double tfidf_idf(std::uint32_t df) const;
  /// sqrt(sum tf^2)
  double tf_norm(std::uint32_t doc) const { return tf_norm_[doc]; }
  /// sqrt(sum (tf * tfidf_idf)^2)
  double tfidf_norm(std::uint32_t doc) const { return tfidf_norm_[doc]; }

  /// Terms starting with prefix, by descending df then term, at most limit.
  std::vector<std::pair<std::string, std::uint32_t>> expand_prefix(std::string_view prefix,
                                                                   std::size_t limit) const;

 private:
  friend class IndexWriter;
  friend class SegmentIo;
  void finish();

  std::vector<std::string> terms_;
  std::vector<std::uint64_t> post_offsets_{0};
  std::vector<std::uint32_t> post_docs_;
  std::vector<std::uint32_t> post_tfs_;
  std::vector<std::uint32_t> doc_len_;
  std::uint64_t total_len_ = 0;
  // Derived at finish().
  std::vector<std::uint64_t> fwd_offsets_;
  std::vector<std::uint32_t> fwd_terms_;
  std::vector<std::uint32_t> fwd_tfs_;
  std::vector<double> tf_norm_;
  std::vector<double> tfidf_norm_;
};

/// Term conditions and metadata flags applied to candidate sets.
struct FilterSpec {
  struct FieldTerm {
    Field field;
    std::string term;
  };
  std::vector<FieldTerm> must_have;
  std::vector<FieldTerm> must_not;
  std::optional<bool> bw;
  std::optional<Aspect> aspect;

  bool empty() const { return must_have.empty() && must_not.empty() && !bw && !aspect; }
};

inline constexpr std::size_t kMaxWildcardExpansions = 256;

/// A committed, immutable view of the index. Safe to query from any number of
/// threads.
class Snapshot {
 public:
  Snapshot() = default;

  std::uint64_t generation() const { return generation_; }
  std::uint32_t doc_count() const { return static_cast<std::uint32_t>(ids_.size()); }

  const KeyframeId& id(std::uint32_t doc) const { return ids_.at(doc); }
  std::optional<std::uint32_t> ordinal(const KeyframeId& id) const;
  bool is_bw(std::uint32_t doc) const { return is_bw_[doc] != 0; }
  Aspect aspect(std::uint32_t doc) const { return aspect_[doc]; }
  const std::string& image_path(std::uint32_t doc) const { return image_paths_[doc]; }
  const FieldIndex& field(Field f) const { return fields_[static_cast<int>(f)]; }
  /// Reconstructs the term-frequency vector of a document field.
  QueryTerms doc_terms(Field f, std::uint32_t doc) const;

  /// Every document containing at least one query term, by descending score
  /// then ascending ordinal.
  std::vector<ScoredDoc> score(Field f, const QueryTerms& query, const Ranker& ranker) const;
  /// Scores of the given documents (0 when a document has no query term).
  std::vector<double> score_docs(Field f, const QueryTerms& query, const Ranker& ranker,
                                 std::span<const std::uint32_t> docs) const;

  /// Terms with the prefix and their document frequencies, df descending.
  /// Requires prefix.size() >= 2.
  std::vector<std::pair<std::string, std::uint32_t>> expand_wildcard(
      Field f, std::string_view prefix, std::size_t limit = kMaxWildcardExpansions) const;

  bool contains(Field f, std::string_view term, std::uint32_t doc) const;
  bool matches(std::uint32_t doc, const FilterSpec& filter) const;
  /// Candidates (in their given order) that satisfy the filter.
  std::vector<std::uint32_t> filter(std::span<const std::uint32_t> candidates, const FilterSpec& filter) const;

  /// Fraction of zero cells in the doc x term matrix of the field.
  double sparsity(Field f) const;

 private:
  friend class IndexWriter;
  friend class SegmentIo;

  std::uint64_t generation_ = 0;
  std::vector<KeyframeId> ids_;
  std::unordered_map<KeyframeId, std::uint32_t> ordinals_;
  std::vector<std::uint8_t> is_bw_;
  std::vector<Aspect> aspect_;
  std::vector<std::string> image_paths_;
  std::array<FieldIndex, kFieldCount> fields_;
};

using SnapshotPtr = std::shared_ptr<const Snapshot>;

/// Single-writer builder. Documents get ordinals in insertion order after
/// those of the base snapshot.
class IndexWriter {
 public:
  IndexWriter() = default;
  explicit IndexWriter(SnapshotPtr base);

  /// Tokenizes and stages a record. Throws InvalidArgument on a duplicate id or
  /// a token outside [a-z0-9].
  std::uint32_t add(KeyframeRecord record);
  std::size_t pending() const { return pending_.size(); }

  /// Builds a new immutable snapshot from the base plus staged records and
  /// makes it the writer's new base.
  SnapshotPtr commit();

 private:
  SnapshotPtr base_;
  std::vector<KeyframeRecord> pending_;
  std::unordered_map<KeyframeId, std::uint32_t> pending_ids_;
};

/// Holds the currently published snapshot. Readers grab a SnapshotPtr and keep
/// using it while newer snapshots are published.
class Index {
 public:
  Index() : current_(std::make_shared<Snapshot>()) {}
  explicit Index(SnapshotPtr snapshot) : current_(std::move(snapshot)) {}

  SnapshotPtr snapshot() const;
  void publish(SnapshotPtr snapshot);

 private:
  mutable std::mutex mu_;
  SnapshotPtr current_;
};

/// Writes segment_<generation>.kfs and swaps MANIFEST atomically (write to a
/// temporary file, then rename). Older segments are removed afterwards.
void save_snapshot(const Snapshot& snapshot, const std::filesystem::path& dir);
/// Opens the segment named by MANIFEST.
SnapshotPtr load_snapshot(const std::filesystem::path& dir);

}  // namespace kfs

#endif  // KFSEARCH_INDEX_HPP_
