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

#include "kfsearch/index.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

namespace kfs {

Ranker::Ranker(RankerKind k, double k1_, double b_) : kind(k), k1(k1_), b(b_) {
  if (!(k1 > 0)) throw InvalidArgument("BM25 k1 must be positive");
  if (!(b >= 0 && b <= 1)) throw InvalidArgument("BM25 b must be in [0, 1]");
}

std::string_view Ranker::name() const {
  switch (kind) {
    case RankerKind::kBM25:
      return "BM25";
    case RankerKind::kTFIDF:
      return "TFIDF";
    case RankerKind::kTF:
      return "TF";
    case RankerKind::kNormTF:
      return "NormTF";
  }
  return "";
}

Ranker Ranker::parse(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "bm25") return Ranker(RankerKind::kBM25);
  if (lower == "tfidf") return Ranker(RankerKind::kTFIDF);
  if (lower == "tf") return Ranker(RankerKind::kTF);
  if (lower == "normtf") return Ranker(RankerKind::kNormTF);
  throw InvalidArgument("unknown ranker '" + std::string(name) + "'");
}

QueryTerms make_query_terms(std::span<const std::string> terms) {
  QueryTerms out;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& t : terms) {
    auto [it, fresh] = slot.try_emplace(t, out.size());
    if (fresh) out.emplace_back(t, 1);
    else ++out[it->second].second;
  }
  return out;
}

QueryTerms make_query_terms(std::string_view text) {
  std::vector<std::string> terms;
  for (auto tok : split_tokens(text)) terms.emplace_back(tok);
  return make_query_terms(terms);
}

// ---------------------------------------------------------------------------
// FieldIndex

std::optional<std::uint32_t> FieldIndex::find(std::string_view term) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), term);
  if (it == terms_.end() || *it != term) return std::nullopt;
  return static_cast<std::uint32_t>(it - terms_.begin());
}

std::uint32_t FieldIndex::df(std::uint32_t term_id) const {
  return static_cast<std::uint32_t>(post_offsets_[term_id + 1] - post_offsets_[term_id]);
}

std::span<const std::uint32_t> FieldIndex::posting_docs(std::uint32_t term_id) const {
  return {post_docs_.data() + post_offsets_[term_id], df(term_id)};
}

std::span<const std::uint32_t> FieldIndex::posting_tfs(std::uint32_t term_id) const {
  return {post_tfs_.data() + post_offsets_[term_id], df(term_id)};
}

std::uint32_t FieldIndex::tf(std::uint32_t term_id, std::uint32_t doc) const {
  auto ids = doc_term_ids(doc);
  auto it = std::lower_bound(ids.begin(), ids.end(), term_id);
  if (it == ids.end() || *it != term_id) return 0;
  return doc_term_tfs(doc)[static_cast<std::size_t>(it - ids.begin())];
}

double FieldIndex::average_length() const {
  return doc_len_.empty() ? 0.0 : static_cast<double>(total_len_) / static_cast<double>(doc_len_.size());
}

std::span<const std::uint32_t> FieldIndex::doc_term_ids(std::uint32_t doc) const {
  return {fwd_terms_.data() + fwd_offsets_[doc], static_cast<std::size_t>(fwd_offsets_[doc + 1] - fwd_offsets_[doc])};
}

std::span<const std::uint32_t> FieldIndex::doc_term_tfs(std::uint32_t doc) const {
  return {fwd_tfs_.data() + fwd_offsets_[doc], static_cast<std::size_t>(fwd_offsets_[doc + 1] - fwd_offsets_[doc])};
}

double FieldIndex::bm25_idf(std::uint32_t df) const {
  const double n = doc_count();
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double FieldIndex::tfidf_idf(std::uint32_t df) const {
  const double n = doc_count();
  return 1.0 + std::log(n / (1.0 + df));
}

std::vector<std::pair<std::string, std::uint32_t>> FieldIndex::expand_prefix(std::string_view prefix,
                                                                             std::size_t limit) const {
  std::vector<std::pair<std::string, std::uint32_t>> out;
  for (auto it = std::lower_bound(terms_.begin(), terms_.end(), prefix);
       it != terms_.end() && it->compare(0, prefix.size(), prefix) == 0; ++it) {
    out.emplace_back(*it, df(static_cast<std::uint32_t>(it - terms_.begin())));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.second > r.second; });
  if (out.size() > limit) out.resize(limit);
  return out;
}

void FieldIndex::finish() {
  const std::uint32_t n = doc_count();
  fwd_offsets_.assign(n + 1, 0);
  for (std::uint32_t d : post_docs_) ++fwd_offsets_[d + 1];
  for (std::uint32_t d = 0; d < n; ++d) fwd_offsets_[d + 1] += fwd_offsets_[d];
  fwd_terms_.assign(post_docs_.size(), 0);
  fwd_tfs_.assign(post_docs_.size(), 0);
  std::vector<std::uint64_t> cursor(fwd_offsets_.begin(), fwd_offsets_.end() - 1);
  tf_norm_.assign(n, 0.0);
  tfidf_norm_.assign(n, 0.0);
  for (std::uint32_t t = 0; t < terms_.size(); ++t) {
    const double idf = tfidf_idf(df(t));
    for (std::uint64_t p = post_offsets_[t]; p < post_offsets_[t + 1]; ++p) {
      const std::uint32_t d = post_docs_[p];
      const double tf = post_tfs_[p];
      fwd_terms_[cursor[d]] = t;
      fwd_tfs_[cursor[d]] = post_tfs_[p];
      ++cursor[d];
      tf_norm_[d] += tf * tf;
      tfidf_norm_[d] += (tf * idf) * (tf * idf);
    }
  }
  for (std::uint32_t d = 0; d < n; ++d) {
    tf_norm_[d] = std::sqrt(tf_norm_[d]);
    tfidf_norm_[d] = std::sqrt(tfidf_norm_[d]);
  }
}

// ---------------------------------------------------------------------------
// Scoring

namespace {

struct ResolvedTerm {
  std::uint32_t id;
  double qtf;
  double idf;  // ranker-specific
};

struct ResolvedQuery {
  std::vector<ResolvedTerm> terms;
  double query_norm = 0;  // over all query terms, present or not
};

ResolvedQuery resolve(const FieldIndex& fi, const QueryTerms& query, const Ranker& ranker) {
  ResolvedQuery out;
  double sq = 0;
  for (const auto& [term, qtf] : query) {
    sq += static_cast<double>(qtf) * qtf;
    auto id = fi.find(term);
    if (!id || qtf == 0) continue;
    double idf = 1.0;
    if (ranker.kind == RankerKind::kBM25) idf = fi.bm25_idf(fi.df(*id));
    if (ranker.kind == RankerKind::kTFIDF) {
      const double w = fi.tfidf_idf(fi.df(*id));
      idf = w * w;
    }
    out.terms.push_back({*id, static_cast<double>(qtf), idf});
  }
  out.query_norm = std::sqrt(sq);
  return out;
}

// One term's additive contribution before per-document normalization.
inline double contribution(const FieldIndex& fi, const Ranker& ranker, const ResolvedTerm& t, double tf,
                           std::uint32_t doc, double avg_len) {
  switch (ranker.kind) {
    case RankerKind::kBM25: {
      const double norm = ranker.k1 * (1.0 - ranker.b + ranker.b * fi.doc_length(doc) / avg_len);
      return t.qtf * t.idf * tf * (ranker.k1 + 1.0) / (tf + norm);
    }
    case RankerKind::kTFIDF:
      return t.qtf * tf * t.idf;
    case RankerKind::kTF:
    case RankerKind::kNormTF:
      return t.qtf * tf;
  }
  return 0;
}

inline double finalize(const FieldIndex& fi, const Ranker& ranker, const ResolvedQuery& q, double acc,
                       std::uint32_t doc) {
  switch (ranker.kind) {
    case RankerKind::kNormTF: {
      const double denom = q.query_norm * fi.tf_norm(doc);
      return denom > 0 ? acc / denom : 0.0;
    }
    case RankerKind::kTFIDF: {
      const double denom = fi.tfidf_norm(doc);
      return denom > 0 ? acc / denom : 0.0;
    }
    default:
      return acc;
  }
}

}  // namespace

std::optional<std::uint32_t> Snapshot::ordinal(const KeyframeId& id) const {
  auto it = ordinals_.find(id);
  if (it == ordinals_.end()) return std::nullopt;
  return it->second;
}

QueryTerms Snapshot::doc_terms(Field f, std::uint32_t doc) const {
  const auto& fi = field(f);
  QueryTerms out;
  auto ids = fi.doc_term_ids(doc);
  auto tfs = fi.doc_term_tfs(doc);
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace_back(fi.terms()[ids[i]], tfs[i]);
  return out;
}

std::vector<ScoredDoc> Snapshot::score(Field f, const QueryTerms& query, const Ranker& ranker) const {
  const auto& fi = field(f);
  const ResolvedQuery q = resolve(fi, query, ranker);
  if (q.terms.empty()) return {};
  const double avg_len = fi.average_length();

  std::vector<double> acc(fi.doc_count(), 0.0);
  std::vector<std::uint8_t> seen(fi.doc_count(), 0);
  std::vector<std::uint32_t> touched;
  for (const auto& t : q.terms) {
    auto docs = fi.posting_docs(t.id);
    auto tfs = fi.posting_tfs(t.id);
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const std::uint32_t d = docs[i];
      if (!seen[d]) {
        seen[d] = 1;
        touched.push_back(d);
      }
      acc[d] += contribution(fi, ranker, t, tfs[i], d, avg_len);
    }
  }

  std::vector<ScoredDoc> out;
  out.reserve(touched.size());
  for (std::uint32_t d : touched) out.push_back({d, finalize(fi, ranker, q, acc[d], d)});
  std::sort(out.begin(), out.end(), [](const ScoredDoc& l, const ScoredDoc& r) {
    return l.score != r.score ? l.score > r.score : l.doc < r.doc;
  });
  return out;
}

std::vector<double> Snapshot::score_docs(Field f, const QueryTerms& query, const Ranker& ranker,
                                         std::span<const std::uint32_t> docs) const {
  const auto& fi = field(f);
  const ResolvedQuery q = resolve(fi, query, ranker);
  const double avg_len = fi.average_length();
  std::vector<double> out(docs.size(), 0.0);
  if (q.terms.empty()) return out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const std::uint32_t d = docs[i];
    if (d >= fi.doc_count()) throw InvalidArgument("document ordinal out of range");
    double acc = 0;
    bool any = false;
    for (const auto& t : q.terms) {
      const std::uint32_t tf = fi.tf(t.id, d);
      if (tf == 0) continue;
      any = true;
      acc += contribution(fi, ranker, t, tf, d, avg_len);
    }
    out[i] = any ? finalize(fi, ranker, q, acc, d) : 0.0;
  }
  return out;
}

std::vector<std::pair<std::string, std::uint32_t>> Snapshot::expand_wildcard(Field f, std::string_view prefix,
                                                                             std::size_t limit) const {
  if (prefix.size() < 2) throw InvalidArgument("wildcard prefix must have at least 2 characters");
  return field(f).expand_prefix(prefix, limit);
}

bool Snapshot::contains(Field f, std::string_view term, std::uint32_t doc) const {
  const auto& fi = field(f);
  auto id = fi.find(term);
  if (!id) return false;
  auto docs = fi.posting_docs(*id);
  return std::binary_search(docs.begin(), docs.end(), doc);
}

bool Snapshot::matches(std::uint32_t doc, const FilterSpec& spec) const {
  if (spec.bw && is_bw(doc) != *spec.bw) return false;
  if (spec.aspect && aspect(doc) != *spec.aspect) return false;
  for (const auto& ft : spec.must_have) {
    if (!contains(ft.field, ft.term, doc)) return false;
  }
  for (const auto& ft : spec.must_not) {
    if (contains(ft.field, ft.term, doc)) return false;
  }
  return true;
}

std::vector<std::uint32_t> Snapshot::filter(std::span<const std::uint32_t> candidates,
                                            const FilterSpec& spec) const {
  std::vector<std::uint32_t> out;
  out.reserve(candidates.size());
  for (std::uint32_t d : candidates) {
    if (matches(d, spec)) out.push_back(d);
  }
  return out;
}

double Snapshot::sparsity(Field f) const {
  const auto& fi = field(f);
  const double cells = static_cast<double>(fi.doc_count()) * static_cast<double>(fi.term_count());
  if (cells == 0) return 1.0;
  return 1.0 - static_cast<double>(fi.posting_count()) / cells;
}

// ---------------------------------------------------------------------------
// IndexWriter

IndexWriter::IndexWriter(SnapshotPtr base) : base_(std::move(base)) {}

std::uint32_t IndexWriter::add(KeyframeRecord record) {
  const std::uint32_t base_count = base_ ? base_->doc_count() : 0;
  if ((base_ && base_->ordinal(record.id)) || pending_ids_.count(record.id)) {
    throw InvalidArgument("duplicate keyframe id " + record.id.str());
  }
  for (int f = 0; f < kFieldCount; ++f) {
    for (auto tok : split_tokens(record.field(static_cast<Field>(f)))) {
      if (!is_valid_token(tok)) {
        throw InvalidArgument("token '" + std::string(tok) + "' in " +
                              std::string(field_name(static_cast<Field>(f))) + " of " + record.id.str() +
                              " is outside [a-z0-9]");
      }
    }
  }
  const auto ordinal = static_cast<std::uint32_t>(base_count + pending_.size());
  pending_ids_.emplace(record.id, ordinal);
  pending_.push_back(std::move(record));
  return ordinal;
}

SnapshotPtr IndexWriter::commit() {
  auto snap = std::make_shared<Snapshot>();
  const Snapshot empty;
  const Snapshot& base = base_ ? *base_ : empty;
  snap->generation_ = base.generation_ + 1;

  snap->ids_ = base.ids_;
  snap->is_bw_ = base.is_bw_;
  snap->aspect_ = base.aspect_;
  snap->image_paths_ = base.image_paths_;
  for (const auto& r : pending_) {
    snap->ids_.push_back(r.id);
    snap->is_bw_.push_back(r.is_bw ? 1 : 0);
    snap->aspect_.push_back(r.aspect);
    snap->image_paths_.push_back(r.image_path);
  }
  snap->ordinals_.reserve(snap->ids_.size());
  for (std::uint32_t d = 0; d < snap->ids_.size(); ++d) snap->ordinals_.emplace(snap->ids_[d], d);

  const std::uint32_t base_count = base.doc_count();
  for (int f = 0; f < kFieldCount; ++f) {
    const FieldIndex& old = base.fields_[f];
    FieldIndex& fi = snap->fields_[f];

    std::map<std::string, std::vector<std::pair<std::uint32_t, std::uint32_t>>> postings;
    for (std::uint32_t t = 0; t < old.term_count(); ++t) {
      auto docs = old.posting_docs(t);
      auto tfs = old.posting_tfs(t);
      auto& list = postings.emplace_hint(postings.end(), old.terms()[t], 0)->second;
      list.reserve(docs.size());
      for (std::size_t i = 0; i < docs.size(); ++i) list.emplace_back(docs[i], tfs[i]);
    }
    fi.doc_len_ = old.doc_len_;
    fi.total_len_ = old.total_len_;

    for (std::size_t i = 0; i < pending_.size(); ++i) {
      const auto doc = static_cast<std::uint32_t>(base_count + i);
      std::map<std::string_view, std::uint32_t> counts;
      std::uint32_t len = 0;
      for (auto tok : split_tokens(pending_[i].field(static_cast<Field>(f)))) {
        ++counts[tok];
        ++len;
      }
      for (const auto& [tok, tf] : counts) postings[std::string(tok)].emplace_back(doc, tf);
      fi.doc_len_.push_back(len);
      fi.total_len_ += len;
    }

    fi.terms_.reserve(postings.size());
    fi.post_offsets_.assign(1, 0);
    for (auto& [term, list] : postings) {
      fi.terms_.push_back(term);
      for (const auto& [d, tf] : list) {
        fi.post_docs_.push_back(d);
        fi.post_tfs_.push_back(tf);
      }
      fi.post_offsets_.push_back(fi.post_docs_.size());
    }
    fi.finish();
  }

  pending_.clear();
  pending_ids_.clear();
  base_ = snap;
  return snap;
}

// ---------------------------------------------------------------------------
// Index

SnapshotPtr Index::snapshot() const {
  std::lock_guard lock(mu_);
  return current_;
}

void Index::publish(SnapshotPtr snapshot) {
  std::lock_guard lock(mu_);
  current_ = std::move(snapshot);
}

}  // namespace kfs
