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

#ifndef KFSEARCH_EVAL_HPP_
#define KFSEARCH_EVAL_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "kfsearch/query.hpp"

namespace kfs {

/// A replayable query with the keyframes of its target segment.
struct LoggedQuery {
  QuerySpec query;
  std::vector<KeyframeId> truth;
};

/// One line of a query log: {"query": QuerySpec, "truth": [ids]}.
LoggedQuery parse_log_line(std::string_view line);
std::vector<LoggedQuery> load_query_log(const std::string& path);

inline const std::vector<std::size_t> kDefaultCutoffs = {1, 5, 10, 25, 50, 100, 1000};
inline constexpr std::size_t kEvalPageSize = 1000;

/// 1-based rank of the first truth id in the results, nullopt when absent.
std::optional<std::size_t> first_relevant_rank(const std::vector<ResultEntry>& results,
                                               const std::vector<KeyframeId>& truth);

/// 1 / r for the first relevant rank r, 0 when no truth id is returned.
/// Throws InvalidArgument on an empty truth set.
double reciprocal_rank(const ResultPage& results, const std::vector<KeyframeId>& truth);
/// As reciprocal_rank, but 0 when r > k.
double reciprocal_rank_at(const ResultPage& results, const std::vector<KeyframeId>& truth, std::size_t k);

/// Mean of 1/r over queries (0 for queries without a relevant result).
/// A nullopt entry stands for "no relevant result".
double mrr(const std::vector<std::optional<std::size_t>>& ranks);
double mrr_at_k(const std::vector<std::optional<std::size_t>>& ranks, std::size_t k);

/// First relevant ranks of each query under one triple.
std::vector<std::optional<std::size_t>> replay(const Snapshot& snapshot, const std::vector<LoggedQuery>& queries,
                                               const RankerTriple& triple, const PipelineOptions& options = {},
                                               std::size_t page_size = kEvalPageSize);

double mrr(const Snapshot& snapshot, const std::vector<LoggedQuery>& queries, const RankerTriple& triple,
           const PipelineOptions& options = {});
double mrr_at_k(const Snapshot& snapshot, const std::vector<LoggedQuery>& queries, const RankerTriple& triple,
                std::size_t k, const PipelineOptions& options = {});

struct TripleResult {
  RankerTriple triple;
  double mrr = 0;
  std::vector<double> mrr_at;  // parallel to SweepReport::cutoffs
  std::vector<double> reciprocal_ranks;  // per eligible query
};

struct SweepReport {
  std::vector<std::size_t> cutoffs;
  std::size_t total_queries = 0;
  /// Indices (into the input log) of queries that count toward |Q|.
  std::vector<std::size_t> eligible;
  /// Similarity queries: their output does not depend on the rankers.
  std::size_t excluded_similarity = 0;
  /// Queries for which no triple surfaced any truth id within the page.
  std::size_t excluded_no_truth = 0;
  /// Queries whose spec failed to compile against the index.
  std::size_t excluded_invalid = 0;
  /// Truth ids not present in the index, per query index.
  std::vector<std::pair<std::size_t, KeyframeId>> missing_truth;
  /// Sorted by descending MRR, ties by triple name.
  std::vector<TripleResult> results;

  nlohmann::json to_json() const;
  /// Plain-text ranked table.
  std::string to_table() const;
};

struct SweepOptions {
  std::vector<std::size_t> cutoffs = kDefaultCutoffs;
  std::vector<RankerTriple> triples = RankerTriple::all();
  PipelineOptions pipeline;
  std::size_t page_size = kEvalPageSize;
  /// 0 = hardware concurrency.
  unsigned threads = 0;
};

SweepReport sweep(const Snapshot& snapshot, const std::vector<LoggedQuery>& queries, const SweepOptions& options = {});

}  // namespace kfs

#endif  // KFSEARCH_EVAL_HPP_
