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

#include "kfsearch/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kfsearch/parallel.hpp"

namespace kfs {

LoggedQuery parse_log_line(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  LoggedQuery q{QuerySpec::from_json(j.at("query")), {}};
  for (const auto& id : j.at("truth")) q.truth.push_back(id.get<KeyframeId>());
  if (q.truth.empty()) throw InvalidArgument("logged query without ground truth");
  return q;
}

std::vector<LoggedQuery> load_query_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open query log " + path);
  std::vector<LoggedQuery> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (split_tokens(line).empty()) continue;
    try {
      out.push_back(parse_log_line(line));
    } catch (const std::exception& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::optional<std::size_t> first_relevant_rank(const std::vector<ResultEntry>& results,
                                               const std::vector<KeyframeId>& truth) {
  if (truth.empty()) throw InvalidArgument("empty ground truth");
  std::unordered_set<KeyframeId> wanted(truth.begin(), truth.end());
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (wanted.count(results[i].id)) return i + 1;
  }
  return std::nullopt;
}

double reciprocal_rank(const ResultPage& results, const std::vector<KeyframeId>& truth) {
  auto r = first_relevant_rank(results.entries, truth);
  return r ? 1.0 / static_cast<double>(*r) : 0.0;
}

double reciprocal_rank_at(const ResultPage& results, const std::vector<KeyframeId>& truth, std::size_t k) {
  auto r = first_relevant_rank(results.entries, truth);
  return r && *r <= k ? 1.0 / static_cast<double>(*r) : 0.0;
}

double mrr_at_k(const std::vector<std::optional<std::size_t>>& ranks, std::size_t k) {
  if (ranks.empty()) throw InvalidArgument("MRR needs at least one query");
  double sum = 0;
  for (const auto& r : ranks) {
    if (r && *r <= k) sum += 1.0 / static_cast<double>(*r);
  }
  return sum / static_cast<double>(ranks.size());
}

double mrr(const std::vector<std::optional<std::size_t>>& ranks) {
  return mrr_at_k(ranks, static_cast<std::size_t>(-1));
}

std::vector<std::optional<std::size_t>> replay(const Snapshot& snapshot, const std::vector<LoggedQuery>& queries,
                                               const RankerTriple& triple, const PipelineOptions& options,
                                               std::size_t page_size) {
  std::vector<std::optional<std::size_t>> ranks;
  ranks.reserve(queries.size());
  for (const auto& q : queries) {
    ranks.push_back(first_relevant_rank(execute(snapshot, q.query, triple, page_size, options).entries, q.truth));
  }
  return ranks;
}

double mrr(const Snapshot& snapshot, const std::vector<LoggedQuery>& queries, const RankerTriple& triple,
           const PipelineOptions& options) {
  return mrr(replay(snapshot, queries, triple, options));
}

double mrr_at_k(const Snapshot& snapshot, const std::vector<LoggedQuery>& queries, const RankerTriple& triple,
                std::size_t k, const PipelineOptions& options) {
  return mrr_at_k(replay(snapshot, queries, triple, options), k);
}

SweepReport sweep(const Snapshot& snapshot, const std::vector<LoggedQuery>& queries, const SweepOptions& options) {
  SweepReport report;
  report.cutoffs = options.cutoffs;
  std::sort(report.cutoffs.begin(), report.cutoffs.end());
  report.total_queries = queries.size();

  std::vector<std::size_t> runnable;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& q = queries[i];
    for (const auto& id : q.truth) {
      if (!snapshot.ordinal(id)) report.missing_truth.emplace_back(i, id);
    }
    if (q.query.similarity_mode()) {
      ++report.excluded_similarity;
      continue;
    }
    try {
      compile(q.query, snapshot);
    } catch (const InvalidArgument&) {
      ++report.excluded_invalid;
      continue;
    }
    runnable.push_back(i);
  }

  const std::size_t nt = options.triples.size();
  const std::size_t nq = runnable.size();
  std::vector<std::optional<std::size_t>> ranks(nt * nq);
  parallel_for(nt * nq, options.threads, [&](std::size_t job) {
    const std::size_t t = job / nq, qi = job % nq;
    const auto& q = queries[runnable[qi]];
    ranks[job] = first_relevant_rank(
        execute(snapshot, q.query, options.triples[t], options.page_size, options.pipeline).entries, q.truth);
  });

  std::vector<std::size_t> eligible_local;
  for (std::size_t qi = 0; qi < nq; ++qi) {
    bool any = false;
    for (std::size_t t = 0; t < nt && !any; ++t) any = ranks[t * nq + qi].has_value();
    if (any) {
      eligible_local.push_back(qi);
      report.eligible.push_back(runnable[qi]);
    } else {
      ++report.excluded_no_truth;
    }
  }

  for (std::size_t t = 0; t < nt; ++t) {
    TripleResult tr{options.triples[t], 0.0, {}, {}};
    std::vector<std::optional<std::size_t>> triple_ranks;
    for (std::size_t qi : eligible_local) {
      const auto& r = ranks[t * nq + qi];
      triple_ranks.push_back(r);
      tr.reciprocal_ranks.push_back(r ? 1.0 / static_cast<double>(*r) : 0.0);
    }
    if (!triple_ranks.empty()) {
      tr.mrr = mrr(triple_ranks);
      for (std::size_t k : report.cutoffs) tr.mrr_at.push_back(mrr_at_k(triple_ranks, k));
    } else {
      tr.mrr_at.assign(report.cutoffs.size(), 0.0);
    }
    report.results.push_back(std::move(tr));
  }
  std::stable_sort(report.results.begin(), report.results.end(), [](const TripleResult& l, const TripleResult& r) {
    if (l.mrr != r.mrr) return l.mrr > r.mrr;
    return l.triple.name() < r.triple.name();
  });
  return report;
}

namespace {

constexpr const char* kReferenceNote =
    "Published reference (not reproducible on this corpus): best NormTF-BM25-TF MRR 0.023, "
    "worst BM25-NormTF-BM25 MRR 0.004.";

}  // namespace

nlohmann::json SweepReport::to_json() const {
  nlohmann::json j;
  j["reference"] = kReferenceNote;
  j["cutoffs"] = cutoffs;
  j["total_queries"] = total_queries;
  j["eligible_queries"] = eligible.size();
  j["eligible"] = eligible;
  j["excluded"] = {{"similarity", excluded_similarity}, {"no_truth_returned", excluded_no_truth},
                   {"invalid", excluded_invalid}};
  j["missing_truth"] = nlohmann::json::array();
  for (const auto& [qi, id] : missing_truth) j["missing_truth"].push_back({{"query", qi}, {"id", id.str()}});
  j["results"] = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json at = nlohmann::json::object();
    for (std::size_t i = 0; i < cutoffs.size(); ++i) at[std::to_string(cutoffs[i])] = r.mrr_at[i];
    j["results"].push_back(
        {{"triple", r.triple.name()}, {"mrr", r.mrr}, {"mrr_at", at}, {"reciprocal_ranks", r.reciprocal_ranks}});
  }
  return j;
}

std::string SweepReport::to_table() const {
  std::ostringstream out;
  out << "# " << kReferenceNote << "\n";
  out << "# queries: " << total_queries << " total, " << eligible.size() << " eligible (|Q|), "
      << excluded_similarity << " similarity, " << excluded_no_truth << " without truth in any result set, "
      << excluded_invalid << " invalid\n";
  char buf[64];
  out << "rank  triple                    MRR";
  for (auto k : cutoffs) {
    std::snprintf(buf, sizeof buf, "  %9s", ("MRR@" + std::to_string(k)).c_str());
    out << buf;
  }
  out << "\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%4zu  %-20s  %8.5f", i + 1, results[i].triple.name().c_str(), results[i].mrr);
    out << buf;
    for (double v : results[i].mrr_at) {
      std::snprintf(buf, sizeof buf, "  %9.5f", v);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace kfs
