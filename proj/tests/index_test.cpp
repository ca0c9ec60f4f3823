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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "kfsearch/index.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

namespace {

using kfs::Field;
using kfs::RankerKind;

const Field kTags = Field::kSceneTags;

kfs::SnapshotPtr toy() { return testing_support::build(testing_support::load_records(testing_support::fixture("toy_corpus.jsonl"))); }

std::vector<std::pair<std::uint32_t, double>> pairs(const std::vector<kfs::ScoredDoc>& v) {
  std::vector<std::pair<std::uint32_t, double>> out;
  for (const auto& s : v) out.emplace_back(s.doc, s.score);
  return out;
}

void expect_ranking(const std::vector<kfs::ScoredDoc>& got, const std::vector<std::pair<std::uint32_t, double>>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].doc, want[i].first) << i;
    EXPECT_NEAR(got[i].score, want[i].second, 1e-12) << i;
  }
}

TEST(ToyCorpus, CarScoresByHand) {
  const auto snap = toy();
  const auto q = kfs::make_query_terms(std::string_view("car"));
  expect_ranking(snap->score(kTags, q, kfs::Ranker(RankerKind::kBM25)),
                 {{1, 0.6938146445601612}, {0, 0.6723564596768572}, {3, 0.40383019559538796}});
  expect_ranking(snap->score(kTags, q, kfs::Ranker(RankerKind::kTFIDF)),
                 {{1, 1.2231435513142097}, {0, 1.0406702239586778}, {3, 0.3186799298825614}});
  expect_ranking(snap->score(kTags, q, kfs::Ranker(RankerKind::kTF)), {{0, 2}, {1, 1}, {3, 1}});
  expect_ranking(snap->score(kTags, q, kfs::Ranker(RankerKind::kNormTF)),
                 {{1, 1.0}, {0, 0.8944271909999159}, {3, 0.31622776601683794}});
}

TEST(ToyCorpus, Statistics) {
  const auto snap = toy();
  const auto& f = snap->field(kTags);
  EXPECT_EQ(f.doc_count(), 5u);
  EXPECT_EQ(f.term_count(), 4u);
  EXPECT_DOUBLE_EQ(f.average_length(), 11.0 / 5.0);
  EXPECT_EQ(f.df(*f.find("car")), 3u);
  EXPECT_EQ(f.tf(*f.find("tree"), 3), 3u);
  EXPECT_EQ(f.tf(*f.find("tree"), 0), 0u);
  EXPECT_FALSE(f.find("bus"));
  // 20 cells, 8 non-zero
  EXPECT_DOUBLE_EQ(snap->sparsity(kTags), 12.0 / 20.0);
  EXPECT_EQ(snap->doc_terms(kTags, 0), kfs::QueryTerms({{"car", 2}, {"road", 1}}));
}

TEST(ToyCorpus, UnknownTermsScoreNothing) {
  const auto snap = toy();
  for (auto kind : kfs::kAllRankerKinds) {
    EXPECT_TRUE(snap->score(kTags, kfs::make_query_terms(std::string_view("bus")), kfs::Ranker(kind)).empty());
    EXPECT_TRUE(snap->score(kTags, {}, kfs::Ranker(kind)).empty());
  }
}

TEST(QueryTerms, MergesDuplicates) {
  EXPECT_EQ(kfs::make_query_terms(std::string_view("b a b c a b")), kfs::QueryTerms({{"b", 3}, {"a", 2}, {"c", 1}}));
  EXPECT_TRUE(kfs::make_query_terms(std::string_view("   ")).empty());
}

TEST(Ranker, ParseAndValidate) {
  EXPECT_EQ(kfs::Ranker::parse("normtf").kind, RankerKind::kNormTF);
  EXPECT_EQ(kfs::Ranker::parse("BM25").name(), "BM25");
  EXPECT_EQ(kfs::Ranker::parse("tfidf").name(), "TFIDF");
  EXPECT_THROW(kfs::Ranker::parse("LM"), kfs::InvalidArgument);
  EXPECT_THROW(kfs::Ranker(RankerKind::kBM25, 0.0), kfs::InvalidArgument);
  EXPECT_THROW(kfs::Ranker(RankerKind::kBM25, 1.2, 1.5), kfs::InvalidArgument);
}

std::string random_text(std::mt19937_64& rng, const std::vector<std::string>& vocab, int max_len) {
  std::string out;
  const int n = static_cast<int>(rng() % static_cast<unsigned>(max_len + 1));
  for (int i = 0; i < n; ++i) {
    if (!out.empty()) out += ' ';
    // Skewed choice so that some terms are frequent.
    const std::size_t a = rng() % vocab.size(), b = rng() % vocab.size();
    out += vocab[std::min(a, b)];
  }
  return out;
}

TEST(RankerOracle, RandomCorpora) {
  std::mt19937_64 rng(1234);
  const std::vector<std::string> vocab = {"a1x", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l"};
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<kfs::KeyframeRecord> records(n);
    for (std::size_t i = 0; i < n; ++i) {
      records[i].id = {"v", static_cast<std::uint32_t>(i)};
      records[i].scene_tags = random_text(rng, vocab, 12);
    }
    const auto snap = testing_support::build(records);
    const auto corpus = oracle::field_column(oracle::from_records(records), kTags);
    const std::string qtext = random_text(rng, vocab, 4);
    const auto q = oracle::count_terms(qtext);
    const double k1 = 0.5 + (rng() % 150) / 100.0, b = (rng() % 101) / 100.0;
    for (auto kind : kfs::kAllRankerKinds) {
      const auto want = oracle::rank(corpus, q, kind, k1, b);
      const auto got = snap->score(kTags, kfs::make_query_terms(std::string_view(qtext)), kfs::Ranker(kind, k1, b));
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        ASSERT_NEAR(got[i].score, want[i].second, 1e-6);
        // Order may only differ among near-equal scores.
        if (got[i].doc != want[i].first) {
          ASSERT_NEAR(got[i].score, oracle::score(corpus, want[i].first, q, kind, k1, b), 1e-9);
        }
      }
    }
  }
}

TEST(RankerOracle, ScoreDocsAgreesWithScore) {
  std::mt19937_64 rng(99);
  const auto records = testing_support::random_records(rng, 200);
  const auto snap = testing_support::build(records);
  std::vector<std::uint32_t> all(snap->doc_count());
  for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
  for (Field f : {Field::kObjColorBBoxes, Field::kObjColorClasses, Field::kSceneTags}) {
    const auto q = snap->doc_terms(f, static_cast<std::uint32_t>(rng() % 200));
    for (auto kind : kfs::kAllRankerKinds) {
      const auto ranked = snap->score(f, q, kfs::Ranker(kind));
      const auto dense = snap->score_docs(f, q, kfs::Ranker(kind), all);
      std::size_t nonzero = 0;
      for (const auto& s : ranked) {
        ASSERT_EQ(dense[s.doc], s.score);
      }
      for (double s : dense) nonzero += s != 0;
      EXPECT_LE(nonzero, ranked.size());
      EXPECT_TRUE(std::is_sorted(ranked.begin(), ranked.end(), [](const auto& l, const auto& r) {
        return l.score > r.score || (l.score == r.score && l.doc < r.doc);
      }));
    }
  }
  const std::uint32_t bad[] = {500};
  EXPECT_THROW(snap->score_docs(kTags, {{"park", 1}}, kfs::Ranker(), bad), kfs::InvalidArgument);
}

TEST(Wildcard, ExpandsByDocumentFrequency) {
  std::vector<kfs::KeyframeRecord> records(4);
  const char* tags[] = {"music musician", "music", "music park", "museum"};
  for (std::size_t i = 0; i < 4; ++i) {
    records[i].id = {"w", static_cast<std::uint32_t>(i)};
    records[i].scene_tags = tags[i];
  }
  const auto snap = testing_support::build(records);
  using E = std::vector<std::pair<std::string, std::uint32_t>>;
  EXPECT_EQ(snap->expand_wildcard(kTags, "musi"), E({{"music", 3}, {"musician", 1}}));
  EXPECT_EQ(snap->expand_wildcard(kTags, "mu"), E({{"music", 3}, {"museum", 1}, {"musician", 1}}));
  EXPECT_EQ(snap->expand_wildcard(kTags, "mu", 1), E({{"music", 3}}));
  EXPECT_TRUE(snap->expand_wildcard(kTags, "zz").empty());
  EXPECT_THROW(snap->expand_wildcard(kTags, "m"), kfs::InvalidArgument);
}

TEST(Wildcard, CapsExpansions) {
  std::vector<kfs::KeyframeRecord> records(1);
  records[0].id = {"w", 0};
  for (int i = 0; i < 400; ++i) records[0].scene_tags += "tag" + std::to_string(i) + "x ";
  const auto snap = testing_support::build(records);
  EXPECT_EQ(snap->expand_wildcard(kTags, "ta").size(), kfs::kMaxWildcardExpansions);
}

TEST(Filters, MatchTheOracle) {
  std::mt19937_64 rng(7);
  const auto records = testing_support::random_records(rng, 300);
  const auto snap = testing_support::build(records);
  const auto docs = oracle::from_records(records);
  std::vector<std::uint32_t> all(snap->doc_count());
  for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
  for (int trial = 0; trial < 200; ++trial) {
    const auto spec = testing_support::random_spec(rng);
    const auto compiled = kfs::compile(spec, *snap);
    const auto kept = snap->filter(all, compiled.filters);
    std::vector<std::uint32_t> want;
    for (std::uint32_t d = 0; d < docs.size(); ++d) {
      if (oracle::satisfies_filters(docs[d], spec)) want.push_back(d);
    }
    ASSERT_EQ(kept, want) << spec.to_json().dump();
  }
}

TEST(Filters, FlagsAndTerms) {
  std::vector<kfs::KeyframeRecord> records(3);
  for (std::uint32_t i = 0; i < 3; ++i) records[i].id = {"f", i};
  records[0].objcolor_classes = "dog1";
  records[0].is_bw = true;
  records[1].objcolor_classes = "dog1 dog2";
  records[1].aspect = kfs::Aspect::k16x9;
  records[2].objcolor_classes = "cat1";
  const auto snap = testing_support::build(records);
  const std::vector<std::uint32_t> all = {0, 1, 2};
  kfs::FilterSpec none;
  EXPECT_EQ(snap->filter(all, none), all);
  kfs::FilterSpec cap;
  cap.must_not.push_back({Field::kObjColorClasses, "dog2"});
  EXPECT_EQ(snap->filter(all, cap), std::vector<std::uint32_t>({0, 2}));
  kfs::FilterSpec have;
  have.must_have.push_back({Field::kObjColorClasses, "dog1"});
  have.bw = false;
  EXPECT_EQ(snap->filter(all, have), std::vector<std::uint32_t>({1}));
  kfs::FilterSpec aspect;
  aspect.aspect = kfs::Aspect::k16x9;
  EXPECT_EQ(snap->filter(all, aspect), std::vector<std::uint32_t>({1}));
  EXPECT_TRUE(snap->contains(Field::kObjColorClasses, "cat1", 2));
  EXPECT_FALSE(snap->contains(Field::kObjColorClasses, "cat1", 1));
  EXPECT_FALSE(snap->contains(Field::kObjColorClasses, "unknown", 1));
}

TEST(Writer, RejectsDuplicatesAndBadTokens) {
  kfs::IndexWriter writer;
  kfs::KeyframeRecord r;
  r.id = {"d", 0};
  r.scene_tags = "park";
  EXPECT_EQ(writer.add(r), 0u);
  EXPECT_THROW(writer.add(r), kfs::InvalidArgument);
  kfs::KeyframeRecord bad;
  bad.id = {"d", 1};
  bad.scene_tags = "Park";
  EXPECT_THROW(writer.add(bad), kfs::InvalidArgument);
  bad.scene_tags = "a-b";
  EXPECT_THROW(writer.add(bad), kfs::InvalidArgument);
  EXPECT_EQ(writer.pending(), 1u);
  const auto snap = writer.commit();
  EXPECT_EQ(snap->doc_count(), 1u);
  EXPECT_EQ(writer.pending(), 0u);
  EXPECT_THROW(writer.add(r), kfs::InvalidArgument);
}

TEST(Writer, IncrementalCommitsExtendTheBase) {
  std::mt19937_64 rng(8);
  const auto records = testing_support::random_records(rng, 120);
  kfs::IndexWriter writer;
  for (std::size_t i = 0; i < 60; ++i) writer.add(records[i]);
  const auto first = writer.commit();
  for (std::size_t i = 60; i < 120; ++i) EXPECT_EQ(writer.add(records[i]), i);
  const auto second = writer.commit();
  EXPECT_EQ(first->doc_count(), 60u);
  EXPECT_EQ(second->doc_count(), 120u);
  EXPECT_EQ(second->generation(), first->generation() + 1);

  const auto whole = testing_support::build(records);
  for (std::uint32_t d = 0; d < 120; ++d) {
    ASSERT_EQ(second->id(d), whole->id(d));
    for (int f = 0; f < kfs::kFieldCount; ++f) {
      ASSERT_EQ(second->doc_terms(static_cast<Field>(f), d), whole->doc_terms(static_cast<Field>(f), d));
    }
  }
  const auto q = kfs::make_query_terms(std::string_view("person1 car1 car2"));
  EXPECT_EQ(pairs(second->score(Field::kObjColorClasses, q, kfs::Ranker())),
            pairs(whole->score(Field::kObjColorClasses, q, kfs::Ranker())));
}

TEST(Writer, ScoresDoNotDependOnInsertionOrder) {
  std::mt19937_64 rng(9);
  auto records = testing_support::random_records(rng, 150);
  const auto a = testing_support::build(records);
  std::shuffle(records.begin(), records.end(), rng);
  const auto b = testing_support::build(records);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = a->doc_terms(Field::kObjColorBBoxes, static_cast<std::uint32_t>(rng() % 150));
    for (auto kind : kfs::kAllRankerKinds) {
      std::map<kfs::KeyframeId, double> sa, sb;
      for (const auto& s : a->score(Field::kObjColorBBoxes, q, kfs::Ranker(kind))) sa[a->id(s.doc)] = s.score;
      for (const auto& s : b->score(Field::kObjColorBBoxes, q, kfs::Ranker(kind))) sb[b->id(s.doc)] = s.score;
      ASSERT_EQ(sa.size(), sb.size());
      for (const auto& [id, s] : sa) ASSERT_NEAR(sb.at(id), s, 1e-12);
    }
  }
}

TEST(Index, PublishKeepsOldSnapshotsAlive) {
  kfs::Index index;
  EXPECT_EQ(index.snapshot()->doc_count(), 0u);
  const auto first = toy();
  index.publish(first);
  const auto held = index.snapshot();
  kfs::IndexWriter writer(first);
  kfs::KeyframeRecord r;
  r.id = {"toy", 9};
  r.scene_tags = "car";
  writer.add(r);
  index.publish(writer.commit());
  EXPECT_EQ(held->doc_count(), 5u);
  EXPECT_EQ(index.snapshot()->doc_count(), 6u);
  EXPECT_EQ(index.snapshot()->ordinal(kfs::KeyframeId("toy", 9)), 5u);
  EXPECT_FALSE(held->ordinal(kfs::KeyframeId("toy", 9)));
}

}  // namespace
