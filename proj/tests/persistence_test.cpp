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

#include <atomic>
#include <fstream>
#include <random>
#include <thread>

#include "kfsearch/index.hpp"
#include "support.hpp"

namespace {

namespace fs = std::filesystem;
using kfs::Field;

void expect_same(const kfs::Snapshot& a, const kfs::Snapshot& b) {
  ASSERT_EQ(a.doc_count(), b.doc_count());
  EXPECT_EQ(a.generation(), b.generation());
  for (std::uint32_t d = 0; d < a.doc_count(); ++d) {
    ASSERT_EQ(a.id(d), b.id(d));
    ASSERT_EQ(b.ordinal(a.id(d)), d);
    ASSERT_EQ(a.is_bw(d), b.is_bw(d));
    ASSERT_EQ(a.aspect(d), b.aspect(d));
    ASSERT_EQ(a.image_path(d), b.image_path(d));
    for (int f = 0; f < kfs::kFieldCount; ++f) {
      ASSERT_EQ(a.doc_terms(static_cast<Field>(f), d), b.doc_terms(static_cast<Field>(f), d));
    }
  }
  for (int f = 0; f < kfs::kFieldCount; ++f) {
    const auto& fa = a.field(static_cast<Field>(f));
    const auto& fb = b.field(static_cast<Field>(f));
    EXPECT_EQ(fa.terms(), fb.terms());
    EXPECT_EQ(fa.posting_count(), fb.posting_count());
    EXPECT_EQ(fa.average_length(), fb.average_length());
  }
}

std::vector<kfs::KeyframeRecord> corpus(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  auto records = testing_support::random_records(rng, n);
  for (std::size_t i = 0; i < records.size(); i += 3) records[i].image_path = "/images/" + records[i].id.str() + ".png";
  return records;
}

std::vector<std::string> segments(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

TEST(Persistence, RoundTrip) {
  testing_support::TempDir dir;
  const auto snap = testing_support::build(corpus(1, 250));
  kfs::save_snapshot(*snap, dir.path());
  const auto loaded = kfs::load_snapshot(dir.path());
  expect_same(*snap, *loaded);
  const auto q = snap->doc_terms(Field::kObjColorBBoxes, 17);
  for (auto kind : kfs::kAllRankerKinds) {
    EXPECT_EQ(snap->score(Field::kObjColorBBoxes, q, kfs::Ranker(kind)),
              loaded->score(Field::kObjColorBBoxes, q, kfs::Ranker(kind)));
  }
}

TEST(Persistence, EmptySnapshot) {
  testing_support::TempDir dir;
  kfs::save_snapshot(kfs::Snapshot(), dir.path());
  EXPECT_EQ(kfs::load_snapshot(dir.path())->doc_count(), 0u);
}

TEST(Persistence, ManifestPointsAtTheNewestGeneration) {
  testing_support::TempDir dir;
  const auto records = corpus(2, 40);
  kfs::IndexWriter writer;
  for (std::size_t i = 0; i < 20; ++i) writer.add(records[i]);
  const auto first = writer.commit();
  kfs::save_snapshot(*first, dir.path());
  EXPECT_EQ(segments(dir.path()), std::vector<std::string>({"MANIFEST", "segment_00000001.kfs"}));

  for (std::size_t i = 20; i < 40; ++i) writer.add(records[i]);
  const auto second = writer.commit();
  kfs::save_snapshot(*second, dir.path());
  EXPECT_EQ(segments(dir.path()), std::vector<std::string>({"MANIFEST", "segment_00000002.kfs"}));
  const auto loaded = kfs::load_snapshot(dir.path());
  EXPECT_EQ(loaded->generation(), 2u);
  expect_same(*second, *loaded);

  std::ifstream in(dir.path() / "MANIFEST");
  const auto manifest = nlohmann::json::parse(in);
  EXPECT_EQ(manifest["segment"], "segment_00000002.kfs");
  EXPECT_EQ(manifest["doc_count"], 40);
}

TEST(Persistence, StaleTemporaryFilesAreIgnored) {
  testing_support::TempDir dir;
  const auto snap = testing_support::build(corpus(3, 10));
  kfs::save_snapshot(*snap, dir.path());
  {
    // A crash between writing the temporary manifest and renaming it.
    std::ofstream out(dir.path() / "MANIFEST.tmp");
    out << "{\"format\": \"kfsearch-index\", \"segment\": \"segment_9.kfs\"";
  }
  expect_same(*snap, *kfs::load_snapshot(dir.path()));
}

class Corruption : public ::testing::Test {
 protected:
  void SetUp() override {
    snap_ = testing_support::build(corpus(4, 60));
    kfs::save_snapshot(*snap_, dir_.path());
    segment_ = dir_.path() / "segment_00000001.kfs";
    std::ifstream in(segment_, std::ios::binary);
    bytes_.assign(std::istreambuf_iterator<char>(in), {});
  }
  void write(const std::string& bytes) {
    std::ofstream out(segment_, std::ios::binary | std::ios::trunc);
    out << bytes;
  }

  testing_support::TempDir dir_;
  kfs::SnapshotPtr snap_;
  fs::path segment_;
  std::string bytes_;
};

TEST_F(Corruption, FlippedBytesAreDetected) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::string bad = bytes_;
    bad[rng() % bad.size()] ^= static_cast<char>(1 + rng() % 255);
    write(bad);
    EXPECT_THROW(kfs::load_snapshot(dir_.path()), kfs::Error);
  }
}

TEST_F(Corruption, TruncationIsDetected) {
  for (std::size_t keep : {std::size_t{0}, std::size_t{4}, bytes_.size() / 2, bytes_.size() - 1}) {
    write(bytes_.substr(0, keep));
    EXPECT_THROW(kfs::load_snapshot(dir_.path()), kfs::Error) << keep;
  }
  write(bytes_ + "x");
  EXPECT_THROW(kfs::load_snapshot(dir_.path()), kfs::Error);
}

TEST_F(Corruption, ManifestProblems) {
  fs::remove(dir_.path() / "MANIFEST");
  EXPECT_THROW(kfs::load_snapshot(dir_.path()), kfs::Error);
  auto manifest = [&](const std::string& text) {
    std::ofstream out(dir_.path() / "MANIFEST", std::ios::trunc);
    out << text;
  };
  manifest(R"({"format": "other", "version": 1, "segment": "segment_00000001.kfs", "generation": 1, "doc_count": 60})");
  EXPECT_THROW(kfs::load_snapshot(dir_.path()), kfs::Error);
  manifest(R"({"format": "kfsearch-index", "version": 1, "segment": "../x.kfs", "generation": 1, "doc_count": 60})");
  EXPECT_THROW(kfs::load_snapshot(dir_.path()), kfs::Error);
  manifest(R"({"format": "kfsearch-index", "version": 1, "segment": "segment_00000001.kfs", "generation": 1, "doc_count": 61})");
  EXPECT_THROW(kfs::load_snapshot(dir_.path()), kfs::Error);
  manifest(R"({"format": "kfsearch-index", "version": 1, "segment": "segment_00000001.kfs", "generation": 1, "doc_count": 60})");
  expect_same(*snap_, *kfs::load_snapshot(dir_.path()));
}

TEST(SnapshotIsolation, ReadersSeeAConsistentView) {
  const auto records = corpus(6, 400);
  kfs::IndexWriter writer;
  for (std::size_t i = 0; i < 100; ++i) writer.add(records[i]);
  kfs::Index index(writer.commit());
  const auto query = kfs::make_query_terms(std::string_view("person1 car1 dog1 red"));

  std::atomic<bool> done{false};
  std::atomic<int> failures{0}, reads{0};
  std::vector<std::thread> readers;
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&] {
      while (!done.load()) {
        const auto snap = index.snapshot();
        const auto before = snap->score(Field::kObjColorClasses, query, kfs::Ranker());
        const std::uint32_t n = snap->doc_count();
        for (const auto& s : before) {
          if (s.doc >= n) ++failures;
        }
        if (snap->score(Field::kObjColorClasses, query, kfs::Ranker()) != before) ++failures;
        if (n % 100 != 0) ++failures;
        ++reads;
      }
    });
  }
  for (std::size_t start = 100; start < 400; start += 100) {
    for (std::size_t i = start; i < start + 100; ++i) writer.add(records[i]);
    index.publish(writer.commit());
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  while (reads.load() < 20) std::this_thread::yield();
  done = true;
  for (auto& t : readers) t.join();
  EXPECT_EQ(failures.load(), 0);
  EXPECT_EQ(index.snapshot()->doc_count(), 400u);
}

}  // namespace
