// Copyright 2026 The permdebias Authors.
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
#include <filesystem>
#include <fstream>
#include <sstream>

#include "permdebias/ingest.h"
#include "support/fixtures.h"

namespace permdebias {
namespace {

std::filesystem::path temp_path(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(LoadDatasetTest, WellFormedFile) {
  const auto path = temp_path("permdebias_ingest_ok.jsonl");
  {
    std::ofstream out(path);
    for (int q = 1; q <= 3; ++q) {
      out << R"({"query_id":"q)" << q
          << R"(","query":"who?","answer":"x","passages":[{"id":"a","text":"t","rank":1,"score":0.5},{"id":"b","text":"u","rank":2}],"gold_ids":["a"]})"
          << "\n";
    }
  }
  const auto r = load_dataset(path);
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_TRUE(r.issues.empty());
  EXPECT_EQ(r.records[2].query.id, "q3");
  EXPECT_EQ(r.records[0].passages[0].retriever_score, 0.5);
  EXPECT_FALSE(r.records[0].passages[1].retriever_score.has_value());
  EXPECT_EQ(r.records[0].query.gold_passage_ids, std::vector<std::string>{"a"});
}

TEST(LoadDatasetTest, InvalidLinesAreReportedWithLineNumbers) {
  const auto path = temp_path("permdebias_ingest_bad.jsonl");
  {
    std::ofstream out(path);
    out << R"({"query_id":"q1","query":"a","passages":[{"id":"a","text":"t","rank":1}]})" << "\n";
    out << R"({"query_id":"q2","query":"a","passages":[{"id":"a","text":"t","rank":1},{"id":"a","text":"t","rank":2}]})" << "\n";
    out << "{oops\n";
    out << R"({"query_id":"q4","passages":[]})" << "\n";
    out << R"({"query_id":"q5","query":"b","passages":[{"id":"z","text":"t","rank":1}]})" << "\n";
  }
  const auto r = load_dataset(path);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[1].query.id, "q5");
  ASSERT_EQ(r.issues.size(), 3u);
  EXPECT_EQ(r.issues[0].line, 2);
  EXPECT_NE(r.issues[0].message.find("duplicate passage id"), std::string::npos);
  EXPECT_EQ(r.issues[1].line, 3);
  EXPECT_EQ(r.issues[2].line, 4);
  EXPECT_THROW(load_dataset(path, /*strict=*/true), ValidationError);
}

TEST(LoadDatasetTest, EmptyAndMissingFiles) {
  const auto path = temp_path("permdebias_ingest_empty.jsonl");
  { std::ofstream out(path); }
  EXPECT_TRUE(load_dataset(path).records.empty());
  EXPECT_THROW(load_dataset(temp_path("permdebias_missing.jsonl")), Error);
}

TEST(SerializeTest, RoundTripIsIdentity) {
  const auto corpus = make_synth_corpus(5, 4, {}, 3);
  const auto path = temp_path("permdebias_roundtrip.jsonl");
  write_dataset(path, corpus.dataset);
  const auto back = load_dataset(path);
  ASSERT_EQ(back.records.size(), corpus.dataset.size());
  for (size_t i = 0; i < back.records.size(); ++i) {
    EXPECT_EQ(to_json(back.records[i]), to_json(corpus.dataset[i]));
  }
  for (const char* key : {"query_id", "query", "answer", "passages", "gold_ids"}) {
    EXPECT_TRUE(to_json(corpus.dataset[0]).contains(key)) << key;
  }
}

TEST(SynthTest, CountsAndDeterminism) {
  const auto a = make_synth_corpus(10, 5, {}, 1);
  EXPECT_EQ(a.dataset.size(), 10u);
  EXPECT_EQ(a.truth.size(), 10u);
  const auto d1 = temp_path("permdebias_synth_a.jsonl");
  const auto t1 = temp_path("permdebias_synth_a_truth.jsonl");
  const auto d2 = temp_path("permdebias_synth_b.jsonl");
  const auto t2 = temp_path("permdebias_synth_b_truth.jsonl");
  write_dataset(d1, a.dataset);
  write_truth(t1, a.truth);
  const auto b = make_synth_corpus(10, 5, {}, 1);
  write_dataset(d2, b.dataset);
  write_truth(t2, b.truth);
  EXPECT_EQ(slurp(d1), slurp(d2));
  EXPECT_EQ(slurp(t1), slurp(t2));
  EXPECT_NE(slurp(d1), "");
  const auto truth = load_truth(t1);
  ASSERT_EQ(truth.size(), 10u);
  EXPECT_EQ(truth[3].u_star, a.truth[3].u_star);
}

TEST(SynthTest, TruthIsInternallyConsistent) {
  SynthTemplate tmpl;
  const auto c = make_synth_corpus(50, 6, tmpl, 5);
  for (size_t q = 0; q < c.truth.size(); ++q) {
    const auto& t = c.truth[q];
    EXPECT_TRUE(validate_retrieval_list(c.dataset[q]).ok());
    EXPECT_NO_THROW(oracle_from_truth(t, 0.0, 0));
    for (size_t j = 1; j < t.a_star.size(); ++j) {
      EXPECT_GE(t.a_star[j - 1] - t.a_star[j], tmpl.min_bias_gap - 1e-12);
    }
    for (size_t i = 1; i < t.argsort.size(); ++i) {
      EXPECT_GT(t.u_star[t.argsort[i - 1] - 1], t.u_star[t.argsort[i] - 1]);
    }
    auto sorted = t.u_star;
    std::sort(sorted.begin(), sorted.end());
    for (size_t i = 1; i < sorted.size(); ++i) {
      EXPECT_GE(sorted[i] - sorted[i - 1], tmpl.min_utility_gap - 1e-12);
    }
    const auto& gold = c.dataset[q].query.gold_passage_ids;
    ASSERT_EQ(gold.size(), 1u);
    EXPECT_EQ(gold[0], c.dataset[q].passages[t.argsort[0] - 1].id);
  }
}

TEST(SynthTest, LargeNShrinksBiasGap) {
  const auto c = make_synth_corpus(3, 10, {}, 2);
  for (const auto& t : c.truth) {
    EXPECT_NO_THROW(oracle_from_truth(t, 0.0, 0));
    for (size_t j = 1; j < t.a_star.size(); ++j) {
      EXPECT_GT(t.a_star[j - 1], t.a_star[j]);
    }
  }
  EXPECT_THROW(make_synth_corpus(0, 3, {}, 1), Error);
}

}  // namespace
}  // namespace permdebias
