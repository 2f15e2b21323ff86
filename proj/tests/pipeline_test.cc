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
#include <set>

#include "permdebias/eval.h"
#include "permdebias/pipeline.h"
#include "permdebias/sim_backend.h"
#include "support/fixtures.h"

namespace permdebias {
namespace {

using testing::make_list;
using testing::make_oracle;

// Generates a scripted answer per call.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> answers)
      : answers_(std::move(answers)) {}
  std::string model_tag() const override { return "scripted"; }
  ContextScore score_context(const Query&, std::span<const Passage>) override {
    return {{0.0}, {}};
  }
  std::string generate(const Query&, std::span<const Passage> ctx) override {
    // Keyed on the first passage so concurrent calls stay deterministic.
    return answers_[static_cast<size_t>(ctx.front().retriever_rank - 1) %
                    answers_.size()];
  }
  TokenDistribution first_token_distribution(
      const Query&, std::span<const Passage>) override {
    return {};
  }

 private:
  std::vector<std::string> answers_;
};

TEST(PidRerankTest, RecoversUtilityOrder) {
  SimulatedBackend sim(make_oracle({0.5, 0.3, 0.2}, {3.0, 1.0, 2.0}));
  const auto r = pid_rerank(sim, make_list(3), RerankStrategy{});
  EXPECT_EQ(r.ranking.ids, (std::vector<std::string>{"p1", "p3", "p2"}));
  EXPECT_EQ(r.ranking.provenance, "pid:random");
  EXPECT_EQ(r.scores.size(), 6u);  // 3N = 9 capped at 3!
  EXPECT_LT(r.model.residual_sse, 1e-8);
}

TEST(PidRerankTest, SinglePassage) {
  SimulatedBackend sim(make_oracle({1.0}, {2.0}));
  const auto r = pid_rerank(sim, make_list(1), RerankStrategy{});
  EXPECT_EQ(r.ranking.ids, std::vector<std::string>{"p1"});
}

TEST(PidRerankTest, ConstantUtilitiesGiveRetrieverOrderFlaggedDegenerate) {
  SimulatedBackend sim(make_oracle({0.4, 0.3, 0.2, 0.1}, {2, 2, 2, 2}));
  const auto list = make_list(4);
  const auto r = pid_rerank(sim, list, RerankStrategy{});
  EXPECT_EQ(r.ranking.ids, retriever_ranking(list, "").ids);
  EXPECT_TRUE(r.ranking.degenerate);
}

TEST(PidRerankTest, EveryStrategyReturnsAPermutationOfTheIds) {
  SimulatedBackend sim(
      make_oracle({0.3, 0.25, 0.2, 0.15, 0.1}, {1, 5, 2, 4, 3}, 0.05, 1));
  const auto list = make_list(5, "q1", {0.5, 0.2, 0.15, 0.1, 0.05});
  std::vector<RerankStrategy> strategies(4);
  strategies[1].design = DesignKind::kCyclic;
  strategies[2].design = DesignKind::kPrunedCyclic;
  strategies[2].prune_length = 3;
  strategies[3].design = DesignKind::kVariablePruned;
  strategies[3].tau = 0.7;
  const std::set<std::string> ids = {"p1", "p2", "p3", "p4", "p5"};
  for (const auto& st : strategies) {
    const auto r = pid_rerank(sim, list, st);
    EXPECT_EQ(std::set<std::string>(r.ranking.ids.begin(), r.ranking.ids.end()),
              ids)
        << strategy_name(st);
    EXPECT_EQ(r.ranking.size(), 5);
  }
  EXPECT_EQ(strategy_name(strategies[2]), "pid:pruned(L=3)");
  EXPECT_EQ(strategy_name(strategies[3]), "pid:variable(tau=0.7)");
}

TEST(PidRerankTest, Deterministic) {
  SimulatedBackend sim(
      make_oracle({0.3, 0.25, 0.2, 0.15, 0.1}, {1, 5, 2, 4, 3}, 0.2, 4));
  RerankStrategy st;
  st.seed = 12;
  st.solver.seed = 5;
  const auto a = pid_rerank(sim, make_list(5), st);
  const auto b = pid_rerank(sim, make_list(5), st);
  EXPECT_EQ(a.ranking, b.ranking);
  EXPECT_EQ(a.model.bias.a, b.model.bias.a);
}

TEST(PidRerankTest, RejectsInvalidInput) {
  SimulatedBackend sim(make_oracle({0.5, 0.5}, {1, 2}));
  auto list = make_list(2);
  list.passages[1].id = "p1";
  EXPECT_THROW(pid_rerank(sim, list, RerankStrategy{}), ValidationError);
  RerankStrategy st;
  st.design = DesignKind::kPrunedCyclic;
  st.prune_length = 3;
  EXPECT_THROW(pid_rerank(sim, make_list(2), st), Error);
}

TEST(SelfConsistencyTest, VotingRules) {
  const auto list = make_list(3);
  ScriptedBackend same({"Paris"});
  EXPECT_EQ(self_consistency(same, list, 30, 1), "paris");
  // Every ordering starting with p1 or p2 answers "X", p3 answers "Y".
  ScriptedBackend majority({"X", "X", "Y"});
  EXPECT_EQ(self_consistency(majority, list, 6, 1), "x");
  ScriptedBackend tie({"Y", "X"});
  EXPECT_EQ(self_consistency(tie, make_list(2), 2, 1), "x");
  // Articles normalize to the empty answer.
  ScriptedBackend article({"The", "Y", "Y"});
  EXPECT_EQ(self_consistency(article, list, 6, 1), "y");
  EXPECT_THROW(self_consistency(same, list, 0, 1), Error);
}

TEST(ReverseRankingTest, Basics) {
  Ranking r;
  r.ids = {"p1", "p3", "p2"};
  r.utilities = std::vector<double>{3.0, 2.0, 1.0};
  r.provenance = "pid:cyclic";
  const auto rev = reverse_ranking(r);
  EXPECT_EQ(rev.ids, (std::vector<std::string>{"p2", "p3", "p1"}));
  EXPECT_EQ(*rev.utilities, (std::vector<double>{1.0, 2.0, 3.0}));
  EXPECT_EQ(rev.provenance, "reversed:pid:cyclic");
  EXPECT_EQ(reverse_ranking(rev).ids, r.ids);
  EXPECT_EQ(kendall_tau(r, rev), -1.0);
  Ranking one;
  one.ids = {"p1"};
  EXPECT_EQ(reverse_ranking(one).ids, one.ids);
  EXPECT_THROW(reverse_ranking(Ranking{}), Error);
}

TEST(RankingRecordTest, JsonRoundTrip) {
  SimulatedBackend sim(make_oracle({0.5, 0.3, 0.2}, {3.0, 1.0, 2.0}));
  const auto result = pid_rerank(sim, make_list(3), RerankStrategy{});
  RankingRecord rec = make_record("q1", result);
  rec.answer = "p1";
  const auto j = rec.to_json();
  for (const char* key : {"query_id", "strategy", "ids", "utilities", "bias",
                          "residual", "degenerate", "answer"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  const auto back = RankingRecord::from_json(j);
  EXPECT_EQ(back.ranking, rec.ranking);
  EXPECT_EQ(back.bias, rec.bias);
  EXPECT_EQ(back.residual, rec.residual);
  EXPECT_EQ(back.answer, rec.answer);
}

TEST(GenerateAnswerTest, UsesFullRankedContext) {
  SimulatedBackend sim(make_oracle({0.5, 0.3, 0.2}, {4.0, 1.0, 2.0}));
  const auto list = make_list(3);
  Ranking r;
  r.ids = {"p3", "p1", "p2"};
  // 0.5 * 2 < 0.3 * 4: p1 in the second slot wins.
  EXPECT_EQ(generate_answer(sim, list, r), "p1");
  r.ids = {"p4"};
  EXPECT_THROW(generate_answer(sim, list, r), Error);
}

}  // namespace
}  // namespace permdebias
