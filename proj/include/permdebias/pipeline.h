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

#pragma once

// End-to-end debiased reranking: build a permutation design, score every
// ordering with the generator, fit bias and utilities, rank by utility.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "permdebias/backend.h"
#include "permdebias/core.h"
#include "permdebias/permute.h"
#include "permdebias/solver.h"

namespace permdebias {

class ScoreCache;

enum class DesignKind { kRandom3N, kCyclic, kPrunedCyclic, kVariablePruned };

struct RerankStrategy {
  DesignKind design = DesignKind::kRandom3N;
  // Prefix length for kPrunedCyclic.
  int prune_length = 0;
  // Retriever-mass threshold for kVariablePruned.
  double tau = 1.0;
  // Overrides the 3N default size of the random design.
  std::optional<int> random_count;
  // Seeds the random design; the solver has its own seed in `solver`.
  std::uint64_t seed = 0;
  SolverConfig solver;
  BackendOptions backend_opts;
};

// "pid:random", "pid:cyclic", "pid:pruned(L=3)", "pid:variable(tau=0.5)".
std::string strategy_name(const RerankStrategy& strategy);

PermutationDesign make_design(const RetrievalList& list,
                              const RerankStrategy& strategy);

struct RerankResult {
  Ranking ranking;
  DisentangledModel model;
  PermutationDesign design;
  std::vector<ScoredPermutation> scores;
};

// Throws ValidationError for an invalid list, BatchScoringError when any
// ordering fails to score, and Error for invalid strategy parameters.
RerankResult pid_rerank(Backend& backend, const RetrievalList& list,
                        const RerankStrategy& strategy,
                        ScoreCache* cache = nullptr);

// Generates with the full list of passages in ranking order.
std::string generate_answer(Backend& backend, const RetrievalList& list,
                            const Ranking& ranking);

// Majority vote over generations from min(k, N!) distinct random orderings.
// Returns the winning normalized answer; ties go to the lexicographically
// smallest.
std::string self_consistency(Backend& backend, const RetrievalList& list,
                             int k = 30, std::uint64_t seed = 0,
                             int max_concurrency = 4);

// Ids reversed, utilities kept parallel to their ids, provenance
// "reversed:<original>". Throws Error on an empty ranking.
Ranking reverse_ranking(const Ranking& r);

// One line of ranking JSONL.
struct RankingRecord {
  std::string query_id;
  Ranking ranking;
  std::optional<std::vector<double>> bias;
  std::optional<double> residual;
  std::optional<std::string> answer;

  nlohmann::json to_json() const;
  static RankingRecord from_json(const nlohmann::json& j);
};

RankingRecord make_record(const std::string& query_id,
                          const RerankResult& result);

}  // namespace permdebias
