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

// Answer metrics (exact match, ROUGE-L), ranking metrics (MRR, Kendall tau)
// and the positional-bias aggregate over fitted models.

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "permdebias/core.h"
#include "permdebias/solver.h"

namespace permdebias {

// Lowercase, drop ASCII punctuation, drop the articles a/an/the, collapse
// whitespace.
std::string normalize_answer(std::string_view s);

// Lowercase, drop ASCII punctuation, split on whitespace. Articles are kept.
std::vector<std::string> rouge_tokens(std::string_view s);

int exact_match(std::string_view pred, std::string_view gold);

// LCS F-measure (beta = 1) over rouge_tokens, scaled to [0, 100]. Two empty
// strings score 100; one empty string scores 0.
double rouge_l(std::string_view pred, std::string_view gold);

// 1 / (1-based rank of the first gold id), or 0 if no gold id is ranked.
double reciprocal_rank(const Ranking& ranking, const std::set<std::string>& gold);

// Mean reciprocal rank. Throws Error if the two sequences differ in length.
double mrr(std::span<const Ranking> rankings,
           std::span<const std::set<std::string>> gold_ids);

// Tau-a over the passage-id orders. Throws Error unless both rankings hold
// the same ids and at least two of them.
double kendall_tau(const Ranking& r1, const Ranking& r2);

// Spearman rank correlation with average ranks for ties. NaN when either
// input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct BiasReport {
  std::vector<double> mean_a;
  // Population standard deviation per position.
  std::vector<double> std_a;
  int query_count = 0;
  int excluded_degenerate = 0;

  nlohmann::json to_json() const;
  // Header "position,mean,std"; positions are 1-based.
  void write_csv(std::ostream& os) const;
};

// Degenerate models are skipped. Throws Error if nothing remains or the
// remaining models disagree on N.
BiasReport bias_report(std::span<const DisentangledModel> models);

struct Prediction {
  std::string query_id;
  std::optional<std::string> answer;
  std::optional<std::vector<std::string>> ids;
};

struct EvalReport {
  struct PerQuery {
    std::string query_id;
    int predictions = 0;
    std::map<std::string, double> metrics;
  };
  std::vector<PerQuery> per_query;
  // Mean of the per-query values of each metric over the queries that have it.
  std::map<std::string, double> aggregates;
  std::map<std::string, int> counts;
  std::vector<std::string> unmatched_predictions;
  std::vector<std::string> missing_predictions;

  nlohmann::json to_json() const;
};

// Supported metrics: "em" and "rouge_l" (both 0..100, need a gold answer and
// a predicted answer) and "mrr" (needs gold passage ids and predicted ids).
// Several predictions for one query are averaged first. Throws Error on an
// unknown metric or when no prediction matches a dataset query.
EvalReport evaluate(std::span<const Prediction> predictions,
                    std::span<const RetrievalList> dataset,
                    std::span<const std::string> metrics);

}  // namespace permdebias
