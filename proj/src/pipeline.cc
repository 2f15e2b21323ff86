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

#include "permdebias/pipeline.h"

#include <algorithm>
#include <map>
#include <sstream>

#include "permdebias/concurrency.h"
#include "permdebias/eval.h"

namespace permdebias {

using nlohmann::json;

std::string strategy_name(const RerankStrategy& strategy) {
  switch (strategy.design) {
    case DesignKind::kRandom3N:
      return "pid:random";
    case DesignKind::kCyclic:
      return "pid:cyclic";
    case DesignKind::kPrunedCyclic:
      return "pid:pruned(L=" + std::to_string(strategy.prune_length) + ")";
    case DesignKind::kVariablePruned: {
      std::ostringstream os;
      os << "pid:variable(tau=" << strategy.tau << ")";
      return os.str();
    }
  }
  return "pid:unknown";
}

PermutationDesign make_design(const RetrievalList& list,
                              const RerankStrategy& strategy) {
  const int n = list.size();
  switch (strategy.design) {
    case DesignKind::kRandom3N:
      return random_design(n, strategy.random_count, strategy.seed);
    case DesignKind::kCyclic:
      return cyclic_design(n);
    case DesignKind::kPrunedCyclic:
      return pruned_cyclic_design(n, strategy.prune_length);
    case DesignKind::kVariablePruned:
      return variable_pruned_design(list, strategy.tau);
  }
  throw Error("unknown design kind");
}

RerankResult pid_rerank(Backend& backend, const RetrievalList& list,
                        const RerankStrategy& strategy, ScoreCache* cache) {
  const ValidationReport report = validate_retrieval_list(list);
  if (!report.ok()) throw ValidationError(report.summary());
  RerankResult result;
  result.design = make_design(list, strategy);
  result.scores =
      score_batch(backend, list, result.design, strategy.backend_opts, cache);
  const std::vector<double> s = effective_scores(result.scores);
  result.model = fit(result.design, s, strategy.solver);
  result.ranking = rank_by_utility(list, result.model.utility.u,
                                   strategy_name(strategy),
                                   result.model.degenerate);
  return result;
}

std::string generate_answer(Backend& backend, const RetrievalList& list,
                            const Ranking& ranking) {
  std::map<std::string, const Passage*> by_id;
  for (const auto& p : list.passages) by_id[p.id] = &p;
  std::vector<Passage> context;
  for (const auto& id : ranking.ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error("ranking holds unknown id '" + id + "'");
    context.push_back(*it->second);
  }
  return backend.generate(list.query, context);
}

std::string self_consistency(Backend& backend, const RetrievalList& list,
                             int k, std::uint64_t seed, int max_concurrency) {
  if (k < 1) throw Error("self_consistency needs k >= 1");
  if (list.passages.empty()) throw Error("self_consistency needs N >= 1");
  const PermutationDesign design = random_design(list.size(), k, seed);
  std::vector<std::string> answers(design.permutations.size());
  const auto errors = parallel_for(
      design.permutations.size(), std::max(1, max_concurrency), [&](size_t i) {
        const auto context = apply_permutation(list, design.permutations[i]);
        answers[i] = normalize_answer(backend.generate(list.query, context));
      });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  // std::map iterates keys in ascending order, so the first maximum is the
  // lexicographically smallest.
  std::map<std::string, int> votes;
  for (const auto& a : answers) ++votes[a];
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

Ranking reverse_ranking(const Ranking& r) {
  if (r.ids.empty()) throw Error("cannot reverse an empty ranking");
  Ranking out = r;
  std::reverse(out.ids.begin(), out.ids.end());
  if (out.utilities) std::reverse(out.utilities->begin(), out.utilities->end());
  out.provenance = "reversed:" + r.provenance;
  return out;
}

json RankingRecord::to_json() const {
  json j = {{"query_id", query_id},
            {"strategy", ranking.provenance},
            {"ids", ranking.ids},
            {"utilities", ranking.utilities ? json(*ranking.utilities)
                                            : json(nullptr)},
            {"bias", bias ? json(*bias) : json(nullptr)},
            {"residual", residual ? json(*residual) : json(nullptr)},
            {"degenerate", ranking.degenerate}};
  if (answer) j["answer"] = *answer;
  return j;
}

RankingRecord RankingRecord::from_json(const json& j) {
  RankingRecord r;
  try {
    r.query_id = j.at("query_id").get<std::string>();
    r.ranking.provenance = j.value("strategy", std::string());
    if (j.contains("ids") && !j["ids"].is_null()) {
      r.ranking.ids = j["ids"].get<std::vector<std::string>>();
    }
    if (j.contains("utilities") && !j["utilities"].is_null()) {
      r.ranking.utilities = j["utilities"].get<std::vector<double>>();
    }
    if (j.contains("bias") && !j["bias"].is_null()) {
      r.bias = j["bias"].get<std::vector<double>>();
    }
    if (j.contains("residual") && !j["residual"].is_null()) {
      r.residual = j["residual"].get<double>();
    }
    r.ranking.degenerate = j.value("degenerate", false);
    if (j.contains("answer") && !j["answer"].is_null()) {
      r.answer = j["answer"].get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed ranking record: ") + e.what());
  }
  return r;
}

RankingRecord make_record(const std::string& query_id,
                          const RerankResult& result) {
  RankingRecord r;
  r.query_id = query_id;
  r.ranking = result.ranking;
  r.bias = result.model.bias.a;
  r.residual = result.model.residual_sse;
  return r;
}

}  // namespace permdebias
