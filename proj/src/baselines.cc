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

#include "permdebias/baselines.h"

#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include "permdebias/cache.h"
#include "permdebias/concurrency.h"

namespace permdebias {

namespace {

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::string to_string(PointwiseMethod m) {
  switch (m) {
    case PointwiseMethod::kBayesSaliency:
      return "bayes_saliency";
    case PointwiseMethod::kQG:
      return "qg";
    case PointwiseMethod::kLingua:
      return "lingua";
  }
  return "unknown";
}

PointwiseScore bayes_saliency(Backend& backend, const Query& query,
                              const Passage& passage, bool include_prior,
                              const BackendOptions& opts, ScoreCache* cache) {
  BackendOptions local = opts;
  local.include_prior = include_prior;
  const ScoredPermutation s = score_passages(
      backend, query, std::span<const Passage>(&passage, 1), local, cache);
  return {passage.id, s.effective_score(), PointwiseMethod::kBayesSaliency};
}

PointwiseScore qg_score(Backend& backend, const Query& query,
                        const Passage& passage, const BackendOptions& opts,
                        ScoreCache* cache) {
  PointwiseScore s =
      bayes_saliency(backend, query, passage, /*include_prior=*/false, opts,
                     cache);
  s.method = PointwiseMethod::kQG;
  return s;
}

PointwiseScore lingua_score(Backend& backend, const Query& query,
                            const Passage& passage) {
  if (!backend.supports_token_probabilities()) {
    throw BackendError("backend '" + backend.model_tag() +
                       "' does not report token probabilities");
  }
  if (query.text.empty()) throw Error("cannot score an empty query");
  const ContextScore raw =
      backend.score_context(query, std::span<const Passage>(&passage, 1));
  if (raw.query_logprobs.empty()) {
    throw BackendError("backend returned no query token log-probabilities");
  }
  double score = 0.0;
  for (double lp : raw.query_logprobs) {
    if (std::isnan(lp) || lp > 1e-12) {
      throw BackendError("invalid token log-probability");
    }
    const double p = std::exp(std::min(lp, 0.0));
    if (p > 0.0) score += p * std::min(lp, 0.0);
  }
  return {passage.id, score, PointwiseMethod::kLingua};
}

Ranking rank_by_pointwise(std::span<const PointwiseScore> scores,
                          const RetrievalList& list, std::string provenance) {
  std::map<std::string, double> by_id;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) {
      throw Error("non-finite score for passage '" + s.passage_id + "'");
    }
    if (!by_id.emplace(s.passage_id, s.score).second) {
      throw Error("duplicate score for passage '" + s.passage_id + "'");
    }
  }
  std::vector<double> utilities;
  utilities.reserve(list.passages.size());
  for (const auto& p : list.passages) {
    auto it = by_id.find(p.id);
    if (it == by_id.end()) {
      throw Error("missing score for passage '" + p.id + "'");
    }
    utilities.push_back(it->second);
    by_id.erase(it);
  }
  if (!by_id.empty()) {
    throw Error("score for unknown passage '" + by_id.begin()->first + "'");
  }
  return rank_by_utility(list, utilities, std::move(provenance));
}

Ranking pointwise_rerank(Backend& backend, const RetrievalList& list,
                         PointwiseMethod method, bool include_prior,
                         const BackendOptions& opts, ScoreCache* cache) {
  std::vector<PointwiseScore> scores(list.passages.size());
  const auto errors = parallel_for(
      list.passages.size(), std::max(1, opts.max_concurrency), [&](size_t i) {
        const Passage& p = list.passages[i];
        switch (method) {
          case PointwiseMethod::kBayesSaliency:
            scores[i] = bayes_saliency(backend, list.query, p, include_prior,
                                       opts, cache);
            break;
          case PointwiseMethod::kQG:
            scores[i] = qg_score(backend, list.query, p, opts, cache);
            break;
          case PointwiseMethod::kLingua:
            scores[i] = lingua_score(backend, list.query, p);
            break;
        }
      });
  rethrow_first(errors);
  std::string provenance = to_string(method);
  if (method == PointwiseMethod::kBayesSaliency && include_prior) {
    provenance += "+prior";
  }
  return rank_by_pointwise(scores, list, std::move(provenance));
}

ListwiseResult bayes_saliency_listwise(Backend& backend,
                                       const RetrievalList& list,
                                       bool include_prior,
                                       const BackendOptions& opts) {
  if (list.passages.empty()) throw Error("listwise scoring needs N >= 1");
  if (list.query.text.empty()) throw Error("cannot score an empty query");
  std::vector<size_t> remaining(list.passages.size());
  std::iota(remaining.begin(), remaining.end(), size_t{0});
  std::stable_sort(remaining.begin(), remaining.end(), [&](size_t i, size_t j) {
    return list.passages[i].retriever_rank < list.passages[j].retriever_rank;
  });

  ListwiseResult result;
  result.ranking.provenance =
      include_prior ? "listwise_bayes+prior" : "listwise_bayes";
  std::vector<Passage> chosen;
  double chosen_prior = 0.0;
  while (!remaining.empty()) {
    std::vector<double> step_scores(remaining.size());
    std::vector<double> step_priors(remaining.size());
    const auto errors = parallel_for(
        remaining.size(), std::max(1, opts.max_concurrency), [&](size_t c) {
          std::vector<Passage> context = chosen;
          context.push_back(list.passages[remaining[c]]);
          const ContextScore raw = backend.score_context(list.query, context);
          if (raw.query_logprobs.empty()) {
            throw BackendError("backend returned no query log-probabilities");
          }
          double score =
              aggregate_logprobs(raw.query_logprobs, opts.length_normalize);
          // Conditional prior of the new passage given the chosen prefix.
          const double prior = std::accumulate(raw.context_logprobs.begin(),
                                               raw.context_logprobs.end(), 0.0);
          step_priors[c] = prior;
          if (include_prior) score += prior - chosen_prior;
          if (!std::isfinite(score)) {
            throw BackendError("backend returned a non-finite score");
          }
          step_scores[c] = score;
        });
    result.backend_calls += static_cast<int>(remaining.size());
    rethrow_first(errors);
    size_t best = 0;
    for (size_t c = 1; c < remaining.size(); ++c) {
      if (step_scores[c] > step_scores[best]) best = c;
    }
    chosen.push_back(list.passages[remaining[best]]);
    chosen_prior = step_priors[best];
    result.ranking.ids.push_back(list.passages[remaining[best]].id);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return result;
}

}  // namespace permdebias
