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

// Pointwise and listwise scoring baselines. Each yields a Ranking in the
// same form as the debiased reranker.

#include <span>
#include <string>
#include <vector>

#include "permdebias/backend.h"
#include "permdebias/core.h"

namespace permdebias {

class ScoreCache;

enum class PointwiseMethod { kBayesSaliency, kQG, kLingua };

std::string to_string(PointwiseMethod m);

struct PointwiseScore {
  std::string passage_id;
  double score = 0.0;
  PointwiseMethod method = PointwiseMethod::kBayesSaliency;
};

// log P(query | passage) [+ log P(passage)], aggregated per `opts`.
PointwiseScore bayes_saliency(Backend& backend, const Query& query,
                              const Passage& passage, bool include_prior,
                              const BackendOptions& opts = {},
                              ScoreCache* cache = nullptr);

// bayes_saliency without the prior term.
PointwiseScore qg_score(Backend& backend, const Query& query,
                        const Passage& passage,
                        const BackendOptions& opts = {},
                        ScoreCache* cache = nullptr);

// sum over query tokens of p * ln p, p = exp(logprob). Always <= 0. Throws
// BackendError if the backend does not report token probabilities.
PointwiseScore lingua_score(Backend& backend, const Query& query,
                            const Passage& passage);

// Descending score, ties by retriever rank. Throws Error on a missing,
// duplicate or unknown passage id.
Ranking rank_by_pointwise(std::span<const PointwiseScore> scores,
                          const RetrievalList& list, std::string provenance);

// Scores every passage of the list with `method` (fanning out up to
// opts.max_concurrency calls) and ranks them.
Ranking pointwise_rerank(Backend& backend, const RetrievalList& list,
                         PointwiseMethod method, bool include_prior,
                         const BackendOptions& opts = {},
                         ScoreCache* cache = nullptr);

struct ListwiseResult {
  Ranking ranking;
  int backend_calls = 0;
};

// Greedy selection: step k scores every remaining candidate appended to the
// k - 1 passages already chosen and keeps the best (ties by retriever rank).
// The step score is log P(query | chosen + candidate), plus with
// include_prior the candidate's conditional context log-prior
// log P(chosen + candidate) - log P(chosen). N (N + 1) / 2 backend calls.
ListwiseResult bayes_saliency_listwise(Backend& backend,
                                       const RetrievalList& list,
                                       bool include_prior,
                                       const BackendOptions& opts = {});

}  // namespace permdebias
