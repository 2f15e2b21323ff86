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

#include "permdebias/backend.h"

#include <cmath>
#include <numeric>

#include "permdebias/cache.h"
#include "permdebias/concurrency.h"

namespace permdebias {

void TokenDistribution::validate() const {
  double total = 0.0;
  for (const auto& [token, p] : probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error("token probability for '" + token + "' outside [0, 1]");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error("token distribution sums to " + std::to_string(total));
  }
}

TokenDistribution TokenDistribution::from_logprobs(
    const std::map<std::string, double>& logprobs) {
  if (logprobs.empty()) throw BackendError("empty token distribution");
  double max_lp = -INFINITY;
  for (const auto& [token, lp] : logprobs) max_lp = std::max(max_lp, lp);
  TokenDistribution d;
  double total = 0.0;
  for (const auto& [token, lp] : logprobs) {
    const double w = std::exp(lp - max_lp);
    d.probabilities[token] = w;
    total += w;
  }
  for (auto& [token, p] : d.probabilities) p /= total;
  return d;
}

double aggregate_logprobs(std::span<const double> logprobs,
                          bool length_normalize) {
  const double sum = std::accumulate(logprobs.begin(), logprobs.end(), 0.0);
  if (!length_normalize || logprobs.empty()) return sum;
  return sum / static_cast<double>(logprobs.size());
}

ScoredPermutation score_passages(Backend& backend, const Query& query,
                                 std::span<const Passage> context,
                                 const BackendOptions& opts,
                                 ScoreCache* cache) {
  if (query.text.empty()) throw Error("cannot score an empty query");
  if (context.empty()) throw Error("cannot score an empty context");
  std::optional<CacheKey> key;
  if (cache != nullptr) {
    key = make_cache_key(backend.model_tag(), query, context, opts);
    if (auto hit = cache->lookup(*key)) return *hit;
  }
  const ContextScore raw = backend.score_context(query, context);
  if (raw.query_logprobs.empty()) {
    throw BackendError("backend returned no query token log-probabilities");
  }
  ScoredPermutation out;
  out.model_tag = backend.model_tag();
  out.log_likelihood =
      aggregate_logprobs(raw.query_logprobs, opts.length_normalize);
  if (opts.include_prior) {
    out.log_prior =
        aggregate_logprobs(raw.context_logprobs, opts.length_normalize);
  }
  if (!std::isfinite(out.log_likelihood) ||
      (out.log_prior && !std::isfinite(*out.log_prior))) {
    throw BackendError("backend returned a non-finite score");
  }
  if (cache != nullptr) cache->insert(*key, out);
  return out;
}

ScoredPermutation score_permutation(Backend& backend,
                                    const RetrievalList& list,
                                    const Permutation& perm,
                                    const BackendOptions& opts,
                                    ScoreCache* cache) {
  const std::vector<Passage> context = apply_permutation(list, perm);
  ScoredPermutation out =
      score_passages(backend, list.query, context, opts, cache);
  out.permutation = perm;
  return out;
}

BatchScoringError::BatchScoringError(
    std::vector<BatchFailure> failures,
    std::vector<std::optional<ScoredPermutation>> partial)
    : BackendError([&] {
        std::string msg = std::to_string(failures.size()) +
                          " permutation(s) failed to score";
        if (!failures.empty()) {
          msg += "; first: #" + std::to_string(failures.front().index) +
                 ": " + failures.front().message;
        }
        return msg;
      }()),
      failures_(std::move(failures)),
      partial_(std::move(partial)) {}

std::vector<ScoredPermutation> score_batch(Backend& backend,
                                           const RetrievalList& list,
                                           const PermutationDesign& design,
                                           const BackendOptions& opts,
                                           ScoreCache* cache) {
  if (opts.max_concurrency < 1) throw Error("max_concurrency must be >= 1");
  if (design.empty()) return {};
  if (design.n_passages != list.size()) {
    throw PermutationError("design is for N=" +
                           std::to_string(design.n_passages) +
                           " but list has " + std::to_string(list.size()));
  }
  std::vector<std::optional<ScoredPermutation>> results(design.permutations.size());
  const auto errors = parallel_for(
      design.permutations.size(), opts.max_concurrency, [&](size_t i) {
        results[i] = score_permutation(backend, list, design.permutations[i],
                                       opts, cache);
      });
  std::vector<BatchFailure> failures;
  for (size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      failures.push_back({static_cast<int>(i), e.what()});
    }
  }
  if (!failures.empty()) {
    throw BatchScoringError(std::move(failures), std::move(results));
  }
  std::vector<ScoredPermutation> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

std::vector<double> effective_scores(std::span<const ScoredPermutation> scored) {
  std::vector<double> s;
  s.reserve(scored.size());
  for (const auto& sp : scored) s.push_back(sp.effective_score());
  return s;
}

TokenDistribution first_token_distribution(Backend& backend,
                                           const RetrievalList& list,
                                           const Permutation& perm) {
  const std::vector<Passage> context = apply_permutation(list, perm);
  TokenDistribution d = backend.first_token_distribution(list.query, context);
  d.validate();
  return d;
}

double perm_distance(const TokenDistribution& d1, const TokenDistribution& d2) {
  double total = 0.0;
  auto it1 = d1.probabilities.begin();
  auto it2 = d2.probabilities.begin();
  // Merge walk over the two sorted supports.
  while (it1 != d1.probabilities.end() || it2 != d2.probabilities.end()) {
    if (it2 == d2.probabilities.end() ||
        (it1 != d1.probabilities.end() && it1->first < it2->first)) {
      total += std::abs(it1->second);
      ++it1;
    } else if (it1 == d1.probabilities.end() || it2->first < it1->first) {
      total += std::abs(it2->second);
      ++it2;
    } else {
      total += std::abs(it1->second - it2->second);
      ++it1;
      ++it2;
    }
  }
  return total;
}

}  // namespace permdebias
