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

// Generator scoring interface. A backend scores a query against an ordered
// passage context, generates answers and exposes first-token distributions.
// Scores are kept in log space: the permutation score is
//   s = log P(query | context) [+ log P(context)]
// with each term averaged per token when length normalization is on.

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "permdebias/core.h"
#include "permdebias/permute.h"

namespace permdebias {

class ScoreCache;

class BackendError : public Error {
 public:
  using Error::Error;
};

struct BackendOptions {
  bool include_prior = false;
  bool length_normalize = true;
  int max_concurrency = 4;
  std::chrono::milliseconds timeout{30000};
  int retry_budget = 2;
};

// Raw per-token log-probabilities for one (query, context) evaluation.
struct ContextScore {
  std::vector<double> query_logprobs;
  // Log-probabilities of the context tokens themselves; empty when the
  // backend cannot report them.
  std::vector<double> context_logprobs;
};

struct TokenDistribution {
  std::map<std::string, double> probabilities;

  // Throws Error unless all values lie in [0, 1] and sum to 1 within 1e-9.
  void validate() const;
  // Builds a distribution from (possibly truncated) log-probabilities by
  // exponentiating and renormalizing.
  static TokenDistribution from_logprobs(
      const std::map<std::string, double>& logprobs);
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string model_tag() const = 0;
  virtual ContextScore score_context(const Query& query,
                                     std::span<const Passage> context) = 0;
  virtual std::string generate(const Query& query,
                               std::span<const Passage> context) = 0;
  virtual TokenDistribution first_token_distribution(
      const Query& query, std::span<const Passage> context) = 0;
  // Whether query_logprobs are genuine token log-probabilities (<= 0).
  virtual bool supports_token_probabilities() const { return true; }
};

struct ScoredPermutation {
  Permutation permutation;
  double log_likelihood = 0.0;
  std::optional<double> log_prior;
  std::string model_tag;
  bool from_cache = false;

  // The score used downstream: log-likelihood plus log-prior when present.
  double effective_score() const {
    return log_likelihood + log_prior.value_or(0.0);
  }
};

// Mean (or sum, when length_normalize is off) of the given log-probs.
double aggregate_logprobs(std::span<const double> logprobs,
                          bool length_normalize);

// Scores an explicit ordered context. The returned permutation is empty;
// score_permutation fills it in.
ScoredPermutation score_passages(Backend& backend, const Query& query,
                                 std::span<const Passage> context,
                                 const BackendOptions& opts,
                                 ScoreCache* cache = nullptr);

ScoredPermutation score_permutation(Backend& backend,
                                    const RetrievalList& list,
                                    const Permutation& perm,
                                    const BackendOptions& opts,
                                    ScoreCache* cache = nullptr);

struct BatchFailure {
  int index = 0;
  std::string message;
};

class BatchScoringError : public BackendError {
 public:
  BatchScoringError(std::vector<BatchFailure> failures,
                    std::vector<std::optional<ScoredPermutation>> partial);

  const std::vector<BatchFailure>& failures() const { return failures_; }
  // Results in design order; failed entries are empty.
  const std::vector<std::optional<ScoredPermutation>>& partial() const {
    return partial_;
  }

 private:
  std::vector<BatchFailure> failures_;
  std::vector<std::optional<ScoredPermutation>> partial_;
};

// One result per design entry, in design order, with at most
// opts.max_concurrency backend calls in flight. Throws BatchScoringError if
// any entry fails.
std::vector<ScoredPermutation> score_batch(Backend& backend,
                                           const RetrievalList& list,
                                           const PermutationDesign& design,
                                           const BackendOptions& opts,
                                           ScoreCache* cache = nullptr);

std::vector<double> effective_scores(std::span<const ScoredPermutation> scored);

TokenDistribution first_token_distribution(Backend& backend,
                                           const RetrievalList& list,
                                           const Permutation& perm);

// L1 distance over the union of supports; in [0, 2].
double perm_distance(const TokenDistribution& d1, const TokenDistribution& d2);

}  // namespace permdebias
