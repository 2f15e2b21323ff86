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

// Simulated generator embodying the linear bias-utility model: the score of a
// context [p_pi[1], ..., p_pi[L]] is
//
//   s = sum_{j<=L} a*_j u*_{pi[j]} / sum_{j<=L} a*_j  +  noise
//
// with Gaussian noise that is a pure function of (seed, query id, passage-id
// sequence), so concurrent and repeated calls agree.

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "permdebias/backend.h"

namespace permdebias {

struct SimOracleConfig {
  std::vector<double> a_star;
  std::vector<double> u_star;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  // Passage id -> answer token. Passages without an entry answer with their
  // own id.
  std::map<std::string, std::string> answer_vocab;
  // Optional per-passage context log-prior (by retriever position).
  std::vector<double> log_prior;

  // Throws Error unless a_star is on the simplex and lengths agree with n.
  void validate(int n) const;
};

class SimulatedBackend : public Backend {
 public:
  explicit SimulatedBackend(std::optional<SimOracleConfig> default_config =
                                std::nullopt,
                            std::string tag = "sim");

  // Per-query ground truth; overrides the default config for that query.
  void set_query_config(const std::string& query_id, SimOracleConfig config);

  std::string model_tag() const override { return tag_; }
  ContextScore score_context(const Query& query,
                             std::span<const Passage> context) override;
  std::string generate(const Query& query,
                       std::span<const Passage> context) override;
  TokenDistribution first_token_distribution(
      const Query& query, std::span<const Passage> context) override;
  bool supports_token_probabilities() const override { return false; }

  std::uint64_t score_calls() const { return score_calls_.load(); }
  std::uint64_t generate_calls() const { return generate_calls_.load(); }

  // Noise-free model score of the context (prefix-renormalized).
  double model_score(const Query& query,
                     std::span<const Passage> context) const;

 private:
  const SimOracleConfig& config_for(const Query& query,
                                    std::span<const Passage> context) const;

  std::string tag_;
  std::optional<SimOracleConfig> default_;
  std::map<std::string, SimOracleConfig> per_query_;  // node-stable
  mutable std::mutex mu_;
  std::atomic<std::uint64_t> score_calls_{0};
  std::atomic<std::uint64_t> generate_calls_{0};
};

}  // namespace permdebias
