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

#include "permdebias/sim_backend.h"

#include <cmath>

#include "permdebias/random.h"

namespace permdebias {

void SimOracleConfig::validate(int n) const {
  if (static_cast<int>(a_star.size()) != n ||
      static_cast<int>(u_star.size()) != n) {
    throw Error("simulated oracle expects " + std::to_string(n) +
                " positions, has a*=" + std::to_string(a_star.size()) +
                " u*=" + std::to_string(u_star.size()));
  }
  double total = 0.0;
  for (double a : a_star) {
    if (!(a >= 0.0 && a <= 1.0)) throw Error("a* entry outside [0, 1]");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("a* does not sum to 1");
  if (!log_prior.empty() && static_cast<int>(log_prior.size()) != n) {
    throw Error("simulated log_prior length mismatch");
  }
  if (noise_sigma < 0.0) throw Error("noise_sigma must be >= 0");
}

SimulatedBackend::SimulatedBackend(std::optional<SimOracleConfig> default_config,
                                   std::string tag)
    : tag_(std::move(tag)), default_(std::move(default_config)) {}

void SimulatedBackend::set_query_config(const std::string& query_id,
                                        SimOracleConfig config) {
  std::lock_guard lock(mu_);
  per_query_[query_id] = std::move(config);
}

const SimOracleConfig& SimulatedBackend::config_for(
    const Query& query, std::span<const Passage> context) const {
  const SimOracleConfig* cfg = nullptr;
  {
    std::lock_guard lock(mu_);
    auto it = per_query_.find(query.id);
    if (it != per_query_.end()) cfg = &it->second;
  }
  if (cfg == nullptr) {
    if (!default_) {
      throw BackendError("simulated backend has no oracle for query '" +
                         query.id + "'");
    }
    cfg = &*default_;
  }
  const int n = static_cast<int>(cfg->u_star.size());
  for (const auto& p : context) {
    if (p.retriever_rank < 1 || p.retriever_rank > n) {
      throw BackendError("passage '" + p.id + "' has rank " +
                         std::to_string(p.retriever_rank) +
                         " outside the oracle's " + std::to_string(n) +
                         " positions");
    }
  }
  if (static_cast<int>(context.size()) > n) {
    throw BackendError("context longer than the oracle's position count");
  }
  return *cfg;
}

double SimulatedBackend::model_score(const Query& query,
                                     std::span<const Passage> context) const {
  const SimOracleConfig& cfg = config_for(query, context);
  double mass = 0.0;
  double weighted = 0.0;
  double plain = 0.0;
  for (size_t j = 0; j < context.size(); ++j) {
    const double u = cfg.u_star[static_cast<size_t>(context[j].retriever_rank - 1)];
    mass += cfg.a_star[j];
    weighted += cfg.a_star[j] * u;
    plain += u;
  }
  if (context.empty()) return 0.0;
  if (context.size() == cfg.a_star.size()) return weighted;
  if (mass <= 1e-12) return plain / static_cast<double>(context.size());
  return weighted / mass;
}

ContextScore SimulatedBackend::score_context(const Query& query,
                                             std::span<const Passage> context) {
  ++score_calls_;
  if (context.empty()) throw BackendError("empty context");
  const SimOracleConfig& cfg = config_for(query, context);
  double s = model_score(query, context);
  if (cfg.noise_sigma > 0.0) {
    std::string key = query.id;
    for (const auto& p : context) {
      key += '\x1f';
      key += p.id;
    }
    Rng rng(derive_seed(cfg.seed, key));
    s += cfg.noise_sigma * rng.normal();
  }
  ContextScore out;
  out.query_logprobs.push_back(s);
  for (const auto& p : context) {
    out.context_logprobs.push_back(
        cfg.log_prior.empty()
            ? 0.0
            : cfg.log_prior[static_cast<size_t>(p.retriever_rank - 1)]);
  }
  return out;
}

std::string SimulatedBackend::generate(const Query& query,
                                       std::span<const Passage> context) {
  ++generate_calls_;
  if (context.empty()) throw BackendError("generate needs at least one passage");
  const SimOracleConfig& cfg = config_for(query, context);
  size_t best = 0;
  double best_value = -INFINITY;
  for (size_t j = 0; j < context.size(); ++j) {
    const double v =
        cfg.a_star[j] *
        cfg.u_star[static_cast<size_t>(context[j].retriever_rank - 1)];
    if (v > best_value) {
      best_value = v;
      best = j;
    }
  }
  const std::string& id = context[best].id;
  auto it = cfg.answer_vocab.find(id);
  return it == cfg.answer_vocab.end() ? id : it->second;
}

TokenDistribution SimulatedBackend::first_token_distribution(
    const Query& query, std::span<const Passage> context) {
  TokenDistribution d;
  d.probabilities[generate(query, context)] = 1.0;
  return d;
}

}  // namespace permdebias
