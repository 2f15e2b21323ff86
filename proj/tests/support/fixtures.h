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

#include <string>
#include <vector>

#include "permdebias/core.h"
#include "permdebias/sim_backend.h"

namespace permdebias::testing {

// Passages p1..pn at ranks 1..n with optional retriever scores.
inline RetrievalList make_list(int n, const std::string& query_id = "q1",
                               const std::vector<double>& scores = {}) {
  RetrievalList list;
  list.query.id = query_id;
  list.query.text = "what is " + query_id;
  for (int r = 1; r <= n; ++r) {
    Passage p;
    p.id = "p" + std::to_string(r);
    p.text = "passage " + std::to_string(r);
    p.retriever_rank = r;
    if (!scores.empty()) p.retriever_score = scores[static_cast<size_t>(r - 1)];
    list.passages.push_back(p);
  }
  return list;
}

inline SimOracleConfig make_oracle(std::vector<double> a, std::vector<double> u,
                                   double noise = 0.0, std::uint64_t seed = 0) {
  SimOracleConfig cfg;
  cfg.a_star = std::move(a);
  cfg.u_star = std::move(u);
  cfg.noise_sigma = noise;
  cfg.seed = seed;
  return cfg;
}

}  // namespace permdebias::testing
