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

#include "permdebias/permute.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "permdebias/random.h"

namespace permdebias {

std::string to_string(DesignStrategy s) {
  switch (s) {
    case DesignStrategy::kRandom:
      return "random";
    case DesignStrategy::kCyclic:
      return "cyclic";
    case DesignStrategy::kPrunedCyclic:
      return "pruned";
    case DesignStrategy::kVariablePruned:
      return "variable";
  }
  return "unknown";
}

std::uint64_t saturating_factorial(int n) {
  std::uint64_t f = 1;
  for (int i = 2; i <= n; ++i) {
    if (f > UINT64_MAX / static_cast<std::uint64_t>(i)) return UINT64_MAX;
    f *= static_cast<std::uint64_t>(i);
  }
  return f;
}

PermutationDesign random_design(int n, std::optional<int> m,
                                std::uint64_t seed) {
  if (n < 1) throw Error("random_design requires n >= 1");
  if (m && *m < 1) throw Error("random_design requires m >= 1");
  const std::uint64_t universe = saturating_factorial(n);
  const std::uint64_t wanted =
      std::min<std::uint64_t>(static_cast<std::uint64_t>(m.value_or(3 * n)),
                              universe);

  PermutationDesign design;
  design.strategy = DesignStrategy::kRandom;
  design.n_passages = n;
  design.seed = seed;
  Rng rng(seed);

  std::vector<int> base(static_cast<size_t>(n));
  std::iota(base.begin(), base.end(), 1);

  if (universe <= 720 && wanted * 2 > universe) {
    // Dense request on a small universe: enumerate, shuffle, take a prefix.
    std::vector<std::vector<int>> all;
    do {
      all.push_back(base);
    } while (std::next_permutation(base.begin(), base.end()));
    rng.shuffle(all);
    for (std::uint64_t i = 0; i < wanted; ++i) {
      design.permutations.emplace_back(std::move(all[i]));
    }
    return design;
  }

  std::set<std::vector<int>> seen;
  const std::uint64_t max_draws = 100 * wanted;
  std::uint64_t draws = 0;
  while (design.permutations.size() < wanted) {
    if (draws++ >= max_draws) {
      throw Error("random_design: retry bound exhausted");
    }
    std::vector<int> p = base;
    rng.shuffle(p);
    if (seen.insert(p).second) design.permutations.emplace_back(std::move(p));
  }
  return design;
}

Permutation cyclic_permutation(int n, int k) {
  return pruned_cyclic_permutation(n, n, k);
}

PermutationDesign cyclic_design(int n) {
  if (n < 1) throw Error("cyclic_design requires n >= 1");
  PermutationDesign design;
  design.strategy = DesignStrategy::kCyclic;
  design.n_passages = n;
  for (int k = 1; k <= n; ++k) {
    design.permutations.push_back(cyclic_permutation(n, k));
  }
  return design;
}

Permutation pruned_cyclic_permutation(int n, int length, int k) {
  if (length < 1 || length > n) {
    throw Error("L out of range: L=" + std::to_string(length) +
                " must lie in [1, " + std::to_string(n) + "]");
  }
  if (k < 1 || k > n) {
    throw Error("cyclic start " + std::to_string(k) + " out of range");
  }
  std::vector<int> idx;
  idx.reserve(static_cast<size_t>(length));
  if (k + length - 1 <= n) {
    for (int p = k; p <= k + length - 1; ++p) idx.push_back(p);
  } else {
    for (int p = k; p <= n; ++p) idx.push_back(p);
    for (int p = 1; p <= k + length - n - 1; ++p) idx.push_back(p);
  }
  return Permutation(std::move(idx));
}

PermutationDesign pruned_cyclic_design(int n, int length) {
  if (n < 1) throw Error("pruned_cyclic_design requires n >= 1");
  PermutationDesign design;
  design.strategy = DesignStrategy::kPrunedCyclic;
  design.n_passages = n;
  for (int k = 1; k <= n; ++k) {
    design.permutations.push_back(pruned_cyclic_permutation(n, length, k));
  }
  return design;
}

PermutationDesign variable_pruned_design(const RetrievalList& list,
                                         double tau) {
  const int n = list.size();
  if (n < 1) throw Error("variable_pruned_design requires n >= 1");
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw Error("tau must lie in (0, 1]");
  }
  std::vector<double> score(static_cast<size_t>(n));
  double total = 0.0;
  for (int p = 1; p <= n; ++p) {
    const auto& s = list.at_position(p).retriever_score;
    if (!s) {
      throw Error("missing retriever score for passage '" +
                  list.at_position(p).id + "'");
    }
    if (!std::isfinite(*s) || *s < 0.0) {
      throw Error("retriever score for passage '" + list.at_position(p).id +
                  "' must be finite and nonnegative");
    }
    score[static_cast<size_t>(p - 1)] = *s;
    total += *s;
  }
  const double target = tau * total;
  const double slack = 1e-12 * std::max(1.0, total);
  const int min_len = n == 1 ? 1 : 2;

  PermutationDesign design;
  design.strategy = DesignStrategy::kVariablePruned;
  design.n_passages = n;
  for (int k = 1; k <= n; ++k) {
    int length = n;
    double mass = 0.0;
    for (int len = 1; len <= n; ++len) {
      const int p = (k - 1 + len - 1) % n + 1;
      mass += score[static_cast<size_t>(p - 1)];
      if (mass + slack >= target) {
        length = len;
        break;
      }
    }
    length = std::clamp(length, min_len, n);
    design.permutations.push_back(pruned_cyclic_permutation(n, length, k));
  }
  return design;
}

std::vector<std::vector<int>> coverage_matrix(const PermutationDesign& design) {
  const int n = design.n_passages;
  std::vector<std::vector<int>> counts(static_cast<size_t>(n),
                                       std::vector<int>(static_cast<size_t>(n)));
  for (const auto& perm : design.permutations) {
    validate_permutation(perm, n);
    for (int j = 0; j < perm.length(); ++j) {
      ++counts[static_cast<size_t>(perm[j] - 1)][static_cast<size_t>(j)];
    }
  }
  return counts;
}

void validate_design(const PermutationDesign& design) {
  if (design.n_passages < 1) throw PermutationError("design has n < 1");
  std::set<std::vector<int>> seen;
  for (const auto& perm : design.permutations) {
    validate_permutation(perm, design.n_passages);
    if (!seen.insert(perm.indices()).second) {
      throw PermutationError("design repeats permutation " + to_string(perm));
    }
  }
}

}  // namespace permdebias
