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

// Permutation designs: which orderings of the retrieved passages get scored.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "permdebias/core.h"

namespace permdebias {

enum class DesignStrategy { kRandom, kCyclic, kPrunedCyclic, kVariablePruned };

std::string to_string(DesignStrategy s);

struct PermutationDesign {
  std::vector<Permutation> permutations;
  DesignStrategy strategy = DesignStrategy::kCyclic;
  int n_passages = 0;
  std::optional<std::uint64_t> seed;

  int size() const { return static_cast<int>(permutations.size()); }
  bool empty() const { return permutations.empty(); }
};

// n! saturated at UINT64_MAX.
std::uint64_t saturating_factorial(int n);

// `m` distinct uniformly sampled full-length permutations of 1..n. m defaults
// to 3n and is silently capped at n!.
PermutationDesign random_design(int n, std::optional<int> m,
                                std::uint64_t seed);

// phi^(k) = [k, k+1, ..., n, 1, ..., k-1] for k = 1..n.
Permutation cyclic_permutation(int n, int k);
PermutationDesign cyclic_design(int n);

// Length-L prefix of phi^(k) for k = 1..n. Throws Error unless 1 <= L <= n.
Permutation pruned_cyclic_permutation(int n, int length, int k);
PermutationDesign pruned_cyclic_design(int n, int length);

// Cyclic starts whose prefix length L_k is the shortest prefix holding at
// least tau of the total retriever-score mass, clamped to [2, n] (to [1, 1]
// when n == 1). Requires finite, nonnegative retriever scores on every
// passage and tau in (0, 1].
PermutationDesign variable_pruned_design(const RetrievalList& list, double tau);

// Entry [p-1][j-1] counts how often passage p sits at position j.
std::vector<std::vector<int>> coverage_matrix(const PermutationDesign& design);

// Throws PermutationError on a malformed or duplicated entry.
void validate_design(const PermutationDesign& design);

}  // namespace permdebias
