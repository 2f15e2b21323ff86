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

// Deterministic randomness. std::mt19937_64's output sequence is fixed by the
// standard, but the std distributions are not, so sampling helpers are
// implemented here to keep outputs identical across standard libraries.

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace permdebias {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

// Per-item sub-seed: splitmix64(seed ^ fnv1a64(key)).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, bound), bound >= 1, without modulo bias.
  std::uint64_t uniform_index(std::uint64_t bound);
  // Uniform in [0, 1).
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  // Standard normal via Box-Muller.
  double normal();
  // Exp(1).
  double exponential();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Flat Dirichlet(1, ..., 1) sample of dimension n.
  std::vector<double> simplex_point(int n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace permdebias
