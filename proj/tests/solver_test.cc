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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "permdebias/random.h"
#include "permdebias/solver.h"

namespace permdebias {
namespace {

std::vector<double> model_scores(const PermutationDesign& d,
                                 const std::vector<double>& a,
                                 const std::vector<double>& u) {
  std::vector<double> s;
  for (const auto& p : d.permutations) {
    double num = 0.0, mass = 0.0;
    for (int j = 0; j < p.length(); ++j) {
      num += a[j] * u[p[j] - 1];
      mass += a[j];
    }
    s.push_back(num / mass);
  }
  return s;
}

std::vector<int> argsort_desc(const std::vector<double>& v) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int i, int j) { return v[i] > v[j]; });
  return idx;
}

PermutationDesign all_perms(int n) {
  PermutationDesign d = random_design(n, static_cast<int>(saturating_factorial(n)), 0);
  std::sort(d.permutations.begin(), d.permutations.end());
  return d;
}

void expect_on_simplex(const std::vector<double>& a) {
  double total = 0.0;
  for (double v : a) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    total += v;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(ProjectSimplexTest, KnownProjections) {
  const std::vector<double> inside = {0.2, 0.3, 0.5};
  const auto p0 = project_simplex(inside);
  for (size_t i = 0; i < 3; ++i) EXPECT_NEAR(p0[i], inside[i], 1e-15);
  const std::vector<double> v = {1.0, 1.0, -1.0};
  const auto p1 = project_simplex(v);
  EXPECT_NEAR(p1[0], 0.5, 1e-15);
  EXPECT_NEAR(p1[1], 0.5, 1e-15);
  EXPECT_EQ(p1[2], 0.0);
  const std::vector<double> big = {3.0, 0.0};
  const auto p2 = project_simplex(big);
  EXPECT_EQ(p2[0], 1.0);
  EXPECT_EQ(p2[1], 0.0);
}

TEST(ProjectSimplexTest, RandomInputsLandOnSimplex) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(1 + t % 9);
    for (double& x : v) x = 4.0 * rng.normal();
    expect_on_simplex(project_simplex(v));
  }
}

TEST(FitTest, RecoversSmallExample) {
  const std::vector<double> a = {0.5, 0.3, 0.2};
  const std::vector<double> u = {3.0, 1.0, 2.0};
  const auto d = random_design(3, std::nullopt, 4);
  const auto m = fit(d, model_scores(d, a, u));
  EXPECT_LT(m.residual_sse, 1e-8);
  EXPECT_EQ(argsort_desc(m.utility.u), (std::vector<int>{0, 2, 1}));
  expect_on_simplex(m.bias.a);
  EXPECT_FALSE(m.degenerate);
  EXPECT_FALSE(m.underdetermined);
}

TEST(FitTest, MatchesFrozenNumericalOracle) {
  // Global minimum SSE over the simplex for these scores on all six orderings
  // of three passages (lexicographic order), from an independent dense grid
  // search polished with Nelder-Mead: 0.0162382990.
  const auto d = all_perms(3);
  const std::vector<double> s = {2.1, 1.7, 2.6, 1.2, 2.2, 1.5};
  const auto m = fit(d, s);
  EXPECT_NEAR(m.residual_sse, 0.0162382990, 1e-6);
  expect_on_simplex(m.bias.a);
}

TEST(FitTest, NoWorseThanBruteForceOracle) {
  Rng rng(21);
  const auto d = all_perms(3);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> s(6);
    for (double& v : s) v = rng.normal();
    SolverConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(t);
    const auto m = fit(d, s, cfg);
    const auto oracle = brute_force_fit(d, s, 0.05);
    EXPECT_LE(m.residual_sse, oracle.residual_sse + 1e-6) << "instance " << t;
  }
}

TEST(FitTest, LossHistoryIsMonotone) {
  Rng rng(2);
  const auto d = random_design(6, std::nullopt, 2);
  std::vector<double> s(static_cast<size_t>(d.size()));
  for (double& v : s) v = rng.normal();
  const auto m = fit(d, s);
  ASSERT_GE(m.loss_history.size(), 2u);
  for (size_t i = 1; i < m.loss_history.size(); ++i) {
    EXPECT_LE(m.loss_history[i], m.loss_history[i - 1] + 1e-12);
  }
}

TEST(FitTest, CyclicSumIdentity) {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 7;
    const auto d = cyclic_design(n);
    std::vector<double> s(static_cast<size_t>(n));
    for (double& v : s) v = rng.normal();
    const auto m = fit(d, s);
    const auto pred = predict(m, d);
    const double lhs = std::accumulate(pred.begin(), pred.end(), 0.0);
    const double rhs =
        std::accumulate(m.utility.u.begin(), m.utility.u.end(), 0.0);
    EXPECT_NEAR(lhs, rhs, 1e-9);
  }
}

TEST(FitTest, ShiftEquivariance) {
  const std::vector<double> a = {0.45, 0.3, 0.15, 0.1};
  const std::vector<double> u = {1.0, 4.0, 2.5, 0.5};
  const auto d = random_design(4, std::nullopt, 3);
  auto s = model_scores(d, a, u);
  const auto m0 = fit(d, s);
  for (double& v : s) v += 7.0;
  const auto m1 = fit(d, s);
  for (size_t i = 0; i < u.size(); ++i) {
    EXPECT_NEAR(m1.utility.u[i], m0.utility.u[i] + 7.0, 1e-5);
  }
  EXPECT_EQ(argsort_desc(m0.utility.u), argsort_desc(m1.utility.u));
}

TEST(FitTest, DeterministicForFixedSeed) {
  Rng rng(4);
  const auto d = random_design(5, std::nullopt, 9);
  std::vector<double> s(static_cast<size_t>(d.size()));
  for (double& v : s) v = rng.normal();
  SolverConfig cfg;
  cfg.seed = 77;
  const auto m0 = fit(d, s, cfg);
  const auto m1 = fit(d, s, cfg);
  EXPECT_EQ(m0.bias.a, m1.bias.a);
  EXPECT_EQ(m0.utility.u, m1.utility.u);
  EXPECT_EQ(m0.residual_sse, m1.residual_sse);
}

TEST(FitTest, ConstantScoresAreDegenerate) {
  const auto d = cyclic_design(4);
  const std::vector<double> s(4, 2.5);
  const auto m = fit(d, s);
  EXPECT_TRUE(m.degenerate);
  for (double v : m.utility.u) EXPECT_DOUBLE_EQ(v, 2.5);
  expect_on_simplex(m.bias.a);
}

TEST(FitTest, FlagsUnderdeterminedDesigns) {
  const auto d = cyclic_design(4);  // 4 < 2N - 1
  const std::vector<double> s = {1.0, 2.0, 3.0, 0.5};
  EXPECT_TRUE(fit(d, s).underdetermined);
  EXPECT_FALSE(fit(random_design(4, std::nullopt, 1),
                   std::vector<double>(12, 0.0))
                   .underdetermined);
}

TEST(FitTest, SinglePassage) {
  PermutationDesign d;
  d.n_passages = 1;
  d.permutations = {Permutation({1})};
  const std::vector<double> s = {-1.5};
  const auto m = fit(d, s);
  EXPECT_EQ(m.bias.a, std::vector<double>{1.0});
  EXPECT_NEAR(m.utility.u[0], -1.5, 1e-12);
}

TEST(FitTest, PrunedDesignsFitRenormalizedModel) {
  const std::vector<double> a = {0.4, 0.3, 0.2, 0.1};
  const std::vector<double> u = {2.0, 0.5, 3.0, 1.0};
  PermutationDesign d = pruned_cyclic_design(4, 2);
  const auto extra = pruned_cyclic_design(4, 3);
  d.permutations.insert(d.permutations.end(), extra.permutations.begin(),
                        extra.permutations.end());
  const auto full = random_design(4, 4, 5);
  d.permutations.insert(d.permutations.end(), full.permutations.begin(),
                        full.permutations.end());
  const auto s = model_scores(d, a, u);
  const auto m = fit(d, s);
  EXPECT_LT(m.residual_sse, 1e-8);
  const auto pred = predict(m, d);
  for (size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(pred[i], s[i], 1e-4);
}

TEST(FitTest, RejectsBadInput) {
  const auto d = cyclic_design(3);
  EXPECT_THROW(fit(d, std::vector<double>{1.0, 2.0}), Error);
  EXPECT_THROW(fit(d, std::vector<double>{1.0, NAN, 2.0}), Error);
  SolverConfig cfg;
  cfg.restarts = 0;
  EXPECT_THROW(fit(d, std::vector<double>{1.0, 2.0, 3.0}, cfg), Error);
  const auto m = fit(d, std::vector<double>{1.0, 2.0, 3.0});
  EXPECT_THROW(predict(m, cyclic_design(4)), Error);
}

TEST(FitTest, TraceIsWrittenAsJsonLines) {
  const auto d = random_design(4, std::nullopt, 1);
  std::vector<double> s(12);
  std::iota(s.begin(), s.end(), 0.0);
  SolverConfig cfg;
  cfg.record_trace = true;
  const auto m = fit(d, s, cfg);
  ASSERT_FALSE(m.trace.empty());
  std::ostringstream os;
  write_fit_trace(m, os);
  const std::string text = os.str();
  EXPECT_EQ(static_cast<size_t>(std::count(text.begin(), text.end(), '\n')),
            m.trace.size());
  EXPECT_NE(text.find("\"loss\""), std::string::npos);
}

TEST(BruteForceTest, ExactOnNoiselessInstance) {
  const auto d = all_perms(3);
  const auto s = model_scores(d, {0.5, 0.3, 0.2}, {3.0, 1.0, 2.0});
  const auto m = brute_force_fit(d, s, 0.05);
  EXPECT_LT(m.residual_sse, 1e-12);
  EXPECT_THROW(brute_force_fit(cyclic_design(6), std::vector<double>(6), 0.1),
               Error);
}

TEST(InitialBiasTest, LinearDecayAndUniform) {
  const auto a = initial_bias(4, SolverInit::kLinearDecay, 0);
  EXPECT_NEAR(a[0], 0.4, 1e-15);
  EXPECT_NEAR(a[3], 0.1, 1e-15);
  const auto u = initial_bias(4, SolverInit::kUniform, 0);
  for (double v : u) EXPECT_DOUBLE_EQ(v, 0.25);
  expect_on_simplex(initial_bias(6, SolverInit::kRandomSimplex, 3));
}

}  // namespace
}  // namespace permdebias
