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

// Disentangles per-position bias `a` (on the probability simplex) from
// per-passage utility `u` given observed permutation scores s_i, by
// minimizing
//
//   sum_i ( sum_j a_j * u[pi_i[j]] / A_i  -  s_i )^2,   A_i = sum_{j<=L_i} a_j
//
// subject to sum_j a_j = 1, 0 <= a_j <= 1. For full-length permutations A_i
// is 1; pruned permutations renormalize a over their occupied prefix.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "permdebias/permute.h"

namespace permdebias {

struct BiasProfile {
  std::vector<double> a;
  int size() const { return static_cast<int>(a.size()); }
};

// Indexed by retriever position: u[0] belongs to p1.
struct UtilityVector {
  std::vector<double> u;
  int size() const { return static_cast<int>(u.size()); }
};

enum class SolverInit { kLinearDecay, kUniform, kRandomSimplex };

struct SolverConfig {
  int restarts = 8;
  int max_iterations = 500;
  // Stop once the outer objective decreases by less than this.
  double tolerance = 1e-10;
  double ridge = 1e-8;
  // Restart residuals closer than this are tied; the lower restart index
  // wins. Restart 0 starts from `init`, so this keeps its orientation of the
  // bias profile when another restart only matches its fit.
  double tie_tolerance = 1e-8;
  std::uint64_t seed = 0;
  SolverInit init = SolverInit::kLinearDecay;
  // Keep per-iteration (loss, a) snapshots of the winning restart.
  bool record_trace = false;
};

struct FitTraceEntry {
  int iteration = 0;
  double loss = 0.0;
  std::vector<double> a;
};

struct DisentangledModel {
  BiasProfile bias;
  UtilityVector utility;
  double residual_sse = 0.0;
  int iterations = 0;
  int restarts_used = 0;
  bool converged = false;
  bool underdetermined = false;
  // Scores carried no ordering signal; utilities are constant.
  bool degenerate = false;
  // Objective (SSE + ridge * |u|^2) after initialization and after every
  // outer iteration of the winning restart. Non-increasing.
  std::vector<double> loss_history;
  std::vector<FitTraceEntry> trace;

  int n() const { return bias.size(); }
};

// Throws Error on inconsistent lengths or N = 0.
DisentangledModel fit(const PermutationDesign& design,
                      std::span<const double> scores,
                      const SolverConfig& config = {});

std::vector<double> predict(const DisentangledModel& model,
                            const PermutationDesign& design);

// Exhaustive oracle: enumerates `a` on the simplex grid of step `grid_step`
// and solves the u-subproblem exactly (minimum-norm least squares) at each
// point. Only for N <= 5.
DisentangledModel brute_force_fit(const PermutationDesign& design,
                                  std::span<const double> scores,
                                  double grid_step);

// Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(std::span<const double> v);

// Initial bias profile for the given init scheme (restart 0).
std::vector<double> initial_bias(int n, SolverInit init, std::uint64_t seed);

// JSONL: {"iteration":..,"loss":..,"a":[..]} per recorded iteration.
void write_fit_trace(const DisentangledModel& model, std::ostream& os);

}  // namespace permdebias
