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

#include "permdebias/solver.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "permdebias/random.h"

namespace permdebias {
namespace {

// Prefix mass below this is treated as empty; the equation then averages u
// uniformly over its prefix.
constexpr double kMinPrefixMass = 1e-12;
constexpr double kDegenerateSpread = 1e-12;

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

// One equation per design entry: the 0-based passage at each occupied
// position, and whether it spans all N positions.
struct Equation {
  std::vector<int> passage;
  bool full = false;
};

class Problem {
 public:
  Problem(const PermutationDesign& design, std::span<const double> scores)
      : n_(design.n_passages), scores_(scores.begin(), scores.end()) {
    if (n_ < 1) throw Error("fit requires N >= 1");
    if (static_cast<int>(scores.size()) != design.size()) {
      throw Error("score count " + std::to_string(scores.size()) +
                  " does not match design size " +
                  std::to_string(design.size()));
    }
    for (double s : scores_) {
      if (!std::isfinite(s)) throw Error("non-finite score");
    }
    for (const auto& perm : design.permutations) {
      validate_permutation(perm, n_);
      Equation eq;
      for (int idx : perm.indices()) eq.passage.push_back(idx - 1);
      eq.full = perm.length() == n_;
      equations_.push_back(std::move(eq));
    }
  }

  int n() const { return n_; }
  int m() const { return static_cast<int>(equations_.size()); }
  const std::vector<double>& scores() const { return scores_; }

  // Effective position weights of equation i (sum to 1).
  void weights(int i, std::span<const double> a, std::vector<double>& w) const {
    const auto& eq = equations_[static_cast<size_t>(i)];
    const size_t len = eq.passage.size();
    w.assign(len, 0.0);
    if (eq.full) {
      std::copy_n(a.begin(), len, w.begin());
      return;
    }
    double mass = 0.0;
    for (size_t j = 0; j < len; ++j) mass += a[j];
    if (mass < kMinPrefixMass) {
      std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(len));
      return;
    }
    for (size_t j = 0; j < len; ++j) w[j] = a[j] / mass;
  }

  double predict(int i, std::span<const double> a,
                 std::span<const double> u) const {
    const auto& eq = equations_[static_cast<size_t>(i)];
    std::vector<double> w;
    weights(i, a, w);
    double s = 0.0;
    for (size_t j = 0; j < w.size(); ++j) {
      s += w[j] * u[static_cast<size_t>(eq.passage[j])];
    }
    return s;
  }

  double sse(std::span<const double> a, std::span<const double> u) const {
    double total = 0.0;
    for (int i = 0; i < m(); ++i) {
      const double r = predict(i, a, u) - scores_[static_cast<size_t>(i)];
      total += r * r;
    }
    return total;
  }

  // Gradient of the SSE with respect to a, holding u fixed.
  std::vector<double> gradient_a(std::span<const double> a,
                                 std::span<const double> u) const {
    std::vector<double> g(static_cast<size_t>(n_), 0.0);
    for (int i = 0; i < m(); ++i) {
      const auto& eq = equations_[static_cast<size_t>(i)];
      const double pred = predict(i, a, u);
      const double r2 = 2.0 * (pred - scores_[static_cast<size_t>(i)]);
      const size_t len = eq.passage.size();
      if (eq.full) {
        for (size_t j = 0; j < len; ++j) {
          g[j] += r2 * u[static_cast<size_t>(eq.passage[j])];
        }
        continue;
      }
      double mass = 0.0;
      for (size_t j = 0; j < len; ++j) mass += a[j];
      if (mass < kMinPrefixMass) continue;
      for (size_t j = 0; j < len; ++j) {
        g[j] += r2 * (u[static_cast<size_t>(eq.passage[j])] - pred) / mass;
      }
    }
    return g;
  }

  // Design matrix W (M x N) with W(i, p) = weight of passage p in equation i.
  Eigen::MatrixXd design_matrix(std::span<const double> a) const {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m(), n_);
    std::vector<double> wt;
    for (int i = 0; i < m(); ++i) {
      weights(i, a, wt);
      const auto& eq = equations_[static_cast<size_t>(i)];
      for (size_t j = 0; j < wt.size(); ++j) w(i, eq.passage[j]) += wt[j];
    }
    return w;
  }

  Eigen::VectorXd score_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(scores_.data(), m());
  }

 private:
  int n_;
  std::vector<double> scores_;
  std::vector<Equation> equations_;
};

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// argmin_u |W u - s|^2 + ridge |u|^2.
std::vector<double> solve_utilities(const Problem& problem,
                                    std::span<const double> a, double ridge) {
  const Eigen::MatrixXd w = problem.design_matrix(a);
  const Eigen::VectorXd s = problem.score_vector();
  if (ridge > 0.0) {
    Eigen::MatrixXd normal = w.transpose() * w;
    normal.diagonal().array() += ridge;
    return to_std(normal.ldlt().solve(w.transpose() * s));
  }
  return to_std(w.completeOrthogonalDecomposition().solve(s));
}

double objective(const Problem& problem, std::span<const double> a,
                 std::span<const double> u, double ridge) {
  return problem.sse(a, u) + ridge * dot(u, u);
}

// Reduced objective: g(a) = min_u J(a, u), with the minimizing u written to
// `u`.
double reduced_objective(const Problem& problem, std::span<const double> a,
                         double ridge, std::vector<double>& u) {
  u = solve_utilities(problem, a, ridge);
  return objective(problem, a, u, ridge);
}

struct RestartResult {
  std::vector<double> a;
  std::vector<double> u;
  double sse = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> loss_history;
  std::vector<FitTraceEntry> trace;
};

// Each outer iteration takes one projected-gradient step in a on the
// simplex, with u re-solved in closed form at every trial point. Since u is
// optimal for a, the gradient of g is the partial gradient of the SSE in a.
// Trial steps start from a Barzilai-Borwein estimate and backtrack until the
// projected Armijo condition holds, so the loss never increases.
RestartResult run_restart(const Problem& problem, std::vector<double> a,
                          const SolverConfig& config) {
  RestartResult res;
  std::vector<double> u;
  double loss = reduced_objective(problem, a, config.ridge, u);
  res.loss_history.push_back(loss);
  if (config.record_trace) res.trace.push_back({0, loss, a});

  const size_t n = a.size();
  std::vector<double> grad = problem.gradient_a(a, u);
  std::vector<double> prev_a, prev_grad;
  std::vector<double> cand(n), diff(n), cand_u;
  double step = 1.0;
  int it = 0;
  while (it < config.max_iterations) {
    ++it;
    if (!prev_a.empty()) {
      double ss = 0.0, sy = 0.0;
      for (size_t j = 0; j < n; ++j) {
        const double dx = a[j] - prev_a[j];
        const double dg = grad[j] - prev_grad[j];
        ss += dx * dx;
        sy += dx * dg;
      }
      if (sy > 0.0 && ss > 0.0) step = ss / sy;
    }
    double next = loss;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (size_t j = 0; j < n; ++j) cand[j] = a[j] - step * grad[j];
      cand = project_simplex(cand);
      for (size_t j = 0; j < n; ++j) diff[j] = cand[j] - a[j];
      const double moved = dot(diff, diff);
      if (moved == 0.0) break;
      next = reduced_objective(problem, cand, config.ridge, cand_u);
      if (next <= loss + dot(grad, diff) + moved / (2.0 * step) &&
          next <= loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      next = loss;
    } else {
      prev_a = a;
      prev_grad = grad;
      a = cand;
      u = cand_u;
      grad = problem.gradient_a(a, u);
    }
    res.loss_history.push_back(next);
    if (config.record_trace) res.trace.push_back({it, next, a});
    const double decrease = loss - next;
    loss = next;
    if (decrease < config.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.iterations = it;
  res.sse = problem.sse(a, u);
  res.a = std::move(a);
  res.u = std::move(u);
  return res;
}

}  // namespace

std::vector<double> project_simplex(std::span<const double> v) {
  const size_t n = v.size();
  if (n == 0) throw Error("project_simplex requires a non-empty vector");
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (size_t k = 0; k < n; ++k) {
    cumsum += sorted[k];
    const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0.0) theta = t;
  }
  std::vector<double> out(n);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    out[i] = std::max(v[i] - theta, 0.0);
    total += out[i];
  }
  // Remove the last ulp-level drift so the sum is 1 to machine precision.
  if (total > 0.0) {
    for (auto& x : out) x = std::min(x / total, 1.0);
  }
  return out;
}

std::vector<double> initial_bias(int n, SolverInit init, std::uint64_t seed) {
  std::vector<double> a(static_cast<size_t>(n));
  switch (init) {
    case SolverInit::kLinearDecay: {
      const double total = n * (n + 1) / 2.0;
      for (int j = 0; j < n; ++j) a[static_cast<size_t>(j)] = (n - j) / total;
      break;
    }
    case SolverInit::kUniform:
      std::fill(a.begin(), a.end(), 1.0 / n);
      break;
    case SolverInit::kRandomSimplex: {
      Rng rng(derive_seed(seed, std::uint64_t{0}));
      a = rng.simplex_point(n);
      break;
    }
  }
  return a;
}

DisentangledModel fit(const PermutationDesign& design,
                      std::span<const double> scores,
                      const SolverConfig& config) {
  if (config.restarts < 1) throw Error("solver needs at least one restart");
  if (!(config.tolerance > 0.0)) throw Error("solver tolerance must be > 0");
  if (config.ridge < 0.0) throw Error("solver ridge must be >= 0");
  if (config.tie_tolerance < 0.0) throw Error("tie tolerance must be >= 0");
  const Problem problem(design, scores);
  const int n = problem.n();

  DisentangledModel model;
  model.underdetermined = problem.m() < 2 * n - 1;

  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  if (scores.empty() || *hi - *lo <= kDegenerateSpread) {
    const double c =
        scores.empty()
            ? 0.0
            : std::accumulate(scores.begin(), scores.end(), 0.0) /
                  static_cast<double>(scores.size());
    model.bias.a = initial_bias(n, config.init, config.seed);
    model.utility.u.assign(static_cast<size_t>(n), c);
    model.residual_sse = problem.sse(model.bias.a, model.utility.u);
    model.converged = true;
    model.degenerate = true;
    model.loss_history.push_back(
        objective(problem, model.bias.a, model.utility.u, config.ridge));
    return model;
  }

  RestartResult best;
  int best_index = -1;
  for (int r = 0; r < config.restarts; ++r) {
    std::vector<double> a0;
    if (r == 0) {
      a0 = initial_bias(n, config.init, config.seed);
    } else {
      Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(r)));
      a0 = rng.simplex_point(n);
    }
    RestartResult res = run_restart(problem, std::move(a0), config);
    // A later restart must beat the incumbent by more than tie_tolerance;
    // ties go to the lower restart index.
    if (best_index < 0 || res.sse < best.sse - config.tie_tolerance) {
      best = std::move(res);
      best_index = r;
    }
  }

  model.bias.a = std::move(best.a);
  model.utility.u = std::move(best.u);
  model.residual_sse = best.sse;
  model.iterations = best.iterations;
  model.restarts_used = config.restarts;
  model.converged = best.converged;
  model.loss_history = std::move(best.loss_history);
  model.trace = std::move(best.trace);
  return model;
}

std::vector<double> predict(const DisentangledModel& model,
                            const PermutationDesign& design) {
  if (model.n() != design.n_passages ||
      model.utility.size() != design.n_passages) {
    throw Error("model has N=" + std::to_string(model.n()) +
                " but design has N=" + std::to_string(design.n_passages));
  }
  std::vector<double> zeros(static_cast<size_t>(design.size()), 0.0);
  const Problem problem(design, zeros);
  std::vector<double> out;
  out.reserve(zeros.size());
  for (int i = 0; i < problem.m(); ++i) {
    out.push_back(problem.predict(i, model.bias.a, model.utility.u));
  }
  return out;
}

DisentangledModel brute_force_fit(const PermutationDesign& design,
                                  std::span<const double> scores,
                                  double grid_step) {
  const Problem problem(design, scores);
  const int n = problem.n();
  if (n > 5) throw Error("brute_force_fit supports N <= 5");
  if (!(grid_step > 0.0)) throw Error("grid_step must be positive");
  const int steps = static_cast<int>(std::lround(1.0 / grid_step));
  if (steps < 1 || std::abs(steps * grid_step - 1.0) > 1e-9) {
    throw Error("grid_step must divide 1");
  }

  // Rows of W sum to one, so solving for the centered scores and adding the
  // mean back is an exact least-squares solution; constant scores then map
  // to constant utilities at every grid point.
  const Eigen::VectorXd s = problem.score_vector();
  const double mean = s.size() > 0 ? s.mean() : 0.0;
  const Eigen::VectorXd centered = s.array() - mean;

  DisentangledModel best;
  best.residual_sse = std::numeric_limits<double>::infinity();
  best.underdetermined = problem.m() < 2 * n - 1;
  best.converged = true;

  std::vector<int> counts(static_cast<size_t>(n), 0);
  std::vector<double> a(static_cast<size_t>(n));
  int evaluated = 0;
  // Compositions of `steps` into n parts, first part descending.
  auto visit = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == n - 1) {
      counts[static_cast<size_t>(pos)] = remaining;
      for (int j = 0; j < n; ++j) {
        a[static_cast<size_t>(j)] =
            static_cast<double>(counts[static_cast<size_t>(j)]) / steps;
      }
      const Eigen::MatrixXd w = problem.design_matrix(a);
      Eigen::VectorXd u = w.completeOrthogonalDecomposition().solve(centered);
      u.array() += mean;
      const double sse = (w * u - s).squaredNorm();
      ++evaluated;
      if (sse < best.residual_sse) {
        best.residual_sse = sse;
        best.bias.a = a;
        best.utility.u = to_std(u);
      }
      return;
    }
    for (int c = remaining; c >= 0; --c) {
      counts[static_cast<size_t>(pos)] = c;
      self(self, pos + 1, remaining - c);
    }
  };
  visit(visit, 0, steps);
  best.iterations = evaluated;
  best.restarts_used = 1;
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  best.degenerate = scores.empty() || *hi - *lo <= kDegenerateSpread;
  return best;
}

void write_fit_trace(const DisentangledModel& model, std::ostream& os) {
  for (const auto& entry : model.trace) {
    nlohmann::json j;
    j["iteration"] = entry.iteration;
    j["loss"] = entry.loss;
    j["a"] = entry.a;
    os << j.dump() << '\n';
  }
}

}  // namespace permdebias
