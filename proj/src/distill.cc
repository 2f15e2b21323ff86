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

#include "permdebias/distill.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "permdebias/concurrency.h"
#include "permdebias/random.h"

namespace permdebias {

using nlohmann::json;

void DistillRecord::validate() const {
  if (perms.size() != scores.size()) {
    throw ValidationError("distill record '" + query_id + "' has " +
                          std::to_string(perms.size()) + " perms but " +
                          std::to_string(scores.size()) + " scores");
  }
  if (perms.size() < 2) {
    throw ValidationError("distill record '" + query_id +
                          "' needs at least two permutations");
  }
}

json DistillRecord::to_json() const {
  json p = json::array();
  for (const auto& perm : perms) p.push_back(perm.indices());
  return {{"query_id", query_id},
          {"model_tag", model_tag},
          {"perms", p},
          {"scores", scores}};
}

DistillRecord DistillRecord::from_json(const json& j) {
  DistillRecord r;
  try {
    r.query_id = j.at("query_id").get<std::string>();
    r.model_tag = j.at("model_tag").get<std::string>();
    for (const auto& p : j.at("perms")) {
      r.perms.emplace_back(p.get<std::vector<int>>());
    }
    r.scores = j.at("scores").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed distill record: ") + e.what());
  }
  r.validate();
  return r;
}

DistillBuildStats build_distill_dataset(std::span<const RetrievalList> queries,
                                        Backend& backend, int k,
                                        std::uint64_t seed,
                                        const std::filesystem::path& sink,
                                        const BackendOptions& opts,
                                        ScoreCache* cache, int jobs) {
  if (k < 2) throw Error("distillation needs k >= 2 permutations per query");
  std::set<std::string> done;
  {
    std::ifstream in(sink);
    std::string line;
    while (std::getline(in, line)) {
      try {
        const json j = json::parse(line);
        done.insert(j.at("query_id").get<std::string>());
      } catch (const json::exception&) {
        // A torn trailing line from an interrupted run; it gets rebuilt.
      }
    }
  }
  std::ofstream out(sink, std::ios::app);
  if (!out) throw Error("cannot write distill sink " + sink.string());

  DistillBuildStats stats;
  std::vector<const RetrievalList*> todo;
  for (const auto& q : queries) {
    if (done.contains(q.query.id)) {
      ++stats.skipped_existing;
    } else {
      todo.push_back(&q);
    }
  }
  std::vector<std::optional<DistillRecord>> records(todo.size());
  // Scoring inside one query stays sequential; queries fan out.
  BackendOptions inner = opts;
  inner.max_concurrency = 1;
  const auto errors =
      parallel_for(todo.size(), std::max(1, jobs), [&](size_t i) {
        const RetrievalList& list = *todo[i];
        const ValidationReport report = validate_retrieval_list(list);
        if (!report.ok()) throw ValidationError(report.summary());
        const PermutationDesign design = random_design(
            list.size(), k, derive_seed(seed, list.query.id));
        if (design.size() < 2) {
          throw Error("fewer than two distinct orderings for N=" +
                      std::to_string(list.size()));
        }
        const auto scored = score_batch(backend, list, design, inner, cache);
        DistillRecord rec;
        rec.query_id = list.query.id;
        rec.model_tag = backend.model_tag();
        rec.perms = design.permutations;
        rec.scores = effective_scores(scored);
        records[i] = std::move(rec);
      });
  for (size_t i = 0; i < todo.size(); ++i) {
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        stats.failures.push_back({todo[i]->query.id, e.what()});
      }
      continue;
    }
    out << records[i]->to_json().dump() << '\n';
    ++stats.written;
  }
  out.flush();
  if (!out) throw Error("failed writing distill sink " + sink.string());
  return stats;
}

std::vector<double> softmax(std::span<const double> scores,
                            double temperature) {
  if (!(temperature > 0.0)) throw Error("softmax temperature must be > 0");
  if (scores.empty()) throw Error("softmax of an empty sequence");
  double max_s = -INFINITY;
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error("softmax input is not finite");
    max_s = std::max(max_s, s);
  }
  std::vector<double> p(scores.size());
  double total = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp((scores[i] - max_s) / temperature);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<int> sample_subset(int length, int size, std::uint64_t seed) {
  if (size < 0 || size > length) {
    throw Error("subset size " + std::to_string(size) + " outside [0, " +
                std::to_string(length) + "]");
  }
  std::vector<int> idx(static_cast<size_t>(length));
  std::iota(idx.begin(), idx.end(), 0);
  if (size < length) {
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(static_cast<size_t>(size));
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

double kl_distill_loss(std::span<const double> teacher,
                       std::span<const double> student, int subset_size,
                       std::uint64_t seed, double temperature,
                       KlDirection direction) {
  if (teacher.size() != student.size()) {
    throw Error("teacher has " + std::to_string(teacher.size()) +
                " scores but student has " + std::to_string(student.size()));
  }
  if (teacher.size() < 2) throw Error("KL loss needs at least two scores");
  if (subset_size < 2 || subset_size > static_cast<int>(teacher.size())) {
    throw Error("subset size must lie in [2, " +
                std::to_string(teacher.size()) + "]");
  }
  const auto idx =
      sample_subset(static_cast<int>(teacher.size()), subset_size, seed);
  std::vector<double> t, s;
  for (int i : idx) {
    t.push_back(teacher[static_cast<size_t>(i)]);
    s.push_back(student[static_cast<size_t>(i)]);
  }
  std::vector<double> p = softmax(t, temperature);
  std::vector<double> q = softmax(s, temperature);
  if (direction == KlDirection::kStudentTeacher) std::swap(p, q);
  double kl = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(0.0, kl);
}

}  // namespace permdebias
