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

// Offline teacher permutation scores and the KL loss used to distill them
// into a student scorer.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "permdebias/backend.h"
#include "permdebias/core.h"

namespace permdebias {

class ScoreCache;

struct DistillRecord {
  std::string query_id;
  std::string model_tag;
  std::vector<Permutation> perms;
  std::vector<double> scores;

  // Throws ValidationError unless perms and scores agree in length (>= 2).
  void validate() const;
  nlohmann::json to_json() const;
  static DistillRecord from_json(const nlohmann::json& j);
};

struct DistillFailure {
  std::string query_id;
  std::string message;
};

struct DistillBuildStats {
  int written = 0;
  int skipped_existing = 0;
  std::vector<DistillFailure> failures;
};

// Scores min(k, N!) distinct random orderings per query, seeded by
// derive_seed(seed, query_id), and appends one record per query to `sink`.
// Queries already present in the sink are skipped, as are queries whose
// scoring fails (reported in `failures`). Throws Error if k < 2 or the sink
// cannot be written.
DistillBuildStats build_distill_dataset(std::span<const RetrievalList> queries,
                                        Backend& backend, int k,
                                        std::uint64_t seed,
                                        const std::filesystem::path& sink,
                                        const BackendOptions& opts = {},
                                        ScoreCache* cache = nullptr,
                                        int jobs = 1);

// exp(s_i / T) / sum_j exp(s_j / T) with max subtraction. Throws Error if
// T <= 0, the input is empty or holds a non-finite value.
std::vector<double> softmax(std::span<const double> scores,
                            double temperature = 1.0);

enum class KlDirection { kTeacherStudent, kStudentTeacher };

// Draws subset_size distinct indices from `seed`, then returns
// KL(softmax(teacher) || softmax(student)) on that subset (or the reverse).
double kl_distill_loss(std::span<const double> teacher,
                       std::span<const double> student, int subset_size = 8,
                       std::uint64_t seed = 0, double temperature = 1.0,
                       KlDirection direction = KlDirection::kTeacherStudent);

// Sorted distinct indices in [0, length).
std::vector<int> sample_subset(int length, int size, std::uint64_t seed);

}  // namespace permdebias
