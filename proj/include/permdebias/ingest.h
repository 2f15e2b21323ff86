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

// Dataset JSONL (one query per line) and synthetic corpora with ground truth.
//
// Record: {"query_id", "query", "answer"?, "passages": [{"id", "text",
//          "rank", "score"?}], "gold_ids"?}
// Sidecar: {"query_id", "a_star", "u_star", "argsort"}

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "permdebias/core.h"
#include "permdebias/sim_backend.h"

namespace permdebias {

struct LoadIssue {
  int line = 0;  // 1-based
  std::string message;
};

struct LoadResult {
  std::vector<RetrievalList> records;
  std::vector<LoadIssue> issues;
};

nlohmann::json to_json(const RetrievalList& list);
// Throws ValidationError on schema errors (missing or mistyped fields).
RetrievalList retrieval_list_from_json(const nlohmann::json& j);

// Throws Error if the file cannot be read. Malformed or invalid lines are
// collected in `issues`; with `strict` the first one throws ValidationError.
LoadResult load_dataset(const std::filesystem::path& path, bool strict = false);

void write_dataset(const std::filesystem::path& path,
                   std::span<const RetrievalList> records);

struct GroundTruth {
  std::string query_id;
  std::vector<double> a_star;
  std::vector<double> u_star;
  // 1-based retriever positions ordered by u_star descending.
  std::vector<int> argsort;

  nlohmann::json to_json() const;
  static GroundTruth from_json(const nlohmann::json& j);
};

std::vector<GroundTruth> load_truth(const std::filesystem::path& path);

// Shape of the per-query oracle drawn by the synthetic generator.
struct SynthTemplate {
  // Strictly decreasing a* with consecutive gaps >= min_bias_gap; otherwise
  // a* is a flat-Dirichlet draw. The gap shrinks to 0.9 * 2 / (N (N - 1)) when
  // the requested one cannot fit on the simplex.
  bool decreasing_bias = true;
  double min_bias_gap = 0.05;
  double utility_min = 0.0;
  double utility_max = 5.0;
  // u* values are spaced at least this far apart (before shuffling).
  double min_utility_gap = 0.5;
};

struct SynthCorpus {
  std::vector<RetrievalList> dataset;
  std::vector<GroundTruth> truth;
};

// Deterministic in (n_queries, n_passages, tmpl, seed). The gold passage of
// each query is its highest-utility passage and the gold answer is that
// passage's id, which is what the simulated generator answers with.
SynthCorpus make_synth_corpus(int n_queries, int n_passages,
                              const SynthTemplate& tmpl, std::uint64_t seed);

void write_truth(const std::filesystem::path& path,
                 std::span<const GroundTruth> truth);

// Oracle config for one query from its ground truth.
SimOracleConfig oracle_from_truth(const GroundTruth& truth, double noise_sigma,
                                  std::uint64_t seed);

}  // namespace permdebias
