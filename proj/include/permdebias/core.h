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

// Shared domain types: queries, passages, retrieval lists, permutations and
// rankings. Passage positions are 1-based and refer to the retriever rank.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace permdebias {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PermutationError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

struct Query {
  std::string id;
  std::string text;
  std::optional<std::string> gold_answer;
  std::vector<std::string> gold_passage_ids;
};

struct Passage {
  std::string id;
  std::string text;
  int retriever_rank = 1;
  std::optional<double> retriever_score;
};

struct RetrievalList {
  Query query;
  std::vector<Passage> passages;

  int size() const { return static_cast<int>(passages.size()); }
  // 1-based access by retriever position.
  const Passage& at_position(int position) const;
};

// An ordered, duplicate-free selection of 1-based passage positions. The
// constructor checks distinctness and positivity; range against a concrete
// list is checked by validate_permutation / apply_permutation.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> indices);

  static Permutation identity(int n);

  const std::vector<int>& indices() const { return indices_; }
  int length() const { return static_cast<int>(indices_.size()); }
  int operator[](int j) const { return indices_[static_cast<size_t>(j)]; }

  // Inverse of a full-length permutation of 1..n.
  Permutation inverse() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation&, const Permutation&) = default;

 private:
  std::vector<int> indices_;
};

std::string to_string(const Permutation& perm);

// Throws PermutationError unless every index is in [1, n].
void validate_permutation(const Permutation& perm, int n);

std::vector<Passage> apply_permutation(const RetrievalList& list,
                                       const Permutation& perm);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

ValidationReport validate_retrieval_list(const RetrievalList& list);

struct Ranking {
  std::vector<std::string> ids;
  // Parallel to ids when present.
  std::optional<std::vector<double>> utilities;
  std::string provenance;
  bool degenerate = false;

  int size() const { return static_cast<int>(ids.size()); }
  friend bool operator==(const Ranking&, const Ranking&) = default;
};

// Orders all passages by utility descending, ties by retriever rank.
// `utilities` is indexed by retriever position (utilities[0] is p1).
Ranking rank_by_utility(const RetrievalList& list,
                        std::span<const double> utilities,
                        std::string provenance, bool degenerate = false);

Ranking retriever_ranking(const RetrievalList& list, std::string provenance);

}  // namespace permdebias
