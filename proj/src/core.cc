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

#include "permdebias/core.h"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace permdebias {

const Passage& RetrievalList::at_position(int position) const {
  if (position < 1 || position > size()) {
    throw PermutationError("position " + std::to_string(position) +
                           " out of range [1, " + std::to_string(size()) +
                           "]");
  }
  return passages[static_cast<size_t>(position - 1)];
}

Permutation::Permutation(std::vector<int> indices)
    : indices_(std::move(indices)) {
  std::set<int> seen;
  for (int idx : indices_) {
    if (idx < 1) {
      throw PermutationError("permutation index " + std::to_string(idx) +
                             " is not a positive position");
    }
    if (!seen.insert(idx).second) {
      throw PermutationError("duplicate index " + std::to_string(idx) +
                             " in permutation " + to_string(*this));
    }
  }
}

Permutation Permutation::identity(int n) {
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 1);
  return Permutation(std::move(idx));
}

Permutation Permutation::inverse() const {
  const int n = length();
  std::vector<int> inv(static_cast<size_t>(n), 0);
  for (int j = 0; j < n; ++j) {
    const int p = indices_[static_cast<size_t>(j)];
    if (p > n) {
      throw PermutationError("inverse requires a full-length permutation");
    }
    inv[static_cast<size_t>(p - 1)] = j + 1;
  }
  return Permutation(std::move(inv));
}

std::string to_string(const Permutation& perm) {
  std::ostringstream os;
  os << '[';
  for (int j = 0; j < perm.length(); ++j) {
    if (j > 0) os << ',';
    os << perm[j];
  }
  os << ']';
  return os.str();
}

void validate_permutation(const Permutation& perm, int n) {
  if (perm.length() == 0) {
    throw PermutationError("empty permutation");
  }
  if (perm.length() > n) {
    throw PermutationError("permutation " + to_string(perm) +
                           " longer than list of " + std::to_string(n));
  }
  for (int idx : perm.indices()) {
    if (idx > n) {
      throw PermutationError("index " + std::to_string(idx) +
                             " out of range [1, " + std::to_string(n) +
                             "] in " + to_string(perm));
    }
  }
}

std::vector<Passage> apply_permutation(const RetrievalList& list,
                                       const Permutation& perm) {
  validate_permutation(perm, list.size());
  std::vector<Passage> out;
  out.reserve(static_cast<size_t>(perm.length()));
  for (int idx : perm.indices()) out.push_back(list.at_position(idx));
  return out;
}

std::string ValidationReport::summary() const {
  std::string s;
  for (const auto& v : violations) {
    if (!s.empty()) s += "; ";
    s += v;
  }
  return s;
}

ValidationReport validate_retrieval_list(const RetrievalList& list) {
  ValidationReport report;
  auto& out = report.violations;
  if (list.query.id.empty()) out.push_back("empty query id");
  if (list.query.text.empty()) out.push_back("empty query text");

  std::unordered_map<std::string, int> id_count;
  std::unordered_map<int, int> rank_count;
  for (const auto& p : list.passages) {
    if (p.id.empty()) out.push_back("empty passage id");
    if (p.retriever_rank < 1) {
      out.push_back("passage '" + p.id + "' has rank " +
                    std::to_string(p.retriever_rank) + " < 1");
    }
    ++id_count[p.id];
    ++rank_count[p.retriever_rank];
  }
  for (const auto& p : list.passages) {
    auto it = id_count.find(p.id);
    if (it != id_count.end() && it->second > 1) {
      out.push_back("duplicate passage id '" + p.id + "'");
      it->second = 0;  // report once
    }
  }
  std::set<int> duplicate_ranks;
  for (const auto& [rank, count] : rank_count) {
    if (count > 1) duplicate_ranks.insert(rank);
  }
  for (int rank : duplicate_ranks) {
    out.push_back("duplicate rank " + std::to_string(rank));
  }
  const int n = list.size();
  for (int r = 1; r <= n; ++r) {
    if (!rank_count.contains(r)) {
      out.push_back("rank gap: missing rank " + std::to_string(r));
    }
  }
  for (int j = 0; j < n; ++j) {
    const int rank = list.passages[static_cast<size_t>(j)].retriever_rank;
    if (rank != j + 1) {
      out.push_back("rank/order mismatch: position " + std::to_string(j + 1) +
                    " holds rank " + std::to_string(rank));
      break;
    }
  }
  return report;
}

Ranking rank_by_utility(const RetrievalList& list,
                        std::span<const double> utilities,
                        std::string provenance, bool degenerate) {
  const int n = list.size();
  if (static_cast<int>(utilities.size()) != n) {
    throw Error("utility vector has " + std::to_string(utilities.size()) +
                " entries for " + std::to_string(n) + " passages");
  }
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    if (utilities[x] != utilities[y]) return utilities[x] > utilities[y];
    return list.passages[x].retriever_rank < list.passages[y].retriever_rank;
  });
  Ranking r;
  r.provenance = std::move(provenance);
  r.degenerate = degenerate;
  std::vector<double> u;
  for (int i : order) {
    r.ids.push_back(list.passages[static_cast<size_t>(i)].id);
    u.push_back(utilities[static_cast<size_t>(i)]);
  }
  r.utilities = std::move(u);
  return r;
}

Ranking retriever_ranking(const RetrievalList& list, std::string provenance) {
  Ranking r;
  r.provenance = std::move(provenance);
  for (const auto& p : list.passages) r.ids.push_back(p.id);
  return r;
}

}  // namespace permdebias
