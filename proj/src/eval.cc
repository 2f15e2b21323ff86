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

#include "permdebias/eval.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace permdebias {

using nlohmann::json;

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string lower_no_punct(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (std::ispunct(c)) continue;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t i, size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(v.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::string normalize_answer(std::string_view s) {
  std::string out;
  for (const auto& tok : split_ws(lower_no_punct(s))) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

std::vector<std::string> rouge_tokens(std::string_view s) {
  return split_ws(lower_no_punct(s));
}

int exact_match(std::string_view pred, std::string_view gold) {
  return normalize_answer(pred) == normalize_answer(gold) ? 1 : 0;
}

double rouge_l(std::string_view pred, std::string_view gold) {
  const auto p = rouge_tokens(pred);
  const auto g = rouge_tokens(gold);
  if (p.empty() && g.empty()) return 100.0;
  if (p.empty() || g.empty()) return 0.0;
  std::vector<int> prev(g.size() + 1, 0), cur(g.size() + 1, 0);
  for (size_t i = 1; i <= p.size(); ++i) {
    for (size_t j = 1; j <= g.size(); ++j) {
      cur[j] = p[i - 1] == g[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = prev[g.size()];
  if (lcs == 0.0) return 0.0;
  const double precision = lcs / static_cast<double>(p.size());
  const double recall = lcs / static_cast<double>(g.size());
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

double reciprocal_rank(const Ranking& ranking,
                       const std::set<std::string>& gold) {
  for (size_t i = 0; i < ranking.ids.size(); ++i) {
    if (gold.contains(ranking.ids[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double mrr(std::span<const Ranking> rankings,
           std::span<const std::set<std::string>> gold_ids) {
  if (rankings.size() != gold_ids.size()) {
    throw Error("mrr: " + std::to_string(rankings.size()) + " rankings but " +
                std::to_string(gold_ids.size()) + " gold sets");
  }
  if (rankings.empty()) return 0.0;
  double total = 0.0;
  for (size_t q = 0; q < rankings.size(); ++q) {
    total += reciprocal_rank(rankings[q], gold_ids[q]);
  }
  return total / static_cast<double>(rankings.size());
}

double kendall_tau(const Ranking& r1, const Ranking& r2) {
  const size_t n = r1.ids.size();
  if (n < 2) throw Error("kendall_tau needs at least two ids");
  std::unordered_map<std::string, size_t> pos2;
  for (size_t i = 0; i < r2.ids.size(); ++i) pos2[r2.ids[i]] = i;
  if (r2.ids.size() != n || pos2.size() != n) {
    throw Error("kendall_tau: rankings hold different id sets");
  }
  std::vector<size_t> mapped;
  mapped.reserve(n);
  for (const auto& id : r1.ids) {
    auto it = pos2.find(id);
    if (it == pos2.end()) {
      throw Error("kendall_tau: id '" + id + "' missing from second ranking");
    }
    mapped.push_back(it->second);
  }
  long long concordant = 0, discordant = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      (mapped[i] < mapped[j] ? concordant : discordant) += 1;
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2;
  return static_cast<double>(concordant - discordant) / pairs;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error("spearman needs two equal-length sequences of length >= 2");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

json BiasReport::to_json() const {
  return {{"mean_a", mean_a},
          {"std_a", std_a},
          {"query_count", query_count},
          {"excluded_degenerate", excluded_degenerate}};
}

void BiasReport::write_csv(std::ostream& os) const {
  os << "position,mean,std\n";
  const auto old_precision = os.precision(17);
  for (size_t j = 0; j < mean_a.size(); ++j) {
    os << (j + 1) << ',' << mean_a[j] << ',' << std_a[j] << '\n';
  }
  os.precision(old_precision);
}

BiasReport bias_report(std::span<const DisentangledModel> models) {
  BiasReport r;
  std::vector<const DisentangledModel*> kept;
  for (const auto& m : models) {
    if (m.degenerate) {
      ++r.excluded_degenerate;
      continue;
    }
    if (!kept.empty() && m.n() != kept.front()->n()) {
      throw Error("bias_report: models disagree on N (" +
                  std::to_string(kept.front()->n()) + " vs " +
                  std::to_string(m.n()) + ")");
    }
    kept.push_back(&m);
  }
  if (kept.empty()) {
    throw Error(models.empty() ? "bias_report: no models given"
                               : "bias_report: no non-degenerate fits found");
  }
  const size_t n = static_cast<size_t>(kept.front()->n());
  const double count = static_cast<double>(kept.size());
  r.query_count = static_cast<int>(kept.size());
  r.mean_a.assign(n, 0.0);
  r.std_a.assign(n, 0.0);
  for (const auto* m : kept) {
    for (size_t j = 0; j < n; ++j) r.mean_a[j] += m->bias.a[j];
  }
  for (double& v : r.mean_a) v /= count;
  for (const auto* m : kept) {
    for (size_t j = 0; j < n; ++j) {
      const double d = m->bias.a[j] - r.mean_a[j];
      r.std_a[j] += d * d;
    }
  }
  for (double& v : r.std_a) v = std::sqrt(v / count);
  return r;
}

json EvalReport::to_json() const {
  json pq = json::array();
  for (const auto& q : per_query) {
    pq.push_back({{"query_id", q.query_id},
                  {"predictions", q.predictions},
                  {"metrics", q.metrics}});
  }
  return {{"aggregates", aggregates},
          {"counts", counts},
          {"per_query", pq},
          {"unmatched_predictions", unmatched_predictions},
          {"missing_predictions", missing_predictions}};
}

EvalReport evaluate(std::span<const Prediction> predictions,
                    std::span<const RetrievalList> dataset,
                    std::span<const std::string> metrics) {
  for (const auto& m : metrics) {
    if (m != "em" && m != "rouge_l" && m != "mrr") {
      throw Error("unknown metric '" + m + "' (expected em, rouge_l, mrr)");
    }
  }
  std::unordered_map<std::string, const RetrievalList*> by_id;
  for (const auto& rec : dataset) by_id[rec.query.id] = &rec;

  std::map<std::string, std::vector<const Prediction*>> grouped;
  EvalReport report;
  std::set<std::string> unmatched;
  for (const auto& p : predictions) {
    if (by_id.contains(p.query_id)) {
      grouped[p.query_id].push_back(&p);
    } else {
      unmatched.insert(p.query_id);
    }
  }
  report.unmatched_predictions.assign(unmatched.begin(), unmatched.end());
  if (grouped.empty()) {
    throw Error("no prediction query id matches the dataset");
  }

  std::map<std::string, double> sums;
  for (const auto& rec : dataset) {
    auto it = grouped.find(rec.query.id);
    if (it == grouped.end()) {
      report.missing_predictions.push_back(rec.query.id);
      continue;
    }
    EvalReport::PerQuery pq;
    pq.query_id = rec.query.id;
    pq.predictions = static_cast<int>(it->second.size());
    const std::set<std::string> gold_ids(rec.query.gold_passage_ids.begin(),
                                         rec.query.gold_passage_ids.end());
    for (const auto& metric : metrics) {
      double total = 0.0;
      int used = 0;
      for (const Prediction* p : it->second) {
        if (metric == "mrr") {
          if (!p->ids || gold_ids.empty()) continue;
          Ranking r;
          r.ids = *p->ids;
          total += reciprocal_rank(r, gold_ids);
        } else {
          if (!p->answer || !rec.query.gold_answer) continue;
          total += metric == "em"
                       ? 100.0 * exact_match(*p->answer, *rec.query.gold_answer)
                       : rouge_l(*p->answer, *rec.query.gold_answer);
        }
        ++used;
      }
      if (used == 0) continue;
      const double value = total / used;
      pq.metrics[metric] = value;
      sums[metric] += value;
      report.counts[metric] += 1;
    }
    report.per_query.push_back(std::move(pq));
  }
  for (const auto& [metric, total] : sums) {
    report.aggregates[metric] = total / report.counts[metric];
  }
  return report;
}

}  // namespace permdebias
