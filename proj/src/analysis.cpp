// Copyright 2026 The bbdiff Authors. All rights reserved.
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

#include "bbdiff/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bbdiff {

double mean_interestingness(const Evidence &e) {
  double sum = 0.0;
  int n = 0;
  for (const auto &s : e.samples) {
    if (!s.difference)
      continue;
    if (std::isinf(*s.difference))
      return std::numeric_limits<double>::infinity();
    sum += *s.difference;
    ++n;
  }
  return n > 0 ? sum / n : 0.0;
}

std::size_t generality(const SchemeUniverse &u, const AbstractBlock &ab) {
  std::size_t best = 0;
  bool first = true;
  for (const auto &ai : ab.insns) {
    std::size_t g = insn_gamma(u, ai).count();
    if (first || g < best) {
      best = g;
      first = false;
    }
  }
  return best;
}

std::vector<int> order_by_interestingness(const std::vector<Discovery> &ds) {
  std::vector<int> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&ds](int x, int y) {
    const auto &mx = ds[x].metrics, &my = ds[y].metrics;
    if (mx.mean_difference != my.mean_difference)
      return mx.mean_difference > my.mean_difference;
    if (mx.generality != my.generality)
      return mx.generality > my.generality;
    return ds[x].id < ds[y].id;
  });
  return idx;
}

std::vector<int> order_by_generality(const std::vector<Discovery> &ds) {
  std::vector<int> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&ds](int x, int y) {
    const auto &mx = ds[x].metrics, &my = ds[y].metrics;
    if (mx.generality != my.generality)
      return mx.generality > my.generality;
    if (mx.mean_difference != my.mean_difference)
      return mx.mean_difference > my.mean_difference;
    return ds[x].id < ds[y].id;
  });
  return idx;
}

// ---------------------------------------------------------------------------
// Maximum coverage
// ---------------------------------------------------------------------------

namespace {

using Bits = std::vector<std::uint64_t>;

int popcount(const Bits &b) {
  int n = 0;
  for (std::uint64_t w : b)
    n += std::popcount(w);
  return n;
}

int popcount_minus(const Bits &a, const Bits &b) {
  int n = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    n += std::popcount(a[i] & ~b[i]);
  return n;
}

} // namespace

std::vector<int> select_cover(const std::vector<std::vector<int>> &sets,
                              int num_elements, int k) {
  if (k < 1)
    throw std::invalid_argument("select_cover: k must be >= 1");
  const int n = static_cast<int>(sets.size());
  const std::size_t words = static_cast<std::size_t>(num_elements + 63) / 64;

  std::vector<Bits> bits(n, Bits(words, 0));
  for (int i = 0; i < n; ++i)
    for (int e : sets[i]) {
      if (e < 0 || e >= num_elements)
        throw std::invalid_argument("select_cover: element out of range");
      bits[i][static_cast<std::size_t>(e) >> 6] |= std::uint64_t{1} << (e & 63);
    }

  // suffix[i] = union of sets[i..n); bounds subtrees below.
  std::vector<Bits> suffix(static_cast<std::size_t>(n) + 1, Bits(words, 0));
  for (int i = n - 1; i >= 0; --i) {
    suffix[i] = suffix[i + 1];
    for (std::size_t w = 0; w < words; ++w)
      suffix[i][w] |= bits[i][w];
  }

  // Depth-first search in lexicographic index order; only strict improvements
  // replace the incumbent, so the first optimum found — the lexicographically
  // smallest — wins.
  std::vector<int> best_sel, cur_sel;
  int best_count = -1;
  Bits cur_union(words, 0);
  std::function<void(int)> dfs = [&](int start) {
    int count = popcount(cur_union);
    if (count > best_count) {
      best_count = count;
      best_sel = cur_sel;
    }
    if (static_cast<int>(cur_sel.size()) == k)
      return;
    for (int i = start; i < n; ++i) {
      // Even taking everything from here on cannot strictly improve: all
      // later branches are bounded by the same suffix, so stop.
      if (count + popcount_minus(suffix[i], cur_union) <= best_count)
        break;
      Bits saved = cur_union;
      for (std::size_t w = 0; w < words; ++w)
        cur_union[w] |= bits[i][w];
      cur_sel.push_back(i);
      dfs(i + 1);
      cur_sel.pop_back();
      cur_union = std::move(saved);
    }
  };
  dfs(0);
  return best_sel;
}

// ---------------------------------------------------------------------------
// Coverage
// ---------------------------------------------------------------------------

CoverageReport coverage(const SchemeUniverse &u, const std::vector<Discovery> &ds,
                        const std::vector<BasicBlock> &test_set,
                        const PredictorSpec &a, const PredictorSpec &b,
                        Metric metric, double threshold,
                        BatchEvaluator &evaluator, int top_k) {
  CoverageReport r;
  r.test_set_size = static_cast<int>(test_set.size());

  auto results = evaluator.evaluate_pair(a, b, test_set);
  for (std::size_t i = 0; i < test_set.size(); ++i)
    if (is_interesting(results[i].first, results[i].second, metric, threshold))
      r.interesting_indices.push_back(static_cast<int>(i));

  const int m = static_cast<int>(r.interesting_indices.size());
  r.covered_by.assign(ds.size(), {});
  std::vector<std::vector<int>> compact_sets(ds.size());
  std::vector<char> covered_flag(static_cast<std::size_t>(m), 0);
  for (std::size_t di = 0; di < ds.size(); ++di) {
    for (int ci = 0; ci < m; ++ci) {
      int pos = r.interesting_indices[static_cast<std::size_t>(ci)];
      if (subsumes_concrete(u, ds[di].ab,
                            test_set[static_cast<std::size_t>(pos)])) {
        r.covered_by[di].push_back(pos);
        compact_sets[di].push_back(ci);
        covered_flag[static_cast<std::size_t>(ci)] = 1;
      }
    }
  }
  r.covered = static_cast<int>(
      std::count(covered_flag.begin(), covered_flag.end(), 1));

  if (m == 0) {
    r.vacuous = true;
    r.fraction = 1.0;
    r.top_k_covered = 0;
    r.top_k_fraction = 1.0;
    return r;
  }
  r.fraction = static_cast<double>(r.covered) / m;
  r.top_k = select_cover(compact_sets, m, top_k);
  std::vector<char> in_top(static_cast<std::size_t>(m), 0);
  for (int di : r.top_k)
    for (int ci : compact_sets[static_cast<std::size_t>(di)])
      in_top[static_cast<std::size_t>(ci)] = 1;
  r.top_k_covered =
      static_cast<int>(std::count(in_top.begin(), in_top.end(), 1));
  r.top_k_fraction = static_cast<double>(r.top_k_covered) / m;
  return r;
}

json coverage_to_json(const CoverageReport &r, const std::vector<Discovery> &ds) {
  json per = json::array();
  for (std::size_t di = 0; di < r.covered_by.size(); ++di)
    per.push_back(json{{"id", ds[di].id},
                       {"count", r.covered_by[di].size()},
                       {"positions", r.covered_by[di]}});
  json top_ids = json::array();
  for (int di : r.top_k)
    top_ids.push_back(ds[static_cast<std::size_t>(di)].id);
  return json{
      {"test_set_size", r.test_set_size},
      {"interesting", r.interesting_indices.size()},
      {"interesting_indices", r.interesting_indices},
      {"covered", r.covered},
      {"fraction", r.fraction},
      {"vacuous", r.vacuous},
      {"per_discovery", std::move(per)},
      {"top_k",
       {{"ids", std::move(top_ids)},
        {"covered", r.top_k_covered},
        {"fraction", r.top_k_fraction}}},
  };
}

// ---------------------------------------------------------------------------
// Pairwise inconsistency matrix
// ---------------------------------------------------------------------------

std::vector<std::vector<double>>
inconsistency_matrix(const std::vector<const PredictorSpec *> &tools,
                     const std::vector<BasicBlock> &blocks, Metric metric,
                     double threshold, BatchEvaluator &evaluator) {
  if (tools.size() < 2)
    throw std::invalid_argument("inconsistency_matrix: need at least 2 tools");
  const std::size_t n = tools.size();
  std::vector<std::vector<PredictorResult>> results;
  results.reserve(n);
  for (const PredictorSpec *tool : tools)
    results.push_back(evaluator.evaluate(*tool, blocks));

  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      std::size_t count = 0;
      for (std::size_t b = 0; b < blocks.size(); ++b)
        if (is_interesting(results[i][b], results[j][b], metric, threshold))
          ++count;
      double frac =
          blocks.empty() ? 0.0 : static_cast<double>(count) / blocks.size();
      m[i][j] = m[j][i] = frac;
    }
  }
  return m;
}

json matrix_to_json(const std::vector<const PredictorSpec *> &tools,
                    const std::vector<std::vector<double>> &matrix) {
  json names = json::array();
  for (const PredictorSpec *t : tools)
    names.push_back(t->name);
  return json{{"tools", std::move(names)}, {"matrix", matrix}};
}

std::string matrix_to_csv(const std::vector<const PredictorSpec *> &tools,
                          const std::vector<std::vector<double>> &matrix) {
  std::ostringstream out;
  out << "tool";
  for (const PredictorSpec *t : tools)
    out << "," << t->name;
  out << "\n";
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    out << tools[i]->name;
    for (double v : matrix[i])
      out << "," << json(v).dump();
    out << "\n";
  }
  return out.str();
}

} // namespace bbdiff
