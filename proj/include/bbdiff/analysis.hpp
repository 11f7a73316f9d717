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

#ifndef BBDIFF_ANALYSIS_HPP
#define BBDIFF_ANALYSIS_HPP

#include <vector>

#include "bbdiff/discovery.hpp"

namespace bbdiff {

// Mean of the recorded differences; +inf as soon as one sample crashed or
// timed out. Samples without a difference and empty evidence yield 0.
double mean_interestingness(const Evidence &e);

// Size of the smallest per-instruction concretization: how many schemes the
// most constrained instruction of `ab` still admits.
std::size_t generality(const SchemeUniverse &u, const AbstractBlock &ab);

// Discovery indices ordered most interesting first (crashes outrank finite
// differences); ties fall back to generality, then id.
std::vector<int> order_by_interestingness(const std::vector<Discovery> &ds);
// Most general first; ties fall back to interestingness, then id.
std::vector<int> order_by_generality(const std::vector<Discovery> &ds);

// Exact maximum-coverage: pick at most k of `sets` (element ids in
// [0, num_elements)) so their union is largest. Subsets are explored in
// lexicographic index order and only strict improvements are kept, so the
// result is the lexicographically smallest optimum.
std::vector<int> select_cover(const std::vector<std::vector<int>> &sets,
                              int num_elements, int k);

struct CoverageReport {
  int test_set_size = 0;
  std::vector<int> interesting_indices; // positions in the test set
  std::vector<std::vector<int>> covered_by; // per discovery, positions covered
  int covered = 0;       // interesting blocks subsumed by >=1 discovery
  double fraction = 1.0; // covered / interesting; 1.0 when vacuous
  bool vacuous = false;  // the test set had no interesting block at all
  std::vector<int> top_k; // discovery indices (into `ds`), best <=k cover
  int top_k_covered = 0;
  double top_k_fraction = 1.0;
};

// Evaluates the tool pair on `test_set`, keeps the interesting blocks and
// reports how many of them at least one discovery explains (subsumption of
// the concrete block by the discovery's abstract block).
CoverageReport coverage(const SchemeUniverse &u, const std::vector<Discovery> &ds,
                        const std::vector<BasicBlock> &test_set,
                        const PredictorSpec &a, const PredictorSpec &b,
                        Metric metric, double threshold,
                        BatchEvaluator &evaluator, int top_k);

json coverage_to_json(const CoverageReport &r, const std::vector<Discovery> &ds);

// Pairwise fraction of `blocks` on which two tools disagree. Symmetric,
// zero diagonal.
std::vector<std::vector<double>>
inconsistency_matrix(const std::vector<const PredictorSpec *> &tools,
                     const std::vector<BasicBlock> &blocks, Metric metric,
                     double threshold, BatchEvaluator &evaluator);

json matrix_to_json(const std::vector<const PredictorSpec *> &tools,
                    const std::vector<std::vector<double>> &matrix);
std::string matrix_to_csv(const std::vector<const PredictorSpec *> &tools,
                          const std::vector<std::vector<double>> &matrix);

} // namespace bbdiff

#endif // BBDIFF_ANALYSIS_HPP
