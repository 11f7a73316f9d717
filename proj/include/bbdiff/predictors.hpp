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

#ifndef BBDIFF_PREDICTORS_HPP
#define BBDIFF_PREDICTORS_HPP

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bbdiff/absdom.hpp"
#include "bbdiff/bblock.hpp"
#include "bbdiff/rng.hpp"
#include "bbdiff/sampler.hpp"

namespace bbdiff {

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct PredictorResult {
  enum class Kind { Cycles, Crash, Timeout, Unsupported };
  Kind kind = Kind::Cycles;
  double cycles = 0.0;
  std::string detail; // crash diagnostics

  static PredictorResult make_cycles(double c) { return {Kind::Cycles, c, {}}; }
  static PredictorResult crash(std::string d) {
    return {Kind::Crash, 0.0, std::move(d)};
  }
  static PredictorResult timeout() { return {Kind::Timeout, 0.0, {}}; }
  static PredictorResult unsupported() { return {Kind::Unsupported, 0.0, {}}; }

  bool is_cycles() const { return kind == Kind::Cycles; }
  bool is_failure() const {
    return kind == Kind::Crash || kind == Kind::Timeout;
  }

  bool operator==(const PredictorResult &) const = default;
};

json predictor_result_to_json(const PredictorResult &r);
PredictorResult predictor_result_from_json(const json &j);

// ---------------------------------------------------------------------------
// Predictor specifications
// ---------------------------------------------------------------------------

// Rule of a synthetic predictor: when the predicate holds on a block, the
// effect is applied to the accumulated cost (crash wins over everything).
struct Rule {
  enum class Pred {
    FeatureEquals,        // some instruction's feature equals `value`
    MemAliasReadWritePair, // aliasing pair of memory operands: a read next to
                           // a read-modify-write
    MinInsnCount,          // block has at least `min_insns` instructions
  };
  enum class Effect { Multiply, Add, Crash };

  Pred pred = Pred::FeatureEquals;
  Feature feature = Feature::Category;
  std::string value;
  int min_insns = 0;

  Effect effect = Effect::Multiply;
  double factor = 1.0;
  double amount = 0.0;
};

// Deterministic cost model: per-scheme base costs summed over the block, then
// rules applied in order.
struct SyntheticSpec {
  std::map<std::string, double> costs;
  std::optional<double> default_cost;
  std::vector<Rule> rules;
};

// Out-of-process tool speaking the line protocol: block text on stdin, first
// stdout line is the predicted cycle count, exit code 0.
struct ExternalSpec {
  std::string command;
  double timeout_seconds = 10.0;
  std::map<std::string, std::string> env;
};

struct PredictorSpec {
  std::string name;
  std::variant<SyntheticSpec, ExternalSpec> impl;

  // Stable identity for caching, derived from the full configuration.
  const std::string &identity() const { return identity_; }
  void seal(); // computes identity; called by the loaders

private:
  std::string identity_;
};

PredictorSpec predictor_from_json(const json &j);
PredictorSpec load_predictor_file(const std::string &path);
json predictor_to_json(const PredictorSpec &spec);

bool rule_matches(const Rule &rule, const BasicBlock &block);

// Single prediction; never throws on tool failure (failures are results).
PredictorResult predict(const PredictorSpec &spec, const BasicBlock &block);

// ---------------------------------------------------------------------------
// Batch evaluation
// ---------------------------------------------------------------------------

// Bounded-parallel evaluator with a (predictor identity, rendered text) result
// cache. Identical blocks in one batch collapse to a single evaluation.
class BatchEvaluator {
public:
  explicit BatchEvaluator(int parallelism = 1);

  std::vector<PredictorResult> evaluate(const PredictorSpec &spec,
                                        const std::vector<BasicBlock> &blocks);

  std::vector<std::pair<PredictorResult, PredictorResult>>
  evaluate_pair(const PredictorSpec &a, const PredictorSpec &b,
                const std::vector<BasicBlock> &blocks);

  std::uint64_t evaluations() const { return evaluations_.load(); }
  std::uint64_t cache_hits() const { return cache_hits_.load(); }

private:
  int parallelism_;
  std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, PredictorResult> cache_;
  std::atomic<std::uint64_t> evaluations_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
};

// ---------------------------------------------------------------------------
// Interestingness
// ---------------------------------------------------------------------------

enum class Metric { Relative, Absolute };

const char *metric_name(Metric m);
Metric metric_from_name(const std::string &s);

// 2|a-b| / (a+b); 0 when both inputs are 0. Symmetric and scale-invariant.
double rel_difference(double a, double b);

// Difference under the metric: +inf on crash/timeout, no value when either
// side is Unsupported.
std::optional<double> result_difference(const PredictorResult &a,
                                        const PredictorResult &b, Metric metric);

// Crash/Timeout on either side is always interesting; Unsupported never is;
// otherwise the metric difference must strictly exceed the threshold.
bool is_interesting(const PredictorResult &a, const PredictorResult &b,
                    Metric metric, double threshold);

// ---------------------------------------------------------------------------
// Interestingness of abstract blocks
// ---------------------------------------------------------------------------

struct EvidenceSample {
  BasicBlock block;
  PredictorResult result_a, result_b;
  bool interesting = false;
  std::optional<double> difference; // +inf for crash/timeout, absent for unsupported
};

struct Evidence {
  std::vector<EvidenceSample> samples;
  int sampler_failures = 0;
  bool underfilled = false;
};

json evidence_to_json(const Evidence &e);
Evidence evidence_from_json(const json &j, const SchemeUniverse &u);

struct AbstractCheck {
  bool interesting = false;
  Evidence evidence;
};

// An abstract block is interesting iff every one of n_samples samples from it
// is interesting. An underfilled batch (sampling dead ends) makes it
// uninteresting, with the failure recorded in the evidence.
AbstractCheck abstract_interesting(const SchemeUniverse &u, const AbstractBlock &ab,
                                   const PredictorSpec &a, const PredictorSpec &b,
                                   Metric metric, double threshold, int n_samples,
                                   Rng &rng, BatchEvaluator &evaluator,
                                   const SamplerConfig &sampler_config = {});

// Deterministic single-instruction block for a scheme: first usable register
// of each class, first memory base with the first pool displacement, fixed or
// zero immediates. Empty when the scheme cannot be instantiated at all.
std::optional<BasicBlock> canonical_instance(const SchemeUniverse &u,
                                             const InstructionScheme &scheme,
                                             const SamplerConfig &sampler_config = {});

// Probe-style support filter: a scheme is supported by a tool iff the tool
// returns non-zero cycles for the block consisting of just that instruction.
// Returns the ids of schemes supported by every given predictor.
std::set<std::string> probe_supported(const SchemeUniverse &u,
                                      const std::vector<const PredictorSpec *> &tools,
                                      BatchEvaluator &evaluator,
                                      const SamplerConfig &sampler_config = {});

} // namespace bbdiff

#endif // BBDIFF_PREDICTORS_HPP
