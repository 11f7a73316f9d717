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

#ifndef BBDIFF_DISCOVERY_HPP
#define BBDIFF_DISCOVERY_HPP

#include <optional>
#include <string>
#include <vector>

#include "bbdiff/absdom.hpp"
#include "bbdiff/predictors.hpp"
#include "bbdiff/sampler.hpp"

namespace bbdiff {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct TerminationConfig {
  std::optional<double> time_budget_seconds;
  std::optional<int> max_discoveries;
  // Candidates sampled since the last appended discovery.
  std::optional<int> patience;
};

struct CampaignConfig {
  std::string isa_path;
  LoadFilters filters;
  PredictorSpec predictor_a;
  PredictorSpec predictor_b;
  Metric metric = Metric::Relative;
  double threshold = 0.5;
  int n_samples = 100;
  int max_block_len = 5;
  int generalizations_per_candidate = 5;
  TerminationConfig termination;
  int parallelism = 1;
  SamplerConfig sampler;
  std::uint64_t seed = 0;
};

// `base_dir` resolves relative predictor-spec paths mentioned in the config.
CampaignConfig campaign_config_from_json(const json &j,
                                         const std::string &base_dir = ".");
json campaign_config_to_json(const CampaignConfig &config);

// ---------------------------------------------------------------------------
// Witnesses and discoveries
// ---------------------------------------------------------------------------

// One node of a generalization witness tree. The root holds the
// representation of the origin block; every other node holds the state after
// attempting `expansion` on its parent. Rejected nodes are leaves; children
// hang off accepted nodes only.
struct WitnessNode {
  AbstractBlock ab;
  std::optional<Expansion> expansion; // absent at the root
  bool accepted = false;
  Evidence evidence;
  std::vector<WitnessNode> children;
};

json witness_to_json(const WitnessNode &node);
WitnessNode witness_from_json(const json &j, const SchemeUniverse &u);

struct DiscoveryMetrics {
  double mean_difference = 0.0; // +inf when any final-evidence sample crashed
  std::size_t generality = 0;   // min concretization size over instructions
};

struct Discovery {
  int id = 0;
  AbstractBlock ab;
  BasicBlock origin; // minimized concrete block the campaign started from
  bool base_not_interesting = false;
  DiscoveryMetrics metrics;
  WitnessNode witness;
};

json discovery_to_json(const Discovery &d);
Discovery discovery_from_json(const json &jd, const json &jw,
                              const SchemeUniverse &u);

// ---------------------------------------------------------------------------
// Core loop pieces
// ---------------------------------------------------------------------------

// Drops instructions while the remainder stays interesting. Each pass walks
// positions in a seeded-random order and commits the first successful
// removal; a pass with no commit ends the loop. Pre: `block` is interesting.
BasicBlock minimize(const SchemeUniverse &u, BasicBlock block,
                    const PredictorSpec &a, const PredictorSpec &b, Metric metric,
                    double threshold, Rng &rng, BatchEvaluator &evaluator);

struct GeneralizeResult {
  AbstractBlock ab;
  WitnessNode witness;
  bool base_not_interesting = false;
  Evidence final_evidence; // evidence of the deepest accepted node
};

// Starts from represent(block) and randomly walks accepted expansions until
// every applicable expansion has been rejected once.
GeneralizeResult generalize(const SchemeUniverse &u, const BasicBlock &block,
                            const PredictorSpec &a, const PredictorSpec &b,
                            Metric metric, double threshold, int n_samples,
                            Rng &rng, BatchEvaluator &evaluator,
                            const SamplerConfig &sampler_config = {});

// Keeps discovery i iff no later discovery block-subsumes it (on mutual
// subsumption the later copy survives).
std::vector<Discovery> filter_subsumed(const SchemeUniverse &u,
                                       std::vector<Discovery> discoveries);

// ---------------------------------------------------------------------------
// Campaign
// ---------------------------------------------------------------------------

struct CampaignStats {
  long long candidates = 0;
  long long interesting_candidates = 0;
  long long subsumed_early = 0;
  long long sampler_failures = 0;
  int discoveries_before_filter = 0;
  int discoveries_after_filter = 0;
};

json stats_to_json(const CampaignStats &s);

struct Campaign {
  CampaignConfig config;
  std::vector<Discovery> discoveries; // post-filter, append order, original ids
  CampaignStats stats;
  double wall_seconds = 0.0; // reported on the console; never archived
};

Campaign run_campaign(const SchemeUniverse &u, const CampaignConfig &config);

// ---------------------------------------------------------------------------
// Archive
// ---------------------------------------------------------------------------

// Layout: config, universe.ref, stats.json, discoveries/NNN.json,
// witnesses/NNN.json. Content is a pure function of (config, seed, universe),
// so rerunning a campaign reproduces the archive byte for byte.
void write_archive(const Campaign &campaign, const std::string &isa_path,
                   const std::string &out_dir);

struct Archive {
  json config;
  json universe_ref;
  json stats;
  std::vector<Discovery> discoveries;
};

Archive read_archive(const std::string &dir, const SchemeUniverse &u);

std::string fnv1a64_hex(const std::string &bytes);

} // namespace bbdiff

#endif // BBDIFF_DISCOVERY_HPP
