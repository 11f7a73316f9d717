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

#include "bbdiff/discovery.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bbdiff/analysis.hpp"

namespace fs = std::filesystem;

namespace bbdiff {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

namespace {

std::string resolve_path(const std::string &p, const std::string &base_dir) {
  fs::path path(p);
  if (path.is_relative())
    path = fs::path(base_dir) / path;
  return path.lexically_normal().string();
}

PredictorSpec resolve_predictor(const json &j, const std::string &base_dir) {
  if (j.is_string())
    return load_predictor_file(resolve_path(j.get<std::string>(), base_dir));
  return predictor_from_json(j);
}

void validate_config(const CampaignConfig &c) {
  if (c.n_samples < 1 || c.max_block_len < 1 ||
      c.generalizations_per_candidate < 1 || c.parallelism < 1 ||
      c.sampler.max_retries < 1)
    throw std::invalid_argument("campaign config: all counts must be >= 1");
  if (!c.termination.time_budget_seconds && !c.termination.max_discoveries &&
      !c.termination.patience)
    throw std::invalid_argument(
        "campaign config: at least one termination condition is required");
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out)
    throw std::runtime_error("write failed for '" + path + "'");
}

std::string dump_doc(const json &j) { return j.dump(2) + "\n"; }

json mean_to_json(double mean) {
  if (std::isinf(mean))
    return json("inf");
  return json(mean);
}

double mean_from_json(const json &j) {
  if (j.is_string())
    return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

std::string padded_id(int id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", id);
  return buf;
}

AbstractBlock top_block(int length) {
  AbstractBlock ab;
  ab.insns.assign(static_cast<std::size_t>(length), AbstractInsn{});
  return ab;
}

} // namespace

CampaignConfig campaign_config_from_json(const json &j,
                                         const std::string &base_dir) {
  CampaignConfig c;
  c.isa_path = resolve_path(j.at("isa").get<std::string>(), base_dir);
  if (j.contains("filters"))
    c.filters = j.at("filters").get<LoadFilters>();
  c.predictor_a = resolve_predictor(j.at("predictor_a"), base_dir);
  c.predictor_b = resolve_predictor(j.at("predictor_b"), base_dir);
  c.metric = metric_from_name(j.value("metric", "relative"));
  c.threshold = j.value("threshold", 0.5);
  c.n_samples = j.value("n_samples", 100);
  c.max_block_len = j.value("max_block_len", 5);
  c.generalizations_per_candidate = j.value("generalizations_per_candidate", 5);
  if (j.contains("termination")) {
    const json &t = j.at("termination");
    if (t.contains("time_budget_seconds"))
      c.termination.time_budget_seconds = t.at("time_budget_seconds").get<double>();
    if (t.contains("max_discoveries"))
      c.termination.max_discoveries = t.at("max_discoveries").get<int>();
    if (t.contains("patience"))
      c.termination.patience = t.at("patience").get<int>();
  }
  c.parallelism = j.value("parallelism", 1);
  if (j.contains("sampler")) {
    const json &s = j.at("sampler");
    c.sampler.max_retries = s.value("max_retries", c.sampler.max_retries);
    if (s.contains("memory_displacement_pool"))
      c.sampler.memory_displacement_pool =
          s.at("memory_displacement_pool").get<std::vector<std::int64_t>>();
  }
  c.seed = j.value("seed", std::uint64_t{0});
  validate_config(c);
  return c;
}

json campaign_config_to_json(const CampaignConfig &c) {
  json term = json::object();
  if (c.termination.time_budget_seconds)
    term["time_budget_seconds"] = *c.termination.time_budget_seconds;
  if (c.termination.max_discoveries)
    term["max_discoveries"] = *c.termination.max_discoveries;
  if (c.termination.patience)
    term["patience"] = *c.termination.patience;
  return json{
      {"isa", c.isa_path},
      {"filters", c.filters},
      {"predictor_a", predictor_to_json(c.predictor_a)},
      {"predictor_b", predictor_to_json(c.predictor_b)},
      {"metric", metric_name(c.metric)},
      {"threshold", c.threshold},
      {"n_samples", c.n_samples},
      {"max_block_len", c.max_block_len},
      {"generalizations_per_candidate", c.generalizations_per_candidate},
      {"termination", std::move(term)},
      {"parallelism", c.parallelism},
      {"sampler",
       {{"max_retries", c.sampler.max_retries},
        {"memory_displacement_pool", c.sampler.memory_displacement_pool}}},
      {"seed", c.seed},
  };
}

// ---------------------------------------------------------------------------
// Witness / discovery serialization
// ---------------------------------------------------------------------------

json witness_to_json(const WitnessNode &node) {
  json children = json::array();
  for (const auto &child : node.children)
    children.push_back(witness_to_json(child));
  return json{
      {"abstract_block", abstract_block_to_json(node.ab)},
      {"expansion",
       node.expansion ? expansion_to_json(*node.expansion) : json(nullptr)},
      {"accepted", node.accepted},
      {"evidence", evidence_to_json(node.evidence)},
      {"children", std::move(children)},
  };
}

WitnessNode witness_from_json(const json &j, const SchemeUniverse &u) {
  WitnessNode node;
  node.ab = abstract_block_from_json(j.at("abstract_block"));
  if (!j.at("expansion").is_null())
    node.expansion = expansion_from_json(j.at("expansion"));
  node.accepted = j.at("accepted").get<bool>();
  node.evidence = evidence_from_json(j.at("evidence"), u);
  for (const auto &jc : j.at("children"))
    node.children.push_back(witness_from_json(jc, u));
  return node;
}

json discovery_to_json(const Discovery &d) {
  return json{
      {"id", d.id},
      {"abstract_block", abstract_block_to_json(d.ab)},
      {"origin_block", block_to_json(d.origin)},
      {"origin_text", render(d.origin)},
      {"base_not_interesting", d.base_not_interesting},
      {"metrics",
       {{"mean_difference", mean_to_json(d.metrics.mean_difference)},
        {"generality", d.metrics.generality}}},
  };
}

Discovery discovery_from_json(const json &jd, const json &jw,
                              const SchemeUniverse &u) {
  const json &jm = jd.at("metrics");
  return Discovery{
      jd.at("id").get<int>(),
      abstract_block_from_json(jd.at("abstract_block")),
      block_from_json(jd.at("origin_block"), u),
      jd.at("base_not_interesting").get<bool>(),
      DiscoveryMetrics{mean_from_json(jm.at("mean_difference")),
                       jm.at("generality").get<std::size_t>()},
      witness_from_json(jw, u),
  };
}

// ---------------------------------------------------------------------------
// Minimization
// ---------------------------------------------------------------------------

BasicBlock minimize(const SchemeUniverse &u, BasicBlock block,
                    const PredictorSpec &a, const PredictorSpec &b, Metric metric,
                    double threshold, Rng &rng, BatchEvaluator &evaluator) {
  (void)u;
  while (block.size() > 1) {
    std::vector<std::size_t> order(block.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    bool committed = false;
    for (std::size_t idx : order) {
      std::vector<InstructionInstance> rest = block.insns;
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(idx));
      BasicBlock candidate(std::move(rest));
      auto pr = evaluator.evaluate_pair(a, b, {candidate})[0];
      if (is_interesting(pr.first, pr.second, metric, threshold)) {
        block = std::move(candidate);
        committed = true;
        break;
      }
    }
    if (!committed)
      break;
  }
  return block;
}

// ---------------------------------------------------------------------------
// Generalization
// ---------------------------------------------------------------------------

GeneralizeResult generalize(const SchemeUniverse &u, const BasicBlock &block,
                            const PredictorSpec &a, const PredictorSpec &b,
                            Metric metric, double threshold, int n_samples,
                            Rng &rng, BatchEvaluator &evaluator,
                            const SamplerConfig &sampler_config) {
  AbstractBlock ab = represent(block);
  AbstractCheck base = abstract_interesting(u, ab, a, b, metric, threshold,
                                            n_samples, rng, evaluator,
                                            sampler_config);
  GeneralizeResult res{ab,
                       WitnessNode{ab, std::nullopt, base.interesting,
                                   base.evidence, {}},
                       !base.interesting, base.evidence};
  if (res.base_not_interesting)
    return res;

  // Once rejected, an expansion is never retried, even after the block has
  // grown elsewhere. Acceptance moves the frontier node down the tree.
  WitnessNode *current = &res.witness;
  std::vector<Expansion> rejected;
  while (true) {
    std::vector<Expansion> avail;
    for (auto &e : available_expansions(ab))
      if (std::find(rejected.begin(), rejected.end(), e) == rejected.end())
        avail.push_back(std::move(e));
    if (avail.empty())
      break;
    const Expansion &e = avail[rng.uniform_index(avail.size())];
    AbstractBlock next = apply_expansion(ab, e);
    AbstractCheck check = abstract_interesting(u, next, a, b, metric, threshold,
                                               n_samples, rng, evaluator,
                                               sampler_config);
    current->children.push_back(
        WitnessNode{next, e, check.interesting, check.evidence, {}});
    if (check.interesting) {
      ab = std::move(next);
      res.final_evidence = current->children.back().evidence;
      current = &current->children.back();
    } else {
      rejected.push_back(e);
    }
  }
  res.ab = std::move(ab);
  return res;
}

// ---------------------------------------------------------------------------
// Subsumption filter
// ---------------------------------------------------------------------------

std::vector<Discovery> filter_subsumed(const SchemeUniverse &u,
                                       std::vector<Discovery> discoveries) {
  std::vector<Discovery> out;
  for (std::size_t i = 0; i < discoveries.size(); ++i) {
    bool removed = false;
    for (std::size_t j = i + 1; j < discoveries.size() && !removed; ++j)
      removed = block_subsumes(u, discoveries[j].ab, discoveries[i].ab);
    if (!removed)
      out.push_back(std::move(discoveries[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Campaign
// ---------------------------------------------------------------------------

namespace {

// External tools must produce a parseable prediction for a trivial block
// before a campaign starts; synthetic predictors cannot fail to run.
void startup_probe(const SchemeUniverse &u, const PredictorSpec &spec,
                   const SamplerConfig &sampler_config) {
  if (!std::holds_alternative<ExternalSpec>(spec.impl))
    return;
  for (const auto &scheme : u.schemes()) {
    auto block = canonical_instance(u, scheme, sampler_config);
    if (!block)
      continue;
    PredictorResult r = predict(spec, *block);
    if (!r.is_cycles())
      throw std::runtime_error("startup probe failed for predictor '" +
                               spec.name + "': " + r.detail);
    return;
  }
  throw std::runtime_error("startup probe failed for predictor '" + spec.name +
                           "': universe has no instantiable scheme");
}

} // namespace

Campaign run_campaign(const SchemeUniverse &u, const CampaignConfig &config) {
  validate_config(config);
  startup_probe(u, config.predictor_a, config.sampler);
  startup_probe(u, config.predictor_b, config.sampler);

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  Rng rng(config.seed);
  BatchEvaluator evaluator(config.parallelism);
  CampaignStats stats;
  std::vector<Discovery> all;
  long long since_last_discovery = 0;
  int next_id = 0;

  while (true) {
    if (config.termination.time_budget_seconds &&
        elapsed() >= *config.termination.time_budget_seconds)
      break;
    if (config.termination.max_discoveries &&
        static_cast<int>(all.size()) >= *config.termination.max_discoveries)
      break;
    if (config.termination.patience &&
        since_last_discovery >= *config.termination.patience)
      break;

    int length = static_cast<int>(rng.uniform_int(1, config.max_block_len));
    SampleResult sr = sample(u, top_block(length), rng, config.sampler);
    stats.sampler_failures += sr.failed_attempts;
    if (!sr.block)
      continue;
    stats.candidates++;
    since_last_discovery++;

    auto pr = evaluator.evaluate_pair(config.predictor_a, config.predictor_b,
                                      {*sr.block})[0];
    if (!is_interesting(pr.first, pr.second, config.metric, config.threshold))
      continue;
    stats.interesting_candidates++;

    BasicBlock min_block =
        minimize(u, *sr.block, config.predictor_a, config.predictor_b,
                 config.metric, config.threshold, rng, evaluator);

    bool already_covered = false;
    for (const auto &d : all) {
      if (subsumes_concrete(u, d.ab, min_block)) {
        already_covered = true;
        break;
      }
    }
    if (already_covered) {
      stats.subsumed_early++;
      continue;
    }

    for (int g = 0; g < config.generalizations_per_candidate; ++g) {
      Rng gen_rng = rng.fork();
      GeneralizeResult gr =
          generalize(u, min_block, config.predictor_a, config.predictor_b,
                     config.metric, config.threshold, config.n_samples, gen_rng,
                     evaluator, config.sampler);
      DiscoveryMetrics metrics{mean_interestingness(gr.final_evidence),
                               generality(u, gr.ab)};
      Discovery d{next_id++,          std::move(gr.ab),
                  min_block,          gr.base_not_interesting,
                  metrics,            std::move(gr.witness)};
      assert(subsumes_concrete(u, d.ab, d.origin));
      all.push_back(std::move(d));
      since_last_discovery = 0;
    }
  }

  stats.discoveries_before_filter = static_cast<int>(all.size());
  std::vector<Discovery> kept = filter_subsumed(u, std::move(all));
  stats.discoveries_after_filter = static_cast<int>(kept.size());

  return Campaign{config, std::move(kept), stats, elapsed()};
}

// ---------------------------------------------------------------------------
// Archive
// ---------------------------------------------------------------------------

json stats_to_json(const CampaignStats &s) {
  return json{
      {"candidates", s.candidates},
      {"interesting_candidates", s.interesting_candidates},
      {"subsumed_early", s.subsumed_early},
      {"sampler_failures", s.sampler_failures},
      {"discoveries_before_filter", s.discoveries_before_filter},
      {"discoveries_after_filter", s.discoveries_after_filter},
  };
}

std::string fnv1a64_hex(const std::string &bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_archive(const Campaign &campaign, const std::string &isa_path,
                   const std::string &out_dir) {
  fs::create_directories(fs::path(out_dir) / "discoveries");
  fs::create_directories(fs::path(out_dir) / "witnesses");

  write_file((fs::path(out_dir) / "config").string(),
             dump_doc(campaign_config_to_json(campaign.config)));
  write_file((fs::path(out_dir) / "universe.ref").string(),
             dump_doc(json{{"path", isa_path},
                           {"fnv1a64", fnv1a64_hex(read_file(isa_path))}}));
  write_file((fs::path(out_dir) / "stats.json").string(),
             dump_doc(stats_to_json(campaign.stats)));
  for (const auto &d : campaign.discoveries) {
    const std::string name = padded_id(d.id) + ".json";
    write_file((fs::path(out_dir) / "discoveries" / name).string(),
               dump_doc(discovery_to_json(d)));
    write_file((fs::path(out_dir) / "witnesses" / name).string(),
               dump_doc(witness_to_json(d.witness)));
  }
}

Archive read_archive(const std::string &dir, const SchemeUniverse &u) {
  Archive a;
  a.config = json::parse(read_file((fs::path(dir) / "config").string()));
  a.universe_ref =
      json::parse(read_file((fs::path(dir) / "universe.ref").string()));
  a.stats = json::parse(read_file((fs::path(dir) / "stats.json").string()));

  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(fs::path(dir) / "discoveries"))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  for (const auto &f : files) {
    json jd = json::parse(read_file(f.string()));
    json jw = json::parse(
        read_file((fs::path(dir) / "witnesses" / f.filename()).string()));
    a.discoveries.push_back(discovery_from_json(jd, jw, u));
  }
  return a;
}

} // namespace bbdiff
