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

#include "bbdiff/predictors.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>

#include "bbdiff/subprocess.hpp"

namespace bbdiff {

namespace {

[[noreturn]] void fail(const std::string &msg) { throw std::runtime_error(msg); }

std::string raw_as_string(const FeatureRaw &raw) {
  if (const auto *s = std::get_if<std::string>(&raw))
    return *s;
  if (const auto *n = std::get_if<int>(&raw))
    return std::to_string(*n);
  const auto &set = std::get<std::set<std::string>>(raw);
  std::string out = "{";
  for (const auto &e : set) {
    if (out.size() > 1)
      out += ',';
    out += e;
  }
  return out + "}";
}

} // namespace

json predictor_result_to_json(const PredictorResult &r) {
  switch (r.kind) {
  case PredictorResult::Kind::Cycles:
    return json{{"kind", "cycles"}, {"cycles", r.cycles}};
  case PredictorResult::Kind::Crash:
    return json{{"kind", "crash"}, {"detail", r.detail}};
  case PredictorResult::Kind::Timeout:
    return json{{"kind", "timeout"}};
  case PredictorResult::Kind::Unsupported:
    return json{{"kind", "unsupported"}};
  }
  fail("bad result kind");
}

PredictorResult predictor_result_from_json(const json &j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "cycles")
    return PredictorResult::make_cycles(j.at("cycles").get<double>());
  if (kind == "crash")
    return PredictorResult::crash(j.value("detail", ""));
  if (kind == "timeout")
    return PredictorResult::timeout();
  if (kind == "unsupported")
    return PredictorResult::unsupported();
  fail("unknown result kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Specs
// ---------------------------------------------------------------------------

namespace {

Rule rule_from_json(const json &j) {
  Rule r;
  const json &when = j.at("when");
  const std::string pred = when.at("kind").get<std::string>();
  if (pred == "feature_equals") {
    r.pred = Rule::Pred::FeatureEquals;
    r.feature = feature_from_name(when.at("feature").get<std::string>());
    r.value = when.at("value").get<std::string>();
  } else if (pred == "mem_alias_read_write_pair") {
    r.pred = Rule::Pred::MemAliasReadWritePair;
  } else if (pred == "min_insn_count") {
    r.pred = Rule::Pred::MinInsnCount;
    r.min_insns = when.at("count").get<int>();
  } else {
    fail("unknown rule predicate '" + pred + "'");
  }
  const json &effect = j.at("effect");
  const std::string eff = effect.at("kind").get<std::string>();
  if (eff == "multiply") {
    r.effect = Rule::Effect::Multiply;
    r.factor = effect.at("factor").get<double>();
  } else if (eff == "add") {
    r.effect = Rule::Effect::Add;
    r.amount = effect.at("amount").get<double>();
  } else if (eff == "crash") {
    r.effect = Rule::Effect::Crash;
  } else {
    fail("unknown rule effect '" + eff + "'");
  }
  return r;
}

json rule_to_json(const Rule &r) {
  json when;
  switch (r.pred) {
  case Rule::Pred::FeatureEquals:
    when = {{"kind", "feature_equals"},
            {"feature", feature_name(r.feature)},
            {"value", r.value}};
    break;
  case Rule::Pred::MemAliasReadWritePair:
    when = {{"kind", "mem_alias_read_write_pair"}};
    break;
  case Rule::Pred::MinInsnCount:
    when = {{"kind", "min_insn_count"}, {"count", r.min_insns}};
    break;
  }
  json effect;
  switch (r.effect) {
  case Rule::Effect::Multiply:
    effect = {{"kind", "multiply"}, {"factor", r.factor}};
    break;
  case Rule::Effect::Add:
    effect = {{"kind", "add"}, {"amount", r.amount}};
    break;
  case Rule::Effect::Crash:
    effect = {{"kind", "crash"}};
    break;
  }
  return json{{"when", std::move(when)}, {"effect", std::move(effect)}};
}

} // namespace

void PredictorSpec::seal() { identity_ = predictor_to_json(*this).dump(); }

PredictorSpec predictor_from_json(const json &j) {
  PredictorSpec spec;
  spec.name = j.value("name", "");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "synthetic") {
    SyntheticSpec s;
    if (j.contains("costs"))
      s.costs = j.at("costs").get<std::map<std::string, double>>();
    if (j.contains("default_cost"))
      s.default_cost = j.at("default_cost").get<double>();
    if (j.contains("rules"))
      for (const auto &jr : j.at("rules"))
        s.rules.push_back(rule_from_json(jr));
    spec.impl = std::move(s);
  } else if (kind == "external") {
    ExternalSpec e;
    e.command = j.at("command").get<std::string>();
    e.timeout_seconds = j.value("timeout_seconds", 10.0);
    if (j.contains("env"))
      e.env = j.at("env").get<std::map<std::string, std::string>>();
    spec.impl = std::move(e);
  } else {
    fail("unknown predictor kind '" + kind + "'");
  }
  spec.seal();
  return spec;
}

PredictorSpec load_predictor_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    fail("cannot open predictor spec '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    fail("predictor spec '" + path + "' is not valid JSON: " + e.what());
  }
  PredictorSpec spec = predictor_from_json(j);
  if (spec.name.empty())
    spec.name = path;
  spec.seal();
  return spec;
}

json predictor_to_json(const PredictorSpec &spec) {
  json j;
  j["name"] = spec.name;
  if (const auto *s = std::get_if<SyntheticSpec>(&spec.impl)) {
    j["kind"] = "synthetic";
    j["costs"] = s->costs;
    if (s->default_cost)
      j["default_cost"] = *s->default_cost;
    j["rules"] = json::array();
    for (const auto &r : s->rules)
      j["rules"].push_back(rule_to_json(r));
  } else {
    const auto &e = std::get<ExternalSpec>(spec.impl);
    j["kind"] = "external";
    j["command"] = e.command;
    j["timeout_seconds"] = e.timeout_seconds;
    j["env"] = e.env;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

bool rule_matches(const Rule &rule, const BasicBlock &block) {
  switch (rule.pred) {
  case Rule::Pred::FeatureEquals:
    for (const auto &insn : block.insns)
      if (raw_as_string(feature_of(*insn.scheme, rule.feature)) == rule.value)
        return true;
    return false;
  case Rule::Pred::MinInsnCount:
    return static_cast<int>(block.insns.size()) >= rule.min_insns;
  case Rule::Pred::MemAliasReadWritePair: {
    // Two distinct aliasing memory operands, one reading and the other both
    // reading and writing: a dependency chain through one location.
    struct MemOp {
      const ConcreteOperand *op;
      Access access;
    };
    std::vector<MemOp> mems;
    for (const auto &insn : block.insns)
      for (std::size_t o = 0; o < insn.operands.size(); ++o)
        if (insn.operands[o].kind == OperandKind::Memory)
          mems.push_back({&insn.operands[o], insn.scheme->operands[o].access});
    for (std::size_t x = 0; x < mems.size(); ++x) {
      for (std::size_t y = 0; y < mems.size(); ++y) {
        if (x == y || !do_alias(*mems[x].op, *mems[y].op))
          continue;
        if (access_reads(mems[x].access) && mems[y].access == Access::RW)
          return true;
      }
    }
    return false;
  }
  }
  fail("bad rule predicate");
}

namespace {

PredictorResult predict_synthetic(const SyntheticSpec &spec,
                                  const BasicBlock &block) {
  double total = 0.0;
  for (const auto &insn : block.insns) {
    auto it = spec.costs.find(insn.scheme->id);
    if (it != spec.costs.end())
      total += it->second;
    else if (spec.default_cost)
      total += *spec.default_cost;
    else
      return PredictorResult::unsupported();
  }
  for (const auto &rule : spec.rules) {
    if (!rule_matches(rule, block))
      continue;
    switch (rule.effect) {
    case Rule::Effect::Multiply:
      total *= rule.factor;
      break;
    case Rule::Effect::Add:
      total += rule.amount;
      break;
    case Rule::Effect::Crash:
      return PredictorResult::crash("synthetic crash rule");
    }
  }
  return PredictorResult::make_cycles(total);
}

PredictorResult predict_external(const ExternalSpec &spec,
                                 const BasicBlock &block) {
  const RunResult run =
      run_command(spec.command, render(block), spec.timeout_seconds, spec.env);
  if (run.spawn_failed)
    return PredictorResult::crash("spawn failed: " + run.error);
  if (run.timed_out)
    return PredictorResult::timeout();
  if (run.exit_code != 0)
    return PredictorResult::crash("exit code " + std::to_string(run.exit_code));
  const std::string first_line =
      run.stdout_text.substr(0, run.stdout_text.find('\n'));
  const char *begin = first_line.c_str();
  char *end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || !std::isfinite(v) || v < 0)
    return PredictorResult::crash("unparseable cycles line: '" + first_line + "'");
  while (*end == ' ' || *end == '\t' || *end == '\r')
    ++end;
  if (*end != '\0')
    return PredictorResult::crash("unparseable cycles line: '" + first_line + "'");
  return PredictorResult::make_cycles(v);
}

} // namespace

PredictorResult predict(const PredictorSpec &spec, const BasicBlock &block) {
  if (const auto *s = std::get_if<SyntheticSpec>(&spec.impl))
    return predict_synthetic(*s, block);
  return predict_external(std::get<ExternalSpec>(spec.impl), block);
}

// ---------------------------------------------------------------------------
// BatchEvaluator
// ---------------------------------------------------------------------------

BatchEvaluator::BatchEvaluator(int parallelism)
    : parallelism_(std::max(1, parallelism)) {}

std::vector<PredictorResult>
BatchEvaluator::evaluate(const PredictorSpec &spec,
                         const std::vector<BasicBlock> &blocks) {
  std::vector<PredictorResult> results(blocks.size());

  // Collapse duplicates and serve cache hits first.
  std::map<std::string, std::vector<std::size_t>> by_text;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    by_text[render(blocks[i])].push_back(i);

  struct Job {
    const std::string *text;
    std::size_t representative;
  };
  std::vector<Job> jobs;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (auto &[text, indices] : by_text) {
      auto it = cache_.find({spec.identity(), text});
      if (it != cache_.end()) {
        cache_hits_ += indices.size();
        for (std::size_t i : indices)
          results[i] = it->second;
      } else {
        cache_hits_ += indices.size() - 1; // batch-internal duplicates
        jobs.push_back(Job{&text, indices.front()});
      }
    }
  }

  std::vector<PredictorResult> job_results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size())
        return;
      job_results[j] = predict(spec, blocks[jobs[j].representative]);
      evaluations_ += 1;
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(parallelism_), jobs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t)
      pool.emplace_back(worker);
    for (auto &t : pool)
      t.join();
  }

  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      cache_.emplace(std::make_pair(spec.identity(), *jobs[j].text),
                     job_results[j]);
      for (std::size_t i : by_text.at(*jobs[j].text))
        results[i] = job_results[j];
    }
  }
  return results;
}

std::vector<std::pair<PredictorResult, PredictorResult>>
BatchEvaluator::evaluate_pair(const PredictorSpec &a, const PredictorSpec &b,
                              const std::vector<BasicBlock> &blocks) {
  std::vector<PredictorResult> ra = evaluate(a, blocks);
  std::vector<PredictorResult> rb = evaluate(b, blocks);
  std::vector<std::pair<PredictorResult, PredictorResult>> out;
  out.reserve(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i)
    out.emplace_back(std::move(ra[i]), std::move(rb[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Interestingness
// ---------------------------------------------------------------------------

const char *metric_name(Metric m) {
  return m == Metric::Relative ? "relative" : "absolute";
}

Metric metric_from_name(const std::string &s) {
  if (s == "relative")
    return Metric::Relative;
  if (s == "absolute")
    return Metric::Absolute;
  fail("unknown metric '" + s + "' (expected relative or absolute)");
}

double rel_difference(double a, double b) {
  if (a == 0.0 && b == 0.0)
    return 0.0;
  return 2.0 * std::abs(a - b) / (a + b);
}

std::optional<double> result_difference(const PredictorResult &a,
                                        const PredictorResult &b, Metric metric) {
  if (a.is_failure() || b.is_failure())
    return std::numeric_limits<double>::infinity();
  if (a.kind == PredictorResult::Kind::Unsupported ||
      b.kind == PredictorResult::Kind::Unsupported)
    return std::nullopt;
  if (metric == Metric::Relative)
    return rel_difference(a.cycles, b.cycles);
  return std::abs(a.cycles - b.cycles);
}

bool is_interesting(const PredictorResult &a, const PredictorResult &b,
                    Metric metric, double threshold) {
  if (a.is_failure() || b.is_failure())
    return true;
  if (a.kind == PredictorResult::Kind::Unsupported ||
      b.kind == PredictorResult::Kind::Unsupported)
    return false;
  return *result_difference(a, b, metric) > threshold;
}

json evidence_to_json(const Evidence &e) {
  json samples = json::array();
  for (const auto &s : e.samples) {
    json js;
    js["block"] = block_to_json(s.block);
    js["text"] = render(s.block);
    js["result_a"] = predictor_result_to_json(s.result_a);
    js["result_b"] = predictor_result_to_json(s.result_b);
    js["interesting"] = s.interesting;
    if (!s.difference)
      js["difference"] = nullptr;
    else if (std::isinf(*s.difference))
      js["difference"] = "inf";
    else
      js["difference"] = *s.difference;
    samples.push_back(std::move(js));
  }
  return json{{"samples", std::move(samples)},
              {"sampler_failures", e.sampler_failures},
              {"underfilled", e.underfilled}};
}

Evidence evidence_from_json(const json &j, const SchemeUniverse &u) {
  Evidence e;
  e.sampler_failures = j.at("sampler_failures").get<int>();
  e.underfilled = j.at("underfilled").get<bool>();
  for (const auto &js : j.at("samples")) {
    EvidenceSample s{block_from_json(js.at("block"), u),
                     predictor_result_from_json(js.at("result_a")),
                     predictor_result_from_json(js.at("result_b")),
                     js.at("interesting").get<bool>(), std::nullopt};
    const json &d = js.at("difference");
    if (d.is_string())
      s.difference = std::numeric_limits<double>::infinity();
    else if (d.is_number())
      s.difference = d.get<double>();
    e.samples.push_back(std::move(s));
  }
  return e;
}

AbstractCheck abstract_interesting(const SchemeUniverse &u, const AbstractBlock &ab,
                                   const PredictorSpec &a, const PredictorSpec &b,
                                   Metric metric, double threshold, int n_samples,
                                   Rng &rng, BatchEvaluator &evaluator,
                                   const SamplerConfig &sampler_config) {
  AbstractCheck check;
  BatchResult batch = sample_batch(u, ab, n_samples, rng, sampler_config);
  check.evidence.sampler_failures = batch.failed_attempts;
  check.evidence.underfilled = batch.underfilled;

  auto results = evaluator.evaluate_pair(a, b, batch.blocks);
  bool all_interesting = !batch.blocks.empty();
  for (std::size_t i = 0; i < batch.blocks.size(); ++i) {
    EvidenceSample s{std::move(batch.blocks[i]), results[i].first,
                     results[i].second, false, std::nullopt};
    s.interesting = is_interesting(s.result_a, s.result_b, metric, threshold);
    s.difference = result_difference(s.result_a, s.result_b, metric);
    all_interesting &= s.interesting;
    check.evidence.samples.push_back(std::move(s));
  }
  check.interesting = all_interesting && !batch.underfilled;
  return check;
}

std::optional<BasicBlock> canonical_instance(const SchemeUniverse &u,
                                             const InstructionScheme &scheme,
                                             const SamplerConfig &sampler_config) {
  // Deterministic instantiation: first usable register of the class, first
  // base register with the first pool displacement, fixed or zero immediates.
  std::vector<ConcreteOperand> ops;
  for (const auto &os : scheme.operands) {
    switch (os.kind) {
    case OperandKind::Register:
      if (os.fixed_register) {
        ops.push_back(
            ConcreteOperand::make_reg(u.find_register(*os.fixed_register)));
      } else {
        auto members = u.class_members(os.register_class, os.width, true);
        if (members.empty())
          return std::nullopt;
        ops.push_back(ConcreteOperand::make_reg(members.front()));
      }
      break;
    case OperandKind::Memory: {
      auto bases = u.memory_base_registers();
      if (bases.empty() || sampler_config.memory_displacement_pool.empty())
        return std::nullopt;
      ops.push_back(ConcreteOperand::make_mem(
          bases.front(), sampler_config.memory_displacement_pool.front()));
      break;
    }
    case OperandKind::Immediate:
      ops.push_back(ConcreteOperand::make_imm(os.fixed_value.value_or(0)));
      break;
    }
  }
  return BasicBlock({InstructionInstance(&scheme, std::move(ops))});
}

std::set<std::string>
probe_supported(const SchemeUniverse &u,
                const std::vector<const PredictorSpec *> &tools,
                BatchEvaluator &evaluator,
                const SamplerConfig &sampler_config) {
  std::vector<BasicBlock> blocks;
  std::vector<std::string> ids;
  for (const auto &scheme : u.schemes()) {
    auto block = canonical_instance(u, scheme, sampler_config);
    if (!block)
      continue; // nothing instantiable: treated as unsupported
    blocks.push_back(std::move(*block));
    ids.push_back(scheme.id);
  }
  std::set<std::string> supported(ids.begin(), ids.end());
  for (const PredictorSpec *tool : tools) {
    auto results = evaluator.evaluate(*tool, blocks);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto &r = results[i];
      if (!(r.is_cycles() && r.cycles > 0.0))
        supported.erase(ids[i]);
    }
  }
  return supported;
}

} // namespace bbdiff
