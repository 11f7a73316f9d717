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

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "bbdiff/analysis.hpp"
#include "bbdiff/discovery.hpp"
#include "bbdiff/fixture.hpp"
#include "bbdiff/report.hpp"

namespace fs = std::filesystem;
using namespace bbdiff;

namespace {

json parse_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot read '" + path + "'");
  return json::parse(in);
}

void write_text(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct FilterFlags {
  bool exclude_memory_read_write = false;
  std::vector<std::string> exclude_ids;
  std::vector<std::string> include_only_ids;

  void attach(CLI::App *cmd) {
    cmd->add_flag("--exclude-memory-read-write", exclude_memory_read_write,
                  "Drop schemes whose memory operand both reads and writes");
    cmd->add_option("--exclude-scheme", exclude_ids,
                    "Scheme id to drop (repeatable)");
    cmd->add_option("--include-only-scheme", include_only_ids,
                    "Keep only these scheme ids (repeatable)");
  }

  LoadFilters to_filters() const {
    LoadFilters f;
    f.exclude_memory_read_write = exclude_memory_read_write;
    f.exclude_scheme_ids.insert(exclude_ids.begin(), exclude_ids.end());
    if (!include_only_ids.empty())
      f.include_only_scheme_ids.emplace(include_only_ids.begin(),
                                        include_only_ids.end());
    return f;
  }
};

std::vector<BasicBlock> load_blocks(const std::string &path,
                                    const SchemeUniverse &u) {
  json doc = parse_file(path);
  std::vector<BasicBlock> blocks;
  for (const auto &jb : doc.at("blocks"))
    blocks.push_back(block_from_json(jb, u));
  return blocks;
}

// An archive together with the universe its blocks point into; the universe
// member must outlive the discoveries.
struct LoadedArchive {
  SchemeUniverse universe;
  Archive archive;
};

LoadedArchive load_archive(const std::string &dir,
                           const std::optional<std::string> &isa_override) {
  json ref = parse_file((fs::path(dir) / "universe.ref").string());
  json config = parse_file((fs::path(dir) / "config").string());
  LoadFilters filters;
  if (config.contains("filters"))
    filters = config.at("filters").get<LoadFilters>();

  std::string isa_path = ref.at("path").get<std::string>();
  if (isa_override) {
    isa_path = *isa_override;
  } else {
    std::string have = fnv1a64_hex(slurp(isa_path));
    std::string want = ref.at("fnv1a64").get<std::string>();
    if (have != want)
      throw std::runtime_error("'" + isa_path + "' does not match the archive (content hash " +
                               have + ", expected " + want +
                               "); pass --isa to point at the right file");
  }

  LoadedArchive la;
  la.universe = load_universe_file(isa_path, filters);
  la.archive = read_archive(dir, la.universe);
  return la;
}

json ranking_json(const std::vector<Discovery> &ds, const std::vector<int> &order) {
  json out = json::array();
  for (int i : order) {
    const Discovery &d = ds[static_cast<std::size_t>(i)];
    json mean = std::isinf(d.metrics.mean_difference)
                    ? json("inf")
                    : json(d.metrics.mean_difference);
    out.push_back(json{{"id", d.id},
                       {"mean_difference", std::move(mean)},
                       {"generality", d.metrics.generality},
                       {"base_not_interesting", d.base_not_interesting}});
  }
  return out;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Differential testing of basic-block throughput predictors"};
  app.require_subcommand(1);

  // --- gen-isa-fixture ------------------------------------------------------
  auto *gen = app.add_subcommand(
      "gen-isa-fixture",
      "Write the bundled mini ISA and synthetic predictor fixtures");
  std::string gen_out;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->callback([&] {
    write_fixture_files(gen_out);
    std::cout << "fixture files written to " << gen_out << "\n";
  });

  // --- probe ----------------------------------------------------------------
  auto *probe = app.add_subcommand(
      "probe", "List schemes supported by every given predictor");
  std::string probe_isa;
  std::vector<std::string> probe_predictors;
  int probe_par = 4;
  FilterFlags probe_filters;
  probe->add_option("--isa", probe_isa, "ISA description file")->required();
  probe->add_option("--predictor", probe_predictors,
                    "Predictor spec file (repeatable)")
      ->required();
  probe->add_option("--parallelism", probe_par, "Worker pool size");
  probe_filters.attach(probe);
  probe->callback([&] {
    SchemeUniverse u = load_universe_file(probe_isa, probe_filters.to_filters());
    std::vector<PredictorSpec> specs;
    for (const auto &p : probe_predictors)
      specs.push_back(load_predictor_file(p));
    std::vector<const PredictorSpec *> tools;
    for (const auto &s : specs)
      tools.push_back(&s);
    BatchEvaluator evaluator(probe_par);
    auto supported = probe_supported(u, tools, evaluator);
    std::cout << json{{"supported", supported}}.dump(2) << "\n";
  });

  // --- testset ----------------------------------------------------------------
  auto *testset = app.add_subcommand(
      "testset", "Sample a set of basic blocks and store them as JSON");
  std::string ts_isa, ts_out;
  int ts_count = 1000;
  std::optional<int> ts_length, ts_max_length;
  std::optional<std::uint64_t> ts_seed;
  int ts_retries = 100;
  FilterFlags ts_filters;
  testset->add_option("--isa", ts_isa, "ISA description file")->required();
  testset->add_option("--out", ts_out, "Output file")->required();
  testset->add_option("--count", ts_count, "Number of blocks");
  testset->add_option("--length", ts_length, "Fixed block length");
  testset->add_option("--max-length", ts_max_length,
                      "Draw lengths uniformly from [1, N]");
  testset->add_option("--seed", ts_seed, "RNG seed (required)");
  testset->add_option("--max-retries", ts_retries,
                      "Sampler retries per block");
  ts_filters.attach(testset);
  testset->callback([&] {
    if (!ts_seed)
      throw CLI::ValidationError("testset", "--seed is required");
    if (ts_length.has_value() == ts_max_length.has_value())
      throw CLI::ValidationError(
          "testset", "exactly one of --length / --max-length is required");
    SchemeUniverse u = load_universe_file(ts_isa, ts_filters.to_filters());
    SamplerConfig sampler;
    sampler.max_retries = ts_retries;
    Rng rng(*ts_seed);
    json blocks = json::array();
    for (int i = 0; i < ts_count; ++i) {
      int len = ts_length ? *ts_length
                          : static_cast<int>(rng.uniform_int(1, *ts_max_length));
      BasicBlock b = sample_unconstrained(u, len, rng, sampler);
      blocks.push_back(block_to_json(b));
    }
    write_text(ts_out, json{{"blocks", std::move(blocks)}}.dump(2) + "\n");
    std::cout << ts_count << " blocks written to " << ts_out << "\n";
  });

  // --- heatmap ----------------------------------------------------------------
  auto *heatmap = app.add_subcommand(
      "heatmap", "Pairwise inconsistency fractions for a set of predictors");
  std::string hm_isa;
  std::vector<std::string> hm_predictors;
  std::optional<std::string> hm_testset;
  int hm_count = 10000, hm_length = 4, hm_par = 4;
  std::optional<std::uint64_t> hm_seed;
  double hm_threshold = 0.5;
  std::string hm_metric = "relative";
  std::optional<std::string> hm_out_json, hm_out_csv;
  FilterFlags hm_filters;
  heatmap->add_option("--isa", hm_isa, "ISA description file")->required();
  heatmap->add_option("--predictor", hm_predictors,
                      "Predictor spec file (repeatable, at least two)")
      ->required();
  heatmap->add_option("--testset", hm_testset, "Evaluate a stored test set");
  heatmap->add_option("--count", hm_count, "Blocks to sample when no test set");
  heatmap->add_option("--length", hm_length, "Length of sampled blocks");
  heatmap->add_option("--seed", hm_seed, "RNG seed (required when sampling)");
  heatmap->add_option("--threshold", hm_threshold, "Interestingness threshold");
  heatmap->add_option("--metric", hm_metric, "relative or absolute");
  heatmap->add_option("--parallelism", hm_par, "Worker pool size");
  heatmap->add_option("--out-json", hm_out_json, "Write the matrix as JSON");
  heatmap->add_option("--out-csv", hm_out_csv, "Write the matrix as CSV");
  hm_filters.attach(heatmap);
  heatmap->callback([&] {
    if (!hm_testset && !hm_seed)
      throw CLI::ValidationError("heatmap",
                                 "--seed is required when sampling blocks");
    SchemeUniverse u = load_universe_file(hm_isa, hm_filters.to_filters());
    std::vector<PredictorSpec> specs;
    for (const auto &p : hm_predictors)
      specs.push_back(load_predictor_file(p));
    std::vector<const PredictorSpec *> tools;
    for (const auto &s : specs)
      tools.push_back(&s);

    std::vector<BasicBlock> blocks;
    if (hm_testset) {
      blocks = load_blocks(*hm_testset, u);
    } else {
      Rng rng(*hm_seed);
      for (int i = 0; i < hm_count; ++i)
        blocks.push_back(sample_unconstrained(u, hm_length, rng));
    }

    BatchEvaluator evaluator(hm_par);
    auto matrix = inconsistency_matrix(tools, blocks, metric_from_name(hm_metric),
                                       hm_threshold, evaluator);
    json doc = matrix_to_json(tools, matrix);
    doc["blocks"] = blocks.size();
    if (hm_out_json)
      write_text(*hm_out_json, doc.dump(2) + "\n");
    if (hm_out_csv)
      write_text(*hm_out_csv, matrix_to_csv(tools, matrix));
    if (!hm_out_json && !hm_out_csv)
      std::cout << doc.dump(2) << "\n";
  });

  // --- campaign ----------------------------------------------------------------
  auto *campaign = app.add_subcommand(
      "campaign", "Run a discovery campaign and write its archive");
  std::string cp_config, cp_out;
  std::optional<std::uint64_t> cp_seed;
  std::optional<std::string> cp_isa, cp_pred_a, cp_pred_b, cp_metric;
  std::optional<double> cp_threshold, cp_time_budget;
  std::optional<int> cp_n_samples, cp_max_len, cp_gens, cp_par, cp_patience,
      cp_max_disc, cp_retries;
  campaign->add_option("--config", cp_config, "Campaign config file")->required();
  campaign->add_option("--seed", cp_seed, "RNG seed (required)");
  campaign->add_option("--out", cp_out, "Archive output directory")->required();
  campaign->add_option("--isa", cp_isa, "Override: ISA description file");
  campaign->add_option("--predictor-a", cp_pred_a, "Override: first predictor");
  campaign->add_option("--predictor-b", cp_pred_b, "Override: second predictor");
  campaign->add_option("--metric", cp_metric, "Override: relative or absolute");
  campaign->add_option("--threshold", cp_threshold, "Override: threshold");
  campaign->add_option("--n-samples", cp_n_samples,
                       "Override: samples per abstract check");
  campaign->add_option("--max-block-len", cp_max_len,
                       "Override: maximal candidate length");
  campaign->add_option("--generalizations", cp_gens,
                       "Override: generalization attempts per candidate");
  campaign->add_option("--parallelism", cp_par, "Override: worker pool size");
  campaign->add_option("--patience", cp_patience,
                       "Override: candidates without a new discovery");
  campaign->add_option("--max-discoveries", cp_max_disc,
                       "Override: stop after this many discoveries");
  campaign->add_option("--time-budget", cp_time_budget,
                       "Override: wall-clock budget in seconds");
  campaign->add_option("--max-retries", cp_retries,
                       "Override: sampler retries per block");
  campaign->callback([&] {
    if (!cp_seed)
      throw CLI::ValidationError("campaign", "--seed is required");
    json doc = parse_file(cp_config);
    auto abs_path = [](const std::string &p) {
      return fs::absolute(p).lexically_normal().string();
    };
    if (cp_isa)
      doc["isa"] = abs_path(*cp_isa);
    if (cp_pred_a)
      doc["predictor_a"] = abs_path(*cp_pred_a);
    if (cp_pred_b)
      doc["predictor_b"] = abs_path(*cp_pred_b);
    if (cp_metric)
      doc["metric"] = *cp_metric;
    if (cp_threshold)
      doc["threshold"] = *cp_threshold;
    if (cp_n_samples)
      doc["n_samples"] = *cp_n_samples;
    if (cp_max_len)
      doc["max_block_len"] = *cp_max_len;
    if (cp_gens)
      doc["generalizations_per_candidate"] = *cp_gens;
    if (cp_par)
      doc["parallelism"] = *cp_par;
    if (cp_patience)
      doc["termination"]["patience"] = *cp_patience;
    if (cp_max_disc)
      doc["termination"]["max_discoveries"] = *cp_max_disc;
    if (cp_time_budget)
      doc["termination"]["time_budget_seconds"] = *cp_time_budget;
    if (cp_retries)
      doc["sampler"]["max_retries"] = *cp_retries;
    doc["seed"] = *cp_seed;

    std::string base_dir = fs::path(cp_config).parent_path().string();
    if (base_dir.empty())
      base_dir = ".";
    CampaignConfig cfg = campaign_config_from_json(doc, base_dir);
    SchemeUniverse u = load_universe_file(cfg.isa_path, cfg.filters);
    Campaign result = run_campaign(u, cfg);
    write_archive(result, cfg.isa_path, cp_out);
    std::cout << "campaign finished: " << result.discoveries.size()
              << " discoveries kept (" << result.stats.discoveries_before_filter
              << " before filtering), " << result.stats.candidates
              << " candidates, " << result.wall_seconds << "s\n"
              << "archive written to " << cp_out << "\n";
  });

  // --- rank ----------------------------------------------------------------
  auto *rank = app.add_subcommand("rank", "Rank a campaign's discoveries");
  std::string rk_archive;
  std::string rk_by = "interestingness";
  std::optional<std::string> rk_isa;
  rank->add_option("archive", rk_archive, "Campaign archive directory")
      ->required();
  rank->add_option("--by", rk_by, "interestingness or generality");
  rank->add_option("--isa", rk_isa, "Override the archived ISA path");
  rank->callback([&] {
    if (rk_by != "interestingness" && rk_by != "generality")
      throw CLI::ValidationError("rank", "--by must be interestingness or generality");
    LoadedArchive la = load_archive(rk_archive, rk_isa);
    const auto &ds = la.archive.discoveries;
    auto order = rk_by == "generality" ? order_by_generality(ds)
                                       : order_by_interestingness(ds);
    std::cout << json{{"by", rk_by}, {"ranking", ranking_json(ds, order)}}.dump(2)
              << "\n";
  });

  // --- cover ----------------------------------------------------------------
  auto *cover = app.add_subcommand(
      "cover", "Pick at most k discoveries covering the most test-set blocks");
  std::string cv_archive, cv_testset;
  int cv_k = 10;
  std::optional<std::string> cv_isa;
  cover->add_option("archive", cv_archive, "Campaign archive directory")
      ->required();
  cover->add_option("--testset", cv_testset, "Test-set file")->required();
  cover->add_option("--k", cv_k, "Maximum number of discoveries");
  cover->add_option("--isa", cv_isa, "Override the archived ISA path");
  cover->callback([&] {
    LoadedArchive la = load_archive(cv_archive, cv_isa);
    auto blocks = load_blocks(cv_testset, la.universe);
    const auto &ds = la.archive.discoveries;
    std::vector<std::vector<int>> sets(ds.size());
    for (std::size_t di = 0; di < ds.size(); ++di)
      for (std::size_t bi = 0; bi < blocks.size(); ++bi)
        if (subsumes_concrete(la.universe, ds[di].ab, blocks[bi]))
          sets[di].push_back(static_cast<int>(bi));
    auto picked = select_cover(sets, static_cast<int>(blocks.size()), cv_k);
    std::vector<char> covered(blocks.size(), 0);
    json ids = json::array();
    for (int di : picked) {
      ids.push_back(ds[static_cast<std::size_t>(di)].id);
      for (int bi : sets[static_cast<std::size_t>(di)])
        covered[static_cast<std::size_t>(bi)] = 1;
    }
    std::cout << json{{"ids", std::move(ids)},
                      {"covered",
                       std::count(covered.begin(), covered.end(), 1)},
                      {"test_set_size", blocks.size()}}
                     .dump(2)
              << "\n";
  });

  // --- coverage ----------------------------------------------------------------
  auto *cvg = app.add_subcommand(
      "coverage",
      "How many interesting test-set blocks the discoveries explain");
  std::string cg_archive, cg_testset;
  int cg_k = 10, cg_par = 4;
  std::optional<std::string> cg_isa;
  cvg->add_option("archive", cg_archive, "Campaign archive directory")
      ->required();
  cvg->add_option("--testset", cg_testset, "Test-set file")->required();
  cvg->add_option("--k", cg_k, "Top-k subset size");
  cvg->add_option("--parallelism", cg_par, "Worker pool size");
  cvg->add_option("--isa", cg_isa, "Override the archived ISA path");
  cvg->callback([&] {
    LoadedArchive la = load_archive(cg_archive, cg_isa);
    auto blocks = load_blocks(cg_testset, la.universe);
    const json &config = la.archive.config;
    PredictorSpec a = predictor_from_json(config.at("predictor_a"));
    PredictorSpec b = predictor_from_json(config.at("predictor_b"));
    BatchEvaluator evaluator(cg_par);
    CoverageReport report = coverage(
        la.universe, la.archive.discoveries, blocks, a, b,
        metric_from_name(config.at("metric").get<std::string>()),
        config.at("threshold").get<double>(), evaluator, cg_k);
    std::cout << coverage_to_json(report, la.archive.discoveries).dump(2) << "\n";
  });

  // --- report ----------------------------------------------------------------
  auto *report = app.add_subcommand(
      "report", "Render a campaign archive as a static HTML site");
  std::string rp_archive, rp_out;
  std::optional<std::string> rp_isa;
  report->add_option("archive", rp_archive, "Campaign archive directory")
      ->required();
  report->add_option("--out", rp_out, "Output directory")->required();
  report->add_option("--isa", rp_isa, "Override the archived ISA path");
  report->callback([&] {
    LoadedArchive la = load_archive(rp_archive, rp_isa);
    write_report(render_report(la.archive), rp_out);
    std::cout << "report written to " << rp_out << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
