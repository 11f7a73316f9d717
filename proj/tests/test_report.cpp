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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "bbdiff/analysis.hpp"
#include "bbdiff/fixture.hpp"
#include "bbdiff/report.hpp"

#include "helpers.hpp"

using namespace bbdiff;
using namespace bbdiff::testing;

namespace fs = std::filesystem;

namespace {

struct PlantedRun {
  SchemeUniverse universe;
  Campaign campaign;
  std::string isa_path;
};

PlantedRun run_planted(const std::string &dir, bool crash_side = false) {
  write_fixture_files(dir);
  json config{{"isa", dir + "/isa.json"},
              {"predictor_a", dir + "/uniform.json"},
              {"predictor_b", dir + (crash_side ? "/crash.json" : "/planted.json")},
              {"metric", "relative"},
              {"threshold", 0.5},
              {"n_samples", 50},
              {"max_block_len", 5},
              {"generalizations_per_candidate", 5},
              {"termination", {{"patience", 50}}},
              {"seed", 42}};
  if (!crash_side)
    config["sampler"] = {{"memory_displacement_pool", json::array({0})}};
  CampaignConfig c = campaign_config_from_json(config);
  SchemeUniverse u = load_universe_file(c.isa_path, c.filters);
  Campaign campaign = run_campaign(u, c);
  return PlantedRun{std::move(u), std::move(campaign), c.isa_path};
}

Archive archived(const PlantedRun &run, const std::string &out) {
  write_archive(run.campaign, run.isa_path, out);
  return read_archive(out, run.universe);
}

// All class="num" span payloads of one page.
std::vector<std::string> extract_nums(const std::string &html) {
  std::vector<std::string> out;
  const std::string open = "<span class=\"num\">";
  std::size_t pos = 0;
  while ((pos = html.find(open, pos)) != std::string::npos) {
    pos += open.size();
    const std::size_t end = html.find("</span>", pos);
    REQUIRE(end != std::string::npos);
    out.push_back(html.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

// All numeric literals of a json document, as their dump() strings.
void collect_numbers(const json &j, std::set<std::string> &out) {
  if (j.is_number()) {
    out.insert(j.dump());
    return;
  }
  if (j.is_object())
    for (const auto &[key, value] : j.items())
      collect_numbers(value, out);
  if (j.is_array())
    for (const auto &value : j)
      collect_numbers(value, out);
}

} // namespace

TEST_CASE("reports regenerate byte-identically from one archive") {
  const std::string dir = make_temp_dir("report");
  PlantedRun run = run_planted(dir);
  REQUIRE_FALSE(run.campaign.discoveries.empty());
  Archive archive = archived(run, dir + "/archive");

  ReportBundle first = render_report(archive);
  ReportBundle second = render_report(archive);
  CHECK(first.files == second.files);

  write_report(first, dir + "/site_a");
  write_report(second, dir + "/site_b");
  for (const auto &entry : fs::directory_iterator(dir + "/site_a")) {
    const std::string name = entry.path().filename().string();
    CHECK(read_file(entry.path().string()) ==
          read_file(dir + "/site_b/" + name));
  }

  // one page set per discovery plus the two indexes
  CHECK(first.files.count("index.html") == 1);
  CHECK(first.files.count("index-by-generality.html") == 1);
  CHECK(first.files.size() == 2 + 2 * archive.discoveries.size());
  for (const Discovery &d : archive.discoveries) {
    char page[32];
    std::snprintf(page, sizeof page, "discovery_%03d.html", d.id);
    CHECK(first.files.count(page) == 1);
    std::snprintf(page, sizeof page, "witness_%03d.html", d.id);
    CHECK(first.files.count(page) == 1);
  }
}

TEST_CASE("every tagged number on every page exists in the archive") {
  const std::string dir = make_temp_dir("trace");
  PlantedRun run = run_planted(dir);
  const std::string out = dir + "/archive";
  Archive archive = archived(run, out);

  std::set<std::string> known;
  collect_numbers(json::parse(read_file(out + "/config")), known);
  collect_numbers(json::parse(read_file(out + "/stats.json")), known);
  for (const auto &entry : fs::directory_iterator(out + "/discoveries"))
    collect_numbers(json::parse(read_file(entry.path().string())), known);
  for (const auto &entry : fs::directory_iterator(out + "/witnesses"))
    collect_numbers(json::parse(read_file(entry.path().string())), known);

  ReportBundle bundle = render_report(archive);
  int traced = 0;
  for (const auto &[name, html] : bundle.files) {
    for (const std::string &value : extract_nums(html)) {
      INFO(name, ": ", value);
      CHECK(known.count(value) == 1);
      ++traced;
    }
  }
  // the pages really do carry numeric claims
  CHECK(traced > 20);
}

TEST_CASE("the index ranks discoveries most interesting first") {
  const std::string dir = make_temp_dir("rank");
  PlantedRun run = run_planted(dir);
  Archive archive = archived(run, dir + "/archive");
  ReportBundle bundle = render_report(archive);

  const std::string &index = bundle.files.at("index.html");
  const std::vector<int> order = order_by_interestingness(archive.discoveries);
  std::size_t last_pos = 0;
  for (int idx : order) {
    char link[40];
    std::snprintf(link, sizeof link, "href=\"discovery_%03d.html\"",
                  archive.discoveries[static_cast<std::size_t>(idx)].id);
    const std::size_t pos = index.find(link);
    REQUIRE(pos != std::string::npos);
    CHECK(pos > last_pos);
    last_pos = pos;
  }

  // the alternative ordering is a static page of its own
  CHECK(index.find("index-by-generality.html") != std::string::npos);
  const std::string &by_gen = bundle.files.at("index-by-generality.html");
  CHECK(by_gen.find("discovery_") != std::string::npos);
}

TEST_CASE("crashing comparisons render an infinity symbol") {
  const std::string dir = make_temp_dir("inf");
  PlantedRun run = run_planted(dir, /*crash_side=*/true);
  REQUIRE_FALSE(run.campaign.discoveries.empty());
  Archive archive = archived(run, dir + "/archive");
  ReportBundle bundle = render_report(archive);
  CHECK(bundle.files.at("index.html").find("&#8734;") != std::string::npos);
}

TEST_CASE("an empty campaign still renders a valid index") {
  const std::string dir = make_temp_dir("empty");
  write_fixture_files(dir);
  json config{{"isa", dir + "/isa.json"},
              {"predictor_a", dir + "/uniform.json"},
              {"predictor_b", dir + "/uniform.json"},
              {"termination", {{"patience", 10}}},
              {"seed", 1}};
  CampaignConfig c = campaign_config_from_json(config);
  SchemeUniverse u = load_universe_file(c.isa_path, c.filters);
  Campaign campaign = run_campaign(u, c);
  REQUIRE(campaign.discoveries.empty());

  write_archive(campaign, c.isa_path, dir + "/archive");
  Archive archive = read_archive(dir + "/archive", u);
  ReportBundle bundle = render_report(archive);
  CHECK(bundle.files.size() == 2);
  CHECK(bundle.files.at("index.html").find("No discoveries.") !=
        std::string::npos);
}
