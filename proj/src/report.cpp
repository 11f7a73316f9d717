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

#include "bbdiff/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bbdiff/analysis.hpp"

namespace bbdiff {

namespace {

std::string escape_html(const std::string &s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
    case '&': out += "&amp;"; break;
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '"': out += "&quot;"; break;
    case '\'': out += "&#39;"; break;
    default: out += c;
    }
  }
  return out;
}

// Numbers that trace back to archive records are printed exactly as their
// JSON serialization and tagged so tests can re-extract them.
std::string num(const json &v) {
  return "<span class=\"num\">" + v.dump() + "</span>";
}

std::string fmt_mean(double mean) {
  if (std::isinf(mean))
    return "&#8734;"; // ∞
  return num(mean);
}

std::string fmt_difference(const std::optional<double> &d) {
  if (!d)
    return "&#8212;"; // — (unsupported on one side)
  if (std::isinf(*d))
    return "&#8734;";
  return num(*d);
}

std::string fmt_result(const PredictorResult &r) {
  switch (r.kind) {
  case PredictorResult::Kind::Cycles:
    return num(r.cycles);
  case PredictorResult::Kind::Crash:
    return "crash";
  case PredictorResult::Kind::Timeout:
    return "timeout";
  case PredictorResult::Kind::Unsupported:
    return "unsupported";
  }
  return "?";
}

std::string padded(int id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", id);
  return buf;
}

std::string feature_value_str(const FeatureValue &v) {
  if (std::holds_alternative<TopV>(v))
    return "&#8868;"; // ⊤
  if (const auto *s = std::get_if<SingletonV>(&v))
    return escape_html(s->value);
  if (const auto *e = std::get_if<EditDistanceV>(&v))
    return escape_html(e->base) + " &plusmn;" + std::to_string(e->distance);
  if (const auto *l = std::get_if<LogSizeV>(&v))
    return "&lt; 2^" + std::to_string(l->bound);
  if (const auto *ss = std::get_if<SubsetV>(&v)) {
    std::string out = "&supe; {";
    bool first = true;
    for (const auto &el : ss->elements) {
      if (!first)
        out += ", ";
      out += escape_html(el);
      first = false;
    }
    return out + "}";
  }
  return "none"; // DefNoneV
}

std::string slot_str(const OperandRef &r) {
  return std::to_string(r.insn) + "." + std::to_string(r.op);
}

std::string expansion_str(const Expansion &e) {
  if (e.kind == Expansion::Kind::AliasDrop)
    return "drop aliasing constraint on (" + slot_str(e.pair.first) + ", " +
           slot_str(e.pair.second) + ")";
  return "insn " + std::to_string(e.insn) + ", " + feature_name(e.feature) +
         ": " + feature_value_str(e.from) + " &rarr; " + feature_value_str(e.to);
}

std::string abstract_block_html(const AbstractBlock &ab) {
  std::ostringstream out;
  out << "<table class=\"ab\"><tr><th></th>";
  for (Feature f : kAllFeatures)
    out << "<th>" << feature_name(f) << "</th>";
  out << "</tr>\n";
  for (std::size_t i = 0; i < ab.insns.size(); ++i) {
    out << "<tr><td>insn " << (i + 1) << "</td>";
    for (Feature f : kAllFeatures)
      out << "<td>" << feature_value_str(ab.insns[i].at(f)) << "</td>";
    out << "</tr>\n";
  }
  out << "</table>\n";
  if (ab.aliasing.empty()) {
    out << "<p>No aliasing constraints.</p>\n";
  } else {
    out << "<ul class=\"alias\">\n";
    for (const auto &[pair, kind] : ab.aliasing)
      out << "<li>" << (kind == AliasKind::Must ? "must alias" : "must not alias")
          << " (" << slot_str(pair.first) << ", " << slot_str(pair.second)
          << ")</li>\n";
    out << "</ul>\n";
  }
  return out.str();
}

std::string evidence_html(const Evidence &e) {
  std::ostringstream out;
  out << "<details><summary>evidence (" << e.samples.size() << " samples";
  if (e.underfilled)
    out << ", underfilled batch";
  if (e.sampler_failures > 0)
    out << ", " << num(e.sampler_failures) << " sampler failures";
  out << ")</summary>\n<table class=\"ev\"><tr><th>block</th><th>tool A</th>"
         "<th>tool B</th><th>difference</th><th>interesting</th></tr>\n";
  for (const auto &s : e.samples) {
    out << "<tr><td><pre>" << escape_html(render(s.block)) << "</pre></td><td>"
        << fmt_result(s.result_a) << "</td><td>" << fmt_result(s.result_b)
        << "</td><td>" << fmt_difference(s.difference) << "</td><td>"
        << (s.interesting ? "yes" : "no") << "</td></tr>\n";
  }
  out << "</table></details>\n";
  return out.str();
}

const char *kStyle = R"(<style>
body { font-family: sans-serif; margin: 2em; color: #222; }
table { border-collapse: collapse; margin: 0.6em 0; }
th, td { border: 1px solid #bbb; padding: 0.25em 0.6em; text-align: left; }
th { background: #eee; }
pre { margin: 0; font-size: 0.95em; }
.accepted > .label { color: #0a6b0a; font-weight: 600; }
.rejected > .label { color: #a33; }
ul.tree, ul.tree ul { list-style: none; border-left: 1px dotted #999;
  margin: 0.2em 0 0.2em 1em; padding-left: 1em; }
.flag { color: #a33; font-style: italic; }
details { margin: 0.3em 0; }
</style>
)";

std::string page(const std::string &title, const std::string &body) {
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
      << "<title>" << escape_html(title) << "</title>\n"
      << kStyle << "</head>\n<body>\n<h1>" << escape_html(title) << "</h1>\n"
      << body << "</body>\n</html>\n";
  return out.str();
}

std::string discovery_link(int id) {
  return "<a href=\"discovery_" + padded(id) + ".html\">" + padded(id) + "</a>";
}

std::string index_table(const std::vector<Discovery> &ds,
                        const std::vector<int> &order) {
  std::ostringstream out;
  out << "<table><tr><th>discovery</th><th>mean difference</th>"
         "<th>generality</th><th>length</th><th>origin block</th>"
         "<th>notes</th></tr>\n";
  for (int i : order) {
    const Discovery &d = ds[static_cast<std::size_t>(i)];
    out << "<tr><td>" << discovery_link(d.id) << "</td><td>"
        << fmt_mean(d.metrics.mean_difference) << "</td><td>"
        << num(d.metrics.generality) << "</td><td>" << d.ab.size()
        << "</td><td><pre>" << escape_html(render(d.origin)) << "</pre></td><td>"
        << (d.base_not_interesting
                ? "<span class=\"flag\">not generalizable</span>"
                : "")
        << "</td></tr>\n";
  }
  out << "</table>\n";
  return out.str();
}

std::string render_index(const Archive &archive, bool by_generality) {
  const auto &ds = archive.discoveries;
  std::ostringstream body;

  body << "<p>Tool pair: <b>"
       << escape_html(archive.config.at("predictor_a").at("name").get<std::string>())
       << "</b> vs <b>"
       << escape_html(archive.config.at("predictor_b").at("name").get<std::string>())
       << "</b>, metric " << archive.config.at("metric").get<std::string>()
       << ", threshold " << num(archive.config.at("threshold")) << ", seed "
       << num(archive.config.at("seed")) << ".</p>\n";

  body << "<table><tr><th>candidates</th><th>interesting</th>"
          "<th>subsumed early</th><th>sampler failures</th>"
          "<th>discoveries (pre-filter)</th><th>discoveries (kept)</th></tr>"
          "<tr>";
  for (const char *key : {"candidates", "interesting_candidates",
                          "subsumed_early", "sampler_failures",
                          "discoveries_before_filter",
                          "discoveries_after_filter"})
    body << "<td>" << num(archive.stats.at(key)) << "</td>";
  body << "</tr></table>\n";

  if (by_generality)
    body << "<p>Sorted by generality. "
            "<a href=\"index.html\">Sort by interestingness</a></p>\n";
  else
    body << "<p>Sorted by mean interestingness. "
            "<a href=\"index-by-generality.html\">Sort by generality</a></p>\n";

  if (ds.empty())
    body << "<p>No discoveries.</p>\n";
  else
    body << index_table(ds, by_generality ? order_by_generality(ds)
                                          : order_by_interestingness(ds));
  return page("Discoveries", body.str());
}

std::string render_discovery(const Discovery &d) {
  std::ostringstream body;
  body << "<p><a href=\"index.html\">&larr; index</a> &middot; "
       << "<a href=\"witness_" << padded(d.id)
       << ".html\">generalization tree</a></p>\n";
  body << "<h2>Metrics</h2>\n<table><tr><th>mean difference</th>"
       << "<th>generality</th></tr><tr><td>"
       << fmt_mean(d.metrics.mean_difference) << "</td><td>"
       << num(d.metrics.generality) << "</td></tr></table>\n";
  if (d.base_not_interesting)
    body << "<p class=\"flag\">The representation of the origin block was not "
            "interesting on its own; this discovery was not generalized.</p>\n";

  body << "<h2>Abstract block</h2>\n" << abstract_block_html(d.ab);
  body << "<h2>Origin block</h2>\n<pre>" << escape_html(render(d.origin))
       << "</pre>\n";

  // Deepest accepted node = the final state of the generalization.
  const WitnessNode *node = &d.witness;
  while (true) {
    const WitnessNode *next = nullptr;
    for (const auto &child : node->children)
      if (child.accepted)
        next = &child;
    if (!next)
      break;
    node = next;
  }
  body << "<h2>Example blocks</h2>\n" << evidence_html(node->evidence);
  return page("Discovery " + padded(d.id), body.str());
}

std::string witness_node_html(const WitnessNode &node) {
  std::ostringstream out;
  out << "<li class=\"" << (node.accepted ? "accepted" : "rejected") << "\">"
      << "<span class=\"label\">"
      << (node.accepted ? "accepted" : "rejected") << ": "
      << (node.expansion ? expansion_str(*node.expansion)
                         : std::string("origin representation"))
      << "</span>\n";
  out << abstract_block_html(node.ab);
  out << evidence_html(node.evidence);
  if (!node.children.empty()) {
    out << "<ul class=\"tree\">\n";
    for (const auto &child : node.children)
      out << witness_node_html(child);
    out << "</ul>\n";
  }
  out << "</li>\n";
  return out.str();
}

std::string render_witness(const Discovery &d) {
  std::ostringstream body;
  body << "<p><a href=\"index.html\">&larr; index</a> &middot; "
       << "<a href=\"discovery_" << padded(d.id)
       << ".html\">discovery page</a></p>\n";
  body << "<p>Accepted expansions form the path to the final abstract block; "
          "rejected expansions are leaves. Every decision lists the sampled "
          "blocks and both tools' predictions that justified it.</p>\n";
  body << "<ul class=\"tree\">\n" << witness_node_html(d.witness) << "</ul>\n";
  return page("Generalization tree " + padded(d.id), body.str());
}

} // namespace

ReportBundle render_report(const Archive &archive) {
  ReportBundle bundle;
  bundle.files["index.html"] = render_index(archive, false);
  bundle.files["index-by-generality.html"] = render_index(archive, true);
  for (const auto &d : archive.discoveries) {
    bundle.files["discovery_" + padded(d.id) + ".html"] = render_discovery(d);
    bundle.files["witness_" + padded(d.id) + ".html"] = render_witness(d);
  }
  return bundle;
}

void write_report(const ReportBundle &bundle, const std::string &out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  for (const auto &[name, content] : bundle.files) {
    std::ofstream out(fs::path(out_dir) / name, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot write report file '" + name + "'");
    out << content;
  }
}

} // namespace bbdiff
