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

#ifndef BBDIFF_REPORT_HPP
#define BBDIFF_REPORT_HPP

#include <map>
#include <string>

#include "bbdiff/discovery.hpp"

namespace bbdiff {

// A rendered static site: file name -> content. Self-contained HTML with
// inline styles; no scripts, no network fetches, no timestamps. Rendering is
// a pure function of the archive, so regeneration is byte-identical.
struct ReportBundle {
  std::map<std::string, std::string> files;
};

// Pages: index.html (discoveries ranked by mean interestingness, with a
// static link to the by-generality ordering), index-by-generality.html,
// discovery_NNN.html (abstract block, metrics, example blocks) and
// witness_NNN.html (the generalization tree: accepted expansions as a path,
// rejected ones as leaves, every decision with its evidence table).
// Numeric claims carry class="num" and are printed exactly as their JSON
// serialization so they can be traced back to the archive.
ReportBundle render_report(const Archive &archive);

void write_report(const ReportBundle &bundle, const std::string &out_dir);

} // namespace bbdiff

#endif // BBDIFF_REPORT_HPP
