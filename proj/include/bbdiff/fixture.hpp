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

#ifndef BBDIFF_FIXTURE_HPP
#define BBDIFF_FIXTURE_HPP

#include "bbdiff/isa.hpp"
#include "bbdiff/predictors.hpp"

namespace bbdiff {

// The synthetic mini ISA used by experiments and the CLI fixture generator:
// 30 instruction schemes over 12 registers in 4 alias groups (rcx/rdx are
// memory bases). All memory operands sit in the first operand slot, so
// read-only, read-write and write-only schemes are interchangeable at any
// block position: abstract memory-usage constraints are never implied by the
// operand layout and have to be kept explicitly to carry their signal.
json mini_isa_json();

// Every scheme costs `cost`; no rules.
json uniform_predictor_json(const SchemeUniverse &u, const std::string &name,
                            double cost);

// Uniform costs plus a multiplier that fires exactly on blocks containing a
// pair of aliasing memory operands where one reads and the other reads and
// writes. Pairing this with the uniform predictor plants one inconsistency
// class with a checkable oracle (planted_rule).
json planted_predictor_json(const SchemeUniverse &u, const std::string &name,
                            double cost, double factor);
Rule planted_rule(double factor);

// Uniform costs plus a crash on blocks containing the given category.
json crash_predictor_json(const SchemeUniverse &u, const std::string &name,
                          double cost, const std::string &category);

// The first half of the universe's schemes costs `differing_cost`, the rest
// cost 0. Two of these with different costs disagree exactly on blocks that
// contain at least one first-half scheme.
json half_split_predictor_json(const SchemeUniverse &u, const std::string &name,
                               double differing_cost);

// Writes isa.json plus the fixture predictor specs into `dir`.
void write_fixture_files(const std::string &dir);

} // namespace bbdiff

#endif // BBDIFF_FIXTURE_HPP
