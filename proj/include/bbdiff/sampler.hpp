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

#ifndef BBDIFF_SAMPLER_HPP
#define BBDIFF_SAMPLER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bbdiff/absdom.hpp"
#include "bbdiff/bblock.hpp"
#include "bbdiff/rng.hpp"

namespace bbdiff {

struct SamplerConfig {
  // Fresh greedy passes before giving up on one sample.
  int max_retries = 100;
  // Displacements available to memory operands; bases come from the
  // universe's reserved registers. Distinct (base, displacement) pairs are
  // what makes must-not-alias between memory operands satisfiable.
  std::vector<std::int64_t> memory_displacement_pool = {0, 64, 128, 192};
};

// Raised when some abstract instruction has an empty concretization: no
// amount of retrying can help, the caller violated the sampler precondition.
class EmptyConcretization : public std::runtime_error {
public:
  explicit EmptyConcretization(const std::string &msg)
      : std::runtime_error(msg) {}
};

struct SampleResult {
  std::optional<BasicBlock> block; // empty after max_retries dead ends
  int failed_attempts = 0;
  std::string failure_reason; // last dead-ended constraint, for evidence
};

// Greedy concretization: pick a represented scheme per instruction, fix
// fixed-register operands and propagate must-alias groups, then fill the
// remaining operands avoiding must-not conflicts. Dead ends restart the whole
// pass with fresh choices.
SampleResult sample(const SchemeUniverse &u, const AbstractBlock &ab, Rng &rng,
                    const SamplerConfig &config = {});

struct BatchResult {
  std::vector<BasicBlock> blocks;
  int failed_attempts = 0;
  bool underfilled = false;
};

BatchResult sample_batch(const SchemeUniverse &u, const AbstractBlock &ab,
                         int count, Rng &rng, const SamplerConfig &config = {});

// Draws from the fully unconstrained abstract block of the given length.
// Throws std::runtime_error if even that dead-ends repeatedly (a broken
// universe, e.g. one without memory base registers).
BasicBlock sample_unconstrained(const SchemeUniverse &u, int length, Rng &rng,
                                const SamplerConfig &config = {});

} // namespace bbdiff

#endif // BBDIFF_SAMPLER_HPP
