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

#include <set>

#include "bbdiff/absdom.hpp"
#include "bbdiff/rng.hpp"
#include "bbdiff/sampler.hpp"

#include "helpers.hpp"

using namespace bbdiff;
using namespace bbdiff::testing;

namespace {

// Every alias constraint of `ab` must hold concretely in `block`.
void check_alias_constraints(const AbstractBlock &ab, const BasicBlock &block) {
  for (const auto &[pair, kind] : ab.aliasing) {
    const ConcreteOperand &a =
        block.insns[pair.first.insn - 1].operands[pair.first.op - 1];
    const ConcreteOperand &b =
        block.insns[pair.second.insn - 1].operands[pair.second.op - 1];
    REQUIRE(operands_match(a, b));
    CHECK(do_alias(a, b) == (kind == AliasKind::Must));
  }
}

} // namespace

TEST_CASE("samples are members of the abstract block they came from") {
  const SchemeUniverse &u = mini();
  Rng rng(1010);
  for (int trial = 0; trial < 60; ++trial) {
    BasicBlock base = sample_unconstrained(u, rng.uniform_int(1, 4), rng);
    AbstractBlock ab = represent(base);
    for (int step = 0; step < 5; ++step) {
      auto exps = available_expansions(ab);
      if (exps.empty())
        break;
      ab = apply_expansion(ab, exps[rng.uniform_index(exps.size())]);
    }
    SampleResult r = sample(u, ab, rng);
    REQUIRE(r.block.has_value());
    CHECK(member(*r.block, ab));
    check_alias_constraints(ab, *r.block);
  }
}

TEST_CASE("contradictory fixed-register constraints dead-end with a reason") {
  const SchemeUniverse &u = mini();
  BasicBlock two({ins(u, "shl_r64_cl", {reg(u, "rax"), reg(u, "cl")}),
                  ins(u, "shl_r64_cl", {reg(u, "rbx"), reg(u, "cl")})});
  AbstractBlock ab = represent(two);
  // both count slots are hard-wired to cl; demanding they not alias can
  // never be satisfied, no matter how often the sampler retries
  ab.aliasing[AliasPair({1, 2}, {2, 2})] = AliasKind::MustNot;

  SamplerConfig config;
  config.max_retries = 7;
  Rng rng(2020);
  SampleResult r = sample(u, ab, rng, config);
  CHECK_FALSE(r.block.has_value());
  CHECK(r.failed_attempts == 7);
  CHECK(r.failure_reason.find("cl") != std::string::npos);
}

TEST_CASE("an empty concretization is a precondition violation") {
  const SchemeUniverse &u = mini();
  AbstractBlock ab;
  ab.insns.resize(1);
  ab.insns[0].at(Feature::Category) = SingletonV{"no_such_category"};
  Rng rng(3030);
  CHECK_THROWS_AS(sample(u, ab, rng), EmptyConcretization);
}

TEST_CASE("unconstrained sampling reaches every scheme") {
  const SchemeUniverse &u = mini();
  Rng rng(4040);
  std::set<std::string> seen;
  for (int i = 0; i < 10000; ++i) {
    BasicBlock b = sample_unconstrained(u, 1, rng);
    seen.insert(b.insns[0].scheme->id);
  }
  CHECK(seen.size() == u.num_schemes());
}

TEST_CASE("unconstrained sampling validates the length") {
  const SchemeUniverse &u = mini();
  Rng rng(5050);
  CHECK_THROWS_AS(sample_unconstrained(u, 0, rng), std::invalid_argument);
  CHECK(sample_unconstrained(u, 5, rng).size() == 5);
}

TEST_CASE("sampling is deterministic under a fixed seed") {
  const SchemeUniverse &u = mini();
  auto draw = [&] {
    Rng rng(6060);
    std::vector<std::string> texts;
    for (int i = 0; i < 20; ++i)
      texts.push_back(render(sample_unconstrained(u, 3, rng)));
    return texts;
  };
  CHECK(draw() == draw());
}

TEST_CASE("batches fill completely or report being underfilled") {
  const SchemeUniverse &u = mini();
  Rng rng(7070);

  AbstractBlock easy;
  easy.insns.resize(2);
  BatchResult ok = sample_batch(u, easy, 25, rng);
  CHECK(ok.blocks.size() == 25);
  CHECK_FALSE(ok.underfilled);

  BasicBlock two({ins(u, "shl_r64_cl", {reg(u, "rax"), reg(u, "cl")}),
                  ins(u, "shl_r64_cl", {reg(u, "rbx"), reg(u, "cl")})});
  AbstractBlock impossible = represent(two);
  impossible.aliasing[AliasPair({1, 2}, {2, 2})] = AliasKind::MustNot;
  SamplerConfig config;
  config.max_retries = 3;
  BatchResult bad = sample_batch(u, impossible, 4, rng, config);
  CHECK(bad.underfilled);
  CHECK(bad.blocks.empty());
  CHECK(bad.failed_attempts >= config.max_retries);
}

TEST_CASE("reserved registers only ever serve as memory bases") {
  const SchemeUniverse &u = mini();
  Rng rng(8080);
  SamplerConfig config;
  const std::set<std::int64_t> pool(config.memory_displacement_pool.begin(),
                                    config.memory_displacement_pool.end());
  for (int i = 0; i < 2000; ++i) {
    BasicBlock b = sample_unconstrained(u, 3, rng);
    for (const auto &insn : b.insns)
      for (std::size_t o = 0; o < insn.operands.size(); ++o) {
        const ConcreteOperand &op = insn.operands[o];
        if (op.kind == OperandKind::Register)
          CHECK_FALSE(op.reg->reserved_for_memory);
        if (op.kind == OperandKind::Memory) {
          CHECK(op.mem_base->reserved_for_memory);
          CHECK(pool.count(op.mem_displacement) == 1);
        }
        if (op.kind == OperandKind::Immediate &&
            !insn.scheme->operands[o].fixed_value) {
          CHECK(op.value >= 0);
          CHECK(op.value < 256);
        }
      }
  }
}

TEST_CASE("must-alias groups share a location, must-not groups never do") {
  const SchemeUniverse &u = mini();
  BasicBlock seed({ins(u, "add_m64_r64", {mem(u, "rcx", 16), reg(u, "rbx")}),
                   ins(u, "cmp_m64_r64", {mem(u, "rcx", 16), reg(u, "rax")})});
  AbstractBlock ab = represent(seed);
  REQUIRE(ab.aliasing.at(AliasPair({1, 1}, {2, 1})) == AliasKind::Must);
  REQUIRE(ab.aliasing.at(AliasPair({1, 2}, {2, 2})) == AliasKind::MustNot);

  Rng rng(9090);
  for (int i = 0; i < 200; ++i) {
    SampleResult r = sample(u, ab, rng);
    REQUIRE(r.block.has_value());
    const auto &insns = r.block->insns;
    const ConcreteOperand &m1 = insns[0].operands[0];
    const ConcreteOperand &m2 = insns[1].operands[0];
    CHECK(m1.mem_base == m2.mem_base);
    CHECK(m1.mem_displacement == m2.mem_displacement);
    CHECK(insns[0].operands[1].reg->alias_group !=
          insns[1].operands[1].reg->alias_group);
  }
}

TEST_CASE("a narrowed displacement pool is respected") {
  const SchemeUniverse &u = mini();
  SamplerConfig config;
  config.memory_displacement_pool = {8};
  Rng rng(10101);
  for (int i = 0; i < 100; ++i) {
    BasicBlock b = sample_unconstrained(u, 2, rng, config);
    for (const auto &insn : b.insns)
      for (const auto &op : insn.operands)
        if (op.kind == OperandKind::Memory)
          CHECK(op.mem_displacement == 8);
  }
}
