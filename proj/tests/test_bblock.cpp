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

#include <map>

#include "bbdiff/bblock.hpp"
#include "bbdiff/fixture.hpp"

#include "helpers.hpp"

using namespace bbdiff;
using namespace bbdiff::testing;

TEST_CASE("instance construction validates against the scheme") {
  const SchemeUniverse &u = mini();

  CHECK_NOTHROW(ins(u, "add_r64_r64", {reg(u, "rax"), reg(u, "rbx")}));
  // operand count
  CHECK_THROWS_AS(ins(u, "nop", {reg(u, "rax")}), std::invalid_argument);
  // operand kind
  CHECK_THROWS_AS(ins(u, "add_r64_r64", {mem(u, "rcx", 0), reg(u, "rbx")}),
                  std::invalid_argument);
  // register width within the right class
  CHECK_THROWS_AS(ins(u, "add_r64_r64", {reg(u, "eax"), reg(u, "rbx")}),
                  std::invalid_argument);
  // fixed register slots accept exactly that register
  CHECK_NOTHROW(ins(u, "shl_r64_cl", {reg(u, "rax"), reg(u, "cl")}));
  CHECK_THROWS_AS(ins(u, "shl_r64_cl", {reg(u, "rax"), reg(u, "dl")}),
                  std::invalid_argument);
}

TEST_CASE("fixed immediates accept only the fixed value and render in hex") {
  json doc;
  doc["name"] = "fixed";
  doc["registers"] = json::array({reg_json("rax", 64, "GPR.a"),
                                  reg_json("rcx", 64, "GPR.c", true)});
  doc["schemes"] = json::array({{{"id", "shl_r64_1"},
                                 {"mnemonic", "shl"},
                                 {"category", "shift"},
                                 {"isa_set", "BASE"},
                                 {"uop_count", 1},
                                 {"operands",
                                  json::array({{{"kind", "register"},
                                                {"access", "RW"},
                                                {"width", 64},
                                                {"register_class", "GPR"}},
                                               {{"kind", "immediate"},
                                                {"width", 8},
                                                {"fixed_value", 1}}})}}});
  SchemeUniverse u = load_universe(doc);
  CHECK_THROWS_AS(ins(u, "shl_r64_1", {reg(u, "rax"), imm(2)}),
                  std::invalid_argument);
  BasicBlock b({ins(u, "shl_r64_1", {reg(u, "rax"), imm(1)})});
  CHECK(render(b) == "shl rax, 0x1\n");
}

TEST_CASE("blocks must be non-empty") {
  CHECK_THROWS_AS(BasicBlock({}), std::invalid_argument);
}

TEST_CASE("operands_match pairs comparable slots only") {
  const SchemeUniverse &u = mini();
  // registers of one class match even across widths
  CHECK(operands_match(reg(u, "rax"), reg(u, "eax")));
  CHECK(operands_match(reg(u, "rax"), reg(u, "bl")));
  // any two memory operands match
  CHECK(operands_match(mem(u, "rcx", 0), mem(u, "rdx", 42)));
  // mixed kinds and immediates never match
  CHECK_FALSE(operands_match(reg(u, "rax"), mem(u, "rcx", 0)));
  CHECK_FALSE(operands_match(imm(1), imm(1)));
  CHECK_FALSE(operands_match(reg(u, "rax"), imm(1)));
}

TEST_CASE("do_alias follows alias groups and syntactic addresses") {
  const SchemeUniverse &u = mini();
  // same register, same group, different group
  CHECK(do_alias(reg(u, "rbx"), reg(u, "rbx")));
  CHECK(do_alias(reg(u, "rax"), reg(u, "eax")));
  CHECK(do_alias(reg(u, "al"), reg(u, "rax")));
  CHECK_FALSE(do_alias(reg(u, "rax"), reg(u, "ebx")));
  // memory: identical (base, displacement) only
  CHECK(do_alias(mem(u, "rcx", 16), mem(u, "rcx", 16)));
  CHECK_FALSE(do_alias(mem(u, "rcx", 16), mem(u, "rcx", 128)));
  CHECK_FALSE(do_alias(mem(u, "rcx", 16), mem(u, "rdx", 16)));
  // symmetry
  CHECK(do_alias(mem(u, "rdx", 0), mem(u, "rdx", 0)));
  CHECK(do_alias(reg(u, "eax"), reg(u, "rax")));
  // mismatched operands are a caller bug
  CHECK_THROWS_AS(do_alias(reg(u, "rax"), mem(u, "rcx", 0)), std::logic_error);
}

TEST_CASE("render produces Intel-style text with one trailing newline") {
  const SchemeUniverse &x = example_universe();
  BasicBlock b({ins(x, "mov_r64_m64", {reg(x, "rbx"), mem(x, "rdx", 42)}),
                ins(x, "add_m64_r64", {mem(x, "r8", 0), reg(x, "rbx")})});
  CHECK(render(b) == "mov rbx, [rdx + 42]\nadd [r8], rbx\n");

  const SchemeUniverse &u = mini();
  BasicBlock one({ins(u, "add_r64_i8", {reg(u, "rax"), imm(42)})});
  CHECK(render(one) == "add rax, 42\n");

  BasicBlock locked({ins(u, "lock_add_m64_r64", {mem(u, "rcx", 64), reg(u, "rbx")})});
  CHECK(render(locked) == "lock add [rcx + 64], rbx\n");

  BasicBlock neg({ins(x, "add_m64_r64", {mem(x, "r8", -8), reg(x, "rax")})});
  CHECK(render(neg) == "add [r8 - 8], rax\n");

  BasicBlock solo({ins(u, "nop", {})});
  CHECK(render(solo) == "nop\n");
}

namespace {

// All instances of one scheme over a small operand value space.
std::vector<InstructionInstance> enumerate_instances(const SchemeUniverse &u,
                                                     const InstructionScheme &s) {
  std::vector<std::vector<ConcreteOperand>> partial{{}};
  for (const auto &op : s.operands) {
    std::vector<ConcreteOperand> choices;
    switch (op.kind) {
    case OperandKind::Register:
      if (op.fixed_register) {
        choices.push_back(ConcreteOperand::make_reg(
            u.find_register(*op.fixed_register)));
      } else {
        for (const auto *r :
             u.class_members(op.register_class, op.width, /*usable_only=*/true))
          choices.push_back(ConcreteOperand::make_reg(r));
      }
      break;
    case OperandKind::Memory:
      for (const auto *base : u.memory_base_registers())
        for (std::int64_t disp : {std::int64_t{0}, std::int64_t{64}})
          choices.push_back(ConcreteOperand::make_mem(base, disp));
      break;
    case OperandKind::Immediate:
      if (op.fixed_value) {
        choices.push_back(ConcreteOperand::make_imm(*op.fixed_value));
      } else {
        choices.push_back(ConcreteOperand::make_imm(0));
        choices.push_back(ConcreteOperand::make_imm(5));
      }
      break;
    }
    std::vector<std::vector<ConcreteOperand>> next;
    for (const auto &p : partial)
      for (const auto &c : choices) {
        auto q = p;
        q.push_back(c);
        next.push_back(std::move(q));
      }
    partial = std::move(next);
  }
  std::vector<InstructionInstance> out;
  out.reserve(partial.size());
  for (auto &ops : partial)
    out.emplace_back(&s, std::move(ops));
  return out;
}

} // namespace

TEST_CASE("render is injective over short fixture blocks") {
  const SchemeUniverse &u = mini();
  std::vector<InstructionInstance> singles;
  for (const auto &s : u.schemes())
    for (auto &i : enumerate_instances(u, s))
      singles.push_back(std::move(i));

  std::map<std::string, std::string> seen; // render -> structural key
  auto check_block = [&](const BasicBlock &b) {
    const std::string text = render(b);
    const std::string key = block_to_json(b).dump();
    auto [it, inserted] = seen.emplace(text, key);
    if (!inserted)
      CHECK(it->second == key);
  };

  for (const auto &a : singles)
    check_block(BasicBlock({a}));
  for (const auto &a : singles)
    for (const auto &b : singles)
      check_block(BasicBlock({a, b}));
  CHECK(seen.size() > singles.size());
}

TEST_CASE("block json round-trips and rejects unknown schemes") {
  const SchemeUniverse &u = mini();
  BasicBlock b({ins(u, "cmp_m64_r64", {mem(u, "rdx", 128), reg(u, "rax")}),
                ins(u, "add_r64_i8", {reg(u, "rbx"), imm(7)}),
                ins(u, "shl_r64_cl", {reg(u, "rax"), reg(u, "cl")})});
  json j = block_to_json(b);
  BasicBlock back = block_from_json(j, u);
  CHECK(back == b);
  CHECK(render(back) == render(b));

  json bad = j;
  bad["insns"][0]["scheme"] = "no_such_scheme";
  CHECK_THROWS(block_from_json(bad, u));
}
