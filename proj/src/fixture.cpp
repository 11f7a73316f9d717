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

#include "bbdiff/fixture.hpp"

#include <filesystem>
#include <fstream>

namespace bbdiff {

namespace {

json reg_def(const char *name, int width, const char *group, bool reserved) {
  json j{{"name", name}, {"width", width}, {"alias_group", group}};
  if (reserved)
    j["reserved_for_memory"] = true;
  return j;
}

json reg_op(const char *access, int width) {
  return json{{"kind", "register"},
              {"access", access},
              {"register_class", "GPR"},
              {"width", width}};
}

json fixed_reg_op(const char *access, const char *name) {
  return json{{"kind", "register"}, {"access", access}, {"fixed_register", name}};
}

json mem_op(const char *access, int width) {
  return json{{"kind", "memory"}, {"access", access}, {"width", width}};
}

json imm_op(int width) { return json{{"kind", "immediate"}, {"width", width}}; }

json scheme(const char *id, const char *mnemonic, const char *category,
            const char *isa_set, int uops, json operands,
            json memory = nullptr, json prefixes = json::array()) {
  json j{{"id", id},          {"mnemonic", mnemonic}, {"category", category},
         {"isa_set", isa_set}, {"uop_count", uops},    {"operands", operands}};
  if (!memory.is_null())
    j["memory"] = memory;
  if (!prefixes.empty())
    j["prefixes"] = prefixes;
  return j;
}

json mem_usage(bool reads, bool writes, int size) {
  return json{{"reads", reads}, {"writes", writes}, {"size", size}};
}

} // namespace

json mini_isa_json() {
  json registers = json::array({
      reg_def("rax", 64, "GPR.a", false),
      reg_def("eax", 32, "GPR.a", false),
      reg_def("al", 8, "GPR.a", false),
      reg_def("rbx", 64, "GPR.b", false),
      reg_def("ebx", 32, "GPR.b", false),
      reg_def("bl", 8, "GPR.b", false),
      reg_def("rcx", 64, "GPR.c", true),
      reg_def("ecx", 32, "GPR.c", false),
      reg_def("cl", 8, "GPR.c", false),
      reg_def("rdx", 64, "GPR.d", true),
      reg_def("edx", 32, "GPR.d", false),
      reg_def("dl", 8, "GPR.d", false),
  });

  // Every memory operand sits in the first slot. That keeps read-only,
  // read-write and write-only schemes interchangeable at one block position,
  // so an abstract memory-usage constraint is never implied by the operand
  // layout alone and generalization has to keep it explicitly.
  json schemes = json::array({
      // Memory readers.
      scheme("cmp_m64_r64", "cmp", "compare", "BASE", 2,
             json::array({mem_op("R", 64), reg_op("R", 64)}),
             mem_usage(true, false, 64)),
      scheme("test_m64_r64", "test", "logic", "BASE", 2,
             json::array({mem_op("R", 64), reg_op("R", 64)}),
             mem_usage(true, false, 64)),
      scheme("cmp_m32_r32", "cmp", "compare", "BASE", 2,
             json::array({mem_op("R", 32), reg_op("R", 32)}),
             mem_usage(true, false, 32)),
      scheme("bt_m64_r64", "bt", "bittest", "I386", 2,
             json::array({mem_op("R", 64), reg_op("R", 64)}),
             mem_usage(true, false, 64)),
      // Read-modify-write: memory at operand 1.
      scheme("add_m64_r64", "add", "arith", "BASE", 2,
             json::array({mem_op("RW", 64), reg_op("R", 64)}),
             mem_usage(true, true, 64)),
      scheme("sub_m64_r64", "sub", "arith", "BASE", 2,
             json::array({mem_op("RW", 64), reg_op("R", 64)}),
             mem_usage(true, true, 64)),
      scheme("lock_add_m64_r64", "add", "arith", "LOCK", 8,
             json::array({mem_op("RW", 64), reg_op("R", 64)}),
             mem_usage(true, true, 64), json::array({"lock"})),
      scheme("not_m64", "not", "logic", "BASE", 2,
             json::array({mem_op("RW", 64)}), mem_usage(true, true, 64)),
      // Stores: memory write at operand 1.
      scheme("mov_m64_r64", "mov", "move", "BASE", 1,
             json::array({mem_op("W", 64), reg_op("R", 64)}),
             mem_usage(false, true, 64)),
      scheme("mov_m32_r32", "mov", "move", "BASE", 1,
             json::array({mem_op("W", 32), reg_op("R", 32)}),
             mem_usage(false, true, 32)),
      // Register and immediate forms.
      scheme("add_r64_r64", "add", "arith", "BASE", 1,
             json::array({reg_op("RW", 64), reg_op("R", 64)})),
      scheme("add_r32_r32", "add", "arith", "BASE", 1,
             json::array({reg_op("RW", 32), reg_op("R", 32)})),
      scheme("add_r64_i8", "add", "arith", "BASE", 1,
             json::array({reg_op("RW", 64), imm_op(8)})),
      scheme("adc_r64_r64", "adc", "arith", "BASE", 2,
             json::array({reg_op("RW", 64), reg_op("R", 64)})),
      scheme("sub_r64_r64", "sub", "arith", "BASE", 1,
             json::array({reg_op("RW", 64), reg_op("R", 64)})),
      scheme("xor_r64_r64", "xor", "logic", "BASE", 1,
             json::array({reg_op("RW", 64), reg_op("R", 64)})),
      scheme("and_r64_r64", "and", "logic", "BASE", 1,
             json::array({reg_op("RW", 64), reg_op("R", 64)})),
      scheme("or_r64_r64", "or", "logic", "BASE", 1,
             json::array({reg_op("RW", 64), reg_op("R", 64)})),
      scheme("not_r64", "not", "logic", "BASE", 1,
             json::array({reg_op("RW", 64)})),
      scheme("inc_r64", "inc", "arith", "BASE", 1,
             json::array({reg_op("RW", 64)})),
      scheme("imul_r64_r64", "imul", "mul", "BASE", 3,
             json::array({reg_op("RW", 64), reg_op("R", 64)})),
      scheme("shl_r64_cl", "shl", "shift", "BASE", 2,
             json::array({reg_op("RW", 64), fixed_reg_op("R", "cl")})),
      scheme("shr_r64_cl", "shr", "shift", "BASE", 2,
             json::array({reg_op("RW", 64), fixed_reg_op("R", "cl")})),
      scheme("sar_r64_i8", "sar", "shift", "BASE", 1,
             json::array({reg_op("RW", 64), imm_op(8)})),
      scheme("shld_r64_r64_cl", "shld", "shift", "BASE", 4,
             json::array({reg_op("RW", 64), reg_op("R", 64),
                          fixed_reg_op("R", "cl")})),
      scheme("bsf_r64_r64", "bsf", "bitscan", "I386", 2,
             json::array({reg_op("W", 64), reg_op("R", 64)})),
      scheme("bsr_r64_r64", "bsr", "bitscan", "I386", 2,
             json::array({reg_op("W", 64), reg_op("R", 64)})),
      scheme("bsf_r32_r32", "bsf", "bitscan", "I386", 2,
             json::array({reg_op("W", 32), reg_op("R", 32)})),
      scheme("nop", "nop", "nop", "BASE", 1, json::array()),
      scheme("rdrand_r64", "rdrand", "system", "RDRAND", 20,
             json::array({reg_op("W", 64)})),
  });

  return json{{"registers", std::move(registers)}, {"schemes", std::move(schemes)}};
}

json uniform_predictor_json(const SchemeUniverse &u, const std::string &name,
                            double cost) {
  json costs = json::object();
  for (const auto &s : u.schemes())
    costs[s.id] = cost;
  return json{{"name", name}, {"kind", "synthetic"}, {"costs", std::move(costs)}};
}

Rule planted_rule(double factor) {
  Rule r;
  r.pred = Rule::Pred::MemAliasReadWritePair;
  r.effect = Rule::Effect::Multiply;
  r.factor = factor;
  return r;
}

json planted_predictor_json(const SchemeUniverse &u, const std::string &name,
                            double cost, double factor) {
  json j = uniform_predictor_json(u, name, cost);
  j["rules"] = json::array(
      {json{{"when", {{"kind", "mem_alias_read_write_pair"}}},
            {"effect", {{"kind", "multiply"}, {"factor", factor}}}}});
  return j;
}

json crash_predictor_json(const SchemeUniverse &u, const std::string &name,
                          double cost, const std::string &category) {
  json j = uniform_predictor_json(u, name, cost);
  j["rules"] = json::array(
      {json{{"when",
             {{"kind", "feature_equals"},
              {"feature", "category"},
              {"value", category}}},
            {"effect", {{"kind", "crash"}}}}});
  return j;
}

json half_split_predictor_json(const SchemeUniverse &u, const std::string &name,
                               double differing_cost) {
  json costs = json::object();
  const auto &schemes = u.schemes();
  const std::size_t half = schemes.size() / 2;
  for (std::size_t i = 0; i < schemes.size(); ++i)
    costs[schemes[i].id] = i < half ? differing_cost : 0.0;
  return json{{"name", name}, {"kind", "synthetic"}, {"costs", std::move(costs)}};
}

void write_fixture_files(const std::string &dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write = [&dir](const std::string &name, const json &j) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot write fixture file '" + name + "'");
    out << j.dump(2) << "\n";
  };

  json isa = mini_isa_json();
  write("isa.json", isa);

  SchemeUniverse u = load_universe(isa);
  write("uniform.json", uniform_predictor_json(u, "uniform", 1.0));
  write("planted.json", planted_predictor_json(u, "planted", 1.0, 6.0));
  write("crash.json", crash_predictor_json(u, "crash", 1.0, "bitscan"));
  write("heat_a.json", half_split_predictor_json(u, "heat_a", 1.0));
  write("heat_b.json", half_split_predictor_json(u, "heat_b", 2.0));
}

} // namespace bbdiff
