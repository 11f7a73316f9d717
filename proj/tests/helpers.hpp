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

#ifndef BBDIFF_TESTS_HELPERS_HPP
#define BBDIFF_TESTS_HELPERS_HPP

#include <sys/stat.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bbdiff/bblock.hpp"
#include "bbdiff/fixture.hpp"
#include "bbdiff/isa.hpp"

namespace bbdiff::testing {

// The 30-scheme fixture universe, loaded once.
inline const SchemeUniverse &mini() {
  static SchemeUniverse u = load_universe(mini_isa_json());
  return u;
}

inline json reg_json(const std::string &name, int width,
                     const std::string &group, bool reserved = false) {
  json r{{"name", name}, {"width", width}, {"alias_group", group}};
  if (reserved)
    r["reserved_for_memory"] = true;
  return r;
}

// A four-register, three-scheme universe shaped after the classic worked
// example: a load through one base register, a read-modify-write through the
// other, and a nop. Handy wherever a test wants "mov rbx, [rdx + 42]" or
// "add [r8], rbx" verbatim.
inline json example_isa_json() {
  json doc;
  doc["name"] = "example";
  doc["registers"] = json::array({
      reg_json("rax", 64, "GPR.a"),
      reg_json("rbx", 64, "GPR.b"),
      reg_json("rdx", 64, "GPR.d", true),
      reg_json("r8", 64, "GPR.e", true),
  });
  const json reg_r = {{"kind", "register"}, {"access", "R"}, {"width", 64},
                      {"register_class", "GPR"}};
  const json reg_w = {{"kind", "register"}, {"access", "W"}, {"width", 64},
                      {"register_class", "GPR"}};
  const json mem_r = {{"kind", "memory"}, {"access", "R"}, {"width", 64}};
  const json mem_rw = {{"kind", "memory"}, {"access", "RW"}, {"width", 64}};
  doc["schemes"] = json::array({
      {{"id", "mov_r64_m64"},
       {"mnemonic", "mov"},
       {"category", "move"},
       {"isa_set", "BASE"},
       {"uop_count", 1},
       {"operands", json::array({reg_w, mem_r})},
       {"memory", {{"reads", true}, {"writes", false}, {"size", 64}}}},
      {{"id", "add_m64_r64"},
       {"mnemonic", "add"},
       {"category", "arith"},
       {"isa_set", "BASE"},
       {"uop_count", 1},
       {"operands", json::array({mem_rw, reg_r})},
       {"memory", {{"reads", true}, {"writes", true}, {"size", 64}}}},
      {{"id", "nop"},
       {"mnemonic", "nop"},
       {"category", "nop"},
       {"isa_set", "BASE"},
       {"uop_count", 1},
       {"operands", json::array()}},
  });
  return doc;
}

inline const SchemeUniverse &example_universe() {
  static SchemeUniverse u = load_universe(example_isa_json());
  return u;
}

// Two schemes indistinguishable in every feature (only the id differs). A
// cost model keyed on scheme ids can then tell apart blocks their shared
// abstraction cannot: the representative of a twin_a block also concretizes
// to twin_b.
inline json twin_isa_json() {
  json doc;
  doc["name"] = "twins";
  doc["registers"] = json::array({
      reg_json("rax", 64, "GPR.a"),
      reg_json("rbx", 64, "GPR.b"),
      reg_json("rcx", 64, "GPR.c", true),
  });
  const json twin_ops = json::array({{{"kind", "register"},
                                      {"access", "RW"},
                                      {"width", 64},
                                      {"register_class", "GPR"}}});
  json twin_a{{"id", "twin_a"},     {"mnemonic", "twin"},
              {"category", "arith"}, {"isa_set", "BASE"},
              {"uop_count", 1},      {"operands", twin_ops}};
  json twin_b = twin_a;
  twin_b["id"] = "twin_b";
  doc["schemes"] = json::array({twin_a, twin_b});
  return doc;
}

inline const SchemeUniverse &twin_universe() {
  static SchemeUniverse u = load_universe(twin_isa_json());
  return u;
}

inline InstructionInstance ins(const SchemeUniverse &u, const std::string &id,
                               std::vector<ConcreteOperand> ops) {
  const InstructionScheme *s = u.find_scheme(id);
  if (!s)
    throw std::runtime_error("test referenced unknown scheme " + id);
  return InstructionInstance(s, std::move(ops));
}

inline ConcreteOperand reg(const SchemeUniverse &u, const std::string &name) {
  return ConcreteOperand::make_reg(u.find_register(name));
}

inline ConcreteOperand mem(const SchemeUniverse &u, const std::string &base,
                           std::int64_t disp) {
  return ConcreteOperand::make_mem(u.find_register(base), disp);
}

inline ConcreteOperand imm(std::int64_t v) {
  return ConcreteOperand::make_imm(v);
}

inline std::string make_temp_dir(const std::string &tag) {
  std::string templ = "/tmp/bbdiff_test_" + tag + "_XXXXXX";
  std::vector<char> buf(templ.begin(), templ.end());
  buf.push_back('\0');
  if (!mkdtemp(buf.data()))
    throw std::runtime_error("mkdtemp failed");
  return std::string(buf.data());
}

inline void write_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out)
    throw std::runtime_error("cannot write " + path);
}

inline std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes an executable shell script and returns its path.
inline std::string make_script(const std::string &dir, const std::string &name,
                               const std::string &body) {
  const std::string path = dir + "/" + name;
  write_file(path, "#!/bin/sh\n" + body);
  ::chmod(path.c_str(), 0755);
  return path;
}

} // namespace bbdiff::testing

#endif // BBDIFF_TESTS_HELPERS_HPP
