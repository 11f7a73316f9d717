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

#include "bbdiff/bblock.hpp"

#include <sstream>
#include <stdexcept>

namespace bbdiff {

namespace {

[[noreturn]] void bad(const std::string &msg) { throw std::invalid_argument(msg); }

void validate_operand(const InstructionScheme &scheme, std::size_t idx,
                      const OperandScheme &os, const ConcreteOperand &op) {
  const std::string where =
      "scheme '" + scheme.id + "' operand " + std::to_string(idx + 1);
  if (op.kind != os.kind)
    bad(where + ": operand kind does not match scheme");
  switch (os.kind) {
  case OperandKind::Register:
    if (!op.reg)
      bad(where + ": missing register");
    if (os.fixed_register) {
      if (op.reg->name != *os.fixed_register)
        bad(where + ": scheme fixes register '" + *os.fixed_register + "', got '" +
            op.reg->name + "'");
    } else {
      if (op.reg->reg_class() != os.register_class || op.reg->width != os.width)
        bad(where + ": register '" + op.reg->name + "' is not a " +
            os.register_class + ":" + std::to_string(os.width));
    }
    break;
  case OperandKind::Memory:
    if (!op.mem_base)
      bad(where + ": missing memory base register");
    break;
  case OperandKind::Immediate:
    if (os.fixed_value && op.value != *os.fixed_value)
      bad(where + ": scheme fixes immediate to " + std::to_string(*os.fixed_value));
    break;
  }
}

} // namespace

InstructionInstance::InstructionInstance(const InstructionScheme *s,
                                         std::vector<ConcreteOperand> ops)
    : scheme(s), operands(std::move(ops)) {
  if (!scheme)
    bad("instruction instance without scheme");
  if (operands.size() != scheme->operands.size())
    bad("scheme '" + scheme->id + "' expects " +
        std::to_string(scheme->operands.size()) + " operands, got " +
        std::to_string(operands.size()));
  for (std::size_t i = 0; i < operands.size(); ++i)
    validate_operand(*scheme, i, scheme->operands[i], operands[i]);
}

BasicBlock::BasicBlock(std::vector<InstructionInstance> is) : insns(std::move(is)) {
  if (insns.empty())
    bad("basic block must contain at least one instruction");
}

bool operands_match(const ConcreteOperand &a, const ConcreteOperand &b) {
  if (a.kind == OperandKind::Memory && b.kind == OperandKind::Memory)
    return true;
  if (a.kind == OperandKind::Register && b.kind == OperandKind::Register)
    return a.reg->reg_class() == b.reg->reg_class();
  return false;
}

bool do_alias(const ConcreteOperand &a, const ConcreteOperand &b) {
  if (!operands_match(a, b))
    throw std::logic_error("do_alias on non-matching operands");
  if (a.kind == OperandKind::Memory)
    return a.mem_base->name == b.mem_base->name &&
           a.mem_displacement == b.mem_displacement;
  return a.reg->alias_group == b.reg->alias_group;
}

namespace {

void render_operand(std::ostringstream &os, const OperandScheme &scheme_op,
                    const ConcreteOperand &op) {
  switch (op.kind) {
  case OperandKind::Register:
    os << op.reg->name;
    break;
  case OperandKind::Memory:
    os << '[' << op.mem_base->name;
    if (op.mem_displacement > 0)
      os << " + " << op.mem_displacement;
    else if (op.mem_displacement < 0)
      os << " - " << -op.mem_displacement;
    os << ']';
    break;
  case OperandKind::Immediate:
    if (scheme_op.fixed_value)
      os << "0x" << std::hex << op.value << std::dec;
    else
      os << op.value;
    break;
  }
}

} // namespace

std::string render(const BasicBlock &block) {
  std::ostringstream os;
  for (const auto &insn : block.insns) {
    for (const auto &p : insn.scheme->prefixes)
      os << p << ' ';
    os << insn.scheme->mnemonic;
    for (std::size_t i = 0; i < insn.operands.size(); ++i) {
      os << (i == 0 ? " " : ", ");
      render_operand(os, insn.scheme->operands[i], insn.operands[i]);
    }
    os << '\n';
  }
  return os.str();
}

json block_to_json(const BasicBlock &block) {
  json insns = json::array();
  for (const auto &insn : block.insns) {
    json ops = json::array();
    for (const auto &op : insn.operands) {
      switch (op.kind) {
      case OperandKind::Register:
        ops.push_back({{"kind", "register"}, {"register", op.reg->name}});
        break;
      case OperandKind::Memory:
        ops.push_back({{"kind", "memory"},
                       {"base", op.mem_base->name},
                       {"displacement", op.mem_displacement}});
        break;
      case OperandKind::Immediate:
        ops.push_back({{"kind", "immediate"}, {"value", op.value}});
        break;
      }
    }
    insns.push_back({{"scheme", insn.scheme->id}, {"operands", std::move(ops)}});
  }
  return json{{"insns", std::move(insns)}};
}

BasicBlock block_from_json(const json &j, const SchemeUniverse &universe) {
  std::vector<InstructionInstance> insns;
  for (const auto &ji : j.at("insns")) {
    const std::string id = ji.at("scheme").get<std::string>();
    const InstructionScheme *scheme = universe.find_scheme(id);
    if (!scheme)
      throw std::runtime_error("block references unknown scheme '" + id + "'");
    std::vector<ConcreteOperand> ops;
    for (const auto &jo : ji.at("operands")) {
      const std::string kind = jo.at("kind").get<std::string>();
      if (kind == "register") {
        const std::string name = jo.at("register").get<std::string>();
        const RegisterDef *r = universe.find_register(name);
        if (!r)
          throw std::runtime_error("block references unknown register '" + name + "'");
        ops.push_back(ConcreteOperand::make_reg(r));
      } else if (kind == "memory") {
        const std::string name = jo.at("base").get<std::string>();
        const RegisterDef *r = universe.find_register(name);
        if (!r)
          throw std::runtime_error("block references unknown register '" + name + "'");
        ops.push_back(
            ConcreteOperand::make_mem(r, jo.at("displacement").get<std::int64_t>()));
      } else if (kind == "immediate") {
        ops.push_back(ConcreteOperand::make_imm(jo.at("value").get<std::int64_t>()));
      } else {
        throw std::runtime_error("unknown operand kind '" + kind + "' in block");
      }
    }
    insns.emplace_back(scheme, std::move(ops));
  }
  return BasicBlock(std::move(insns));
}

} // namespace bbdiff
