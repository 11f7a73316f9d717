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

#ifndef BBDIFF_BBLOCK_HPP
#define BBDIFF_BBLOCK_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bbdiff/isa.hpp"

namespace bbdiff {

// A concrete operand instantiating one OperandScheme slot.
struct ConcreteOperand {
  OperandKind kind = OperandKind::Register;
  const RegisterDef *reg = nullptr;      // kind == Register
  const RegisterDef *mem_base = nullptr; // kind == Memory
  std::int64_t mem_displacement = 0;     // kind == Memory
  std::int64_t value = 0;                // kind == Immediate

  static ConcreteOperand make_reg(const RegisterDef *r) {
    ConcreteOperand op;
    op.kind = OperandKind::Register;
    op.reg = r;
    return op;
  }
  static ConcreteOperand make_mem(const RegisterDef *base, std::int64_t disp) {
    ConcreteOperand op;
    op.kind = OperandKind::Memory;
    op.mem_base = base;
    op.mem_displacement = disp;
    return op;
  }
  static ConcreteOperand make_imm(std::int64_t v) {
    ConcreteOperand op;
    op.kind = OperandKind::Immediate;
    op.value = v;
    return op;
  }

  bool operator==(const ConcreteOperand &) const = default;
};

// An instruction scheme with all operand slots filled. The constructor
// validates operand count, kinds, register class/width and fixed operands
// against the scheme and throws std::invalid_argument on mismatch.
struct InstructionInstance {
  const InstructionScheme *scheme = nullptr;
  std::vector<ConcreteOperand> operands;

  InstructionInstance() = default;
  InstructionInstance(const InstructionScheme *scheme,
                      std::vector<ConcreteOperand> operands);

  bool operator==(const InstructionInstance &) const = default;
};

// Basic block: a non-empty straight-line instruction sequence.
struct BasicBlock {
  std::vector<InstructionInstance> insns;

  explicit BasicBlock(std::vector<InstructionInstance> is);
  std::size_t size() const { return insns.size(); }

  bool operator==(const BasicBlock &) const = default;
};

// True iff the two operands are comparable for aliasing purposes: registers
// of the same class, or two memory operands. Immediates never match.
bool operands_match(const ConcreteOperand &a, const ConcreteOperand &b);

// Pre: operands_match(a, b); throws std::logic_error otherwise. Registers
// alias iff they share an alias group. Memory operands alias iff base and
// displacement are syntactically identical — sound only because sampled
// blocks never compute addresses through a third route.
bool do_alias(const ConcreteOperand &a, const ConcreteOperand &b);

// Renders the block as Intel-flavor assembly, one instruction per line,
// exactly one trailing newline. This text is the predictor wire format, so
// it must stay injective over any fixture universe.
std::string render(const BasicBlock &block);

// Structured JSON (scheme ids plus operand values); the only supported way
// to persist blocks — assembly text is never parsed back.
json block_to_json(const BasicBlock &block);
BasicBlock block_from_json(const json &j, const SchemeUniverse &universe);

} // namespace bbdiff

#endif // BBDIFF_BBLOCK_HPP
