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

#include "bbdiff/sampler.hpp"

#include <algorithm>
#include <cassert>
#include <map>

namespace bbdiff {

namespace {

std::string slot_str(const OperandRef &s) {
  return "(" + std::to_string(s.insn) + "," + std::to_string(s.op) + ")";
}

std::string pair_str(const AliasPair &p) {
  return slot_str(p.first) + "~" + slot_str(p.second);
}

// Union-find over slot indices.
struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    for (std::size_t i = 0; i < n; ++i)
      parent[i] = static_cast<int>(i);
  }
  int find(int x) {
    while (parent[x] != x)
      x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

struct Slot {
  OperandRef ref;
  const OperandScheme *scheme_op = nullptr;
  // Register slots
  std::string reg_class;
  int reg_width = 0;
  const RegisterDef *fixed = nullptr;
  // Assignment
  const RegisterDef *reg = nullptr;
  const RegisterDef *mem_base = nullptr;
  std::int64_t mem_disp = 0;
  bool mem_assigned = false;
};

// One greedy pass. Returns the block or nullopt with `why` set to the
// constraint that dead-ended.
std::optional<BasicBlock> attempt(const SchemeUniverse &u, const AbstractBlock &ab,
                                  const std::vector<std::vector<std::size_t>> &gammas,
                                  Rng &rng, const SamplerConfig &config,
                                  std::string &why) {
  // Step 1: choose one represented scheme per abstract instruction.
  std::vector<const InstructionScheme *> chosen;
  for (const auto &g : gammas)
    chosen.push_back(&u.schemes()[g[rng.uniform_index(g.size())]]);

  // Slot table, indexable by (insn, op).
  std::vector<Slot> slots;
  std::map<OperandRef, int> slot_index;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    for (std::size_t o = 0; o < chosen[i]->operands.size(); ++o) {
      Slot s;
      s.ref = OperandRef{static_cast<int>(i + 1), static_cast<int>(o + 1)};
      s.scheme_op = &chosen[i]->operands[o];
      if (s.scheme_op->kind == OperandKind::Register) {
        if (s.scheme_op->fixed_register) {
          s.fixed = u.find_register(*s.scheme_op->fixed_register);
          s.reg_class = s.fixed->reg_class();
          s.reg_width = s.fixed->width;
        } else {
          s.reg_class = s.scheme_op->register_class;
          s.reg_width = s.scheme_op->width;
        }
      }
      slot_index[s.ref] = static_cast<int>(slots.size());
      slots.push_back(s);
    }
  }

  // Classify the abstract alias constraints against the chosen schemes. A
  // constraint binds only if both slots exist and their operands can match.
  struct Edge {
    int a, b;
    AliasPair pair;
  };
  std::vector<Edge> must_edges, mustnot_edges;
  UnionFind uf(slots.size());
  for (const auto &[pair, kind] : ab.aliasing) {
    auto ia = slot_index.find(pair.first);
    auto ib = slot_index.find(pair.second);
    if (ia == slot_index.end() || ib == slot_index.end())
      continue; // slot absent under the chosen schemes: vacuous
    const Slot &sa = slots[ia->second];
    const Slot &sb = slots[ib->second];
    const bool both_mem = sa.scheme_op->kind == OperandKind::Memory &&
                          sb.scheme_op->kind == OperandKind::Memory;
    const bool both_reg = sa.scheme_op->kind == OperandKind::Register &&
                          sb.scheme_op->kind == OperandKind::Register &&
                          sa.reg_class == sb.reg_class;
    if (!both_mem && !both_reg)
      continue; // operands can never match: vacuous
    Edge e{ia->second, ib->second, pair};
    if (kind == AliasKind::Must) {
      uf.unite(e.a, e.b);
      must_edges.push_back(e);
    } else {
      mustnot_edges.push_back(e);
    }
  }

  // Step 2: fixed registers seed their must groups.
  // root -> forced alias group (by some fixed register in the group)
  std::map<int, const RegisterDef *> forced;
  for (const auto &s : slots) {
    if (!s.fixed)
      continue;
    const int root = uf.find(slot_index.at(s.ref));
    auto [it, fresh] = forced.emplace(root, s.fixed);
    if (!fresh && it->second->alias_group != s.fixed->alias_group) {
      why = "must-alias group pins fixed registers '" + it->second->name +
            "' and '" + s.fixed->name + "' from different alias groups";
      return std::nullopt;
    }
  }

  auto assign_group_register = [&](int root, const std::string &alias_group) -> bool {
    for (auto &s : slots) {
      if (s.scheme_op->kind != OperandKind::Register || uf.find(slot_index.at(s.ref)) != root)
        continue;
      if (s.fixed) {
        s.reg = s.fixed;
        continue;
      }
      const RegisterDef *found = nullptr;
      for (const RegisterDef *r : u.alias_group_members(alias_group))
        if (r->width == s.reg_width && r->reg_class() == s.reg_class &&
            !r->reserved_for_memory)
          found = r;
      if (!found) {
        why = "must-alias group needs a usable " + s.reg_class + ":" +
              std::to_string(s.reg_width) + " register in alias group '" +
              alias_group + "'";
        return false;
      }
      s.reg = found;
    }
    return true;
  };

  for (const auto &[root, reg] : forced)
    if (!assign_group_register(root, reg->alias_group))
      return std::nullopt;

  // Step 3a: remaining register slots, in slot order; the choice covers the
  // slot's whole must group.
  // Collect the distinct alias groups once (sorted for determinism).
  std::vector<std::string> all_groups;
  for (const auto &r : u.registers())
    if (std::find(all_groups.begin(), all_groups.end(), r.alias_group) ==
        all_groups.end())
      all_groups.push_back(r.alias_group);
  std::sort(all_groups.begin(), all_groups.end());

  for (std::size_t idx = 0; idx < slots.size(); ++idx) {
    Slot &s = slots[idx];
    if (s.scheme_op->kind != OperandKind::Register || s.reg)
      continue;
    const int root = uf.find(static_cast<int>(idx));
    // Widths the whole must group needs from one alias group.
    std::vector<std::pair<std::string, int>> needs; // (class, width)
    for (const auto &t : slots)
      if (t.scheme_op->kind == OperandKind::Register &&
          uf.find(slot_index.at(t.ref)) == root)
        needs.emplace_back(t.reg_class, t.reg_width);
    // Alias groups already claimed by assigned must-not partners of any slot
    // in this group.
    std::set<std::string> banned;
    for (const auto &e : mustnot_edges) {
      const int ra = uf.find(e.a), rb = uf.find(e.b);
      if (ra == root && slots[e.b].reg)
        banned.insert(slots[e.b].reg->alias_group);
      if (rb == root && slots[e.a].reg)
        banned.insert(slots[e.a].reg->alias_group);
      if (ra == root && rb == root) {
        why = "constraint " + pair_str(e.pair) +
              " forbids aliasing inside one must-alias group";
        return std::nullopt;
      }
    }
    std::vector<std::string> candidates;
    for (const auto &g : all_groups) {
      if (banned.count(g))
        continue;
      bool fits = true;
      for (const auto &[cls, width] : needs) {
        bool any = false;
        for (const RegisterDef *r : u.alias_group_members(g))
          any |= r->width == width && r->reg_class() == cls && !r->reserved_for_memory;
        fits &= any;
      }
      if (fits)
        candidates.push_back(g);
    }
    if (candidates.empty()) {
      why = "no alias group left for register slot " + slot_str(s.ref) +
            " under its must/must-not constraints";
      return std::nullopt;
    }
    if (!assign_group_register(root, candidates[rng.uniform_index(candidates.size())]))
      return std::nullopt;
  }

  // Check fixed-register must-not conflicts (both ends already assigned).
  for (const auto &e : mustnot_edges) {
    const Slot &sa = slots[e.a];
    const Slot &sb = slots[e.b];
    if (sa.reg && sb.reg && sa.reg->alias_group == sb.reg->alias_group) {
      why = "must-not constraint " + pair_str(e.pair) + " dead-ends: '" +
            sa.reg->name + "' and '" + sb.reg->name + "' always alias";
      return std::nullopt;
    }
  }

  // Step 3b: memory slots. Must groups share one (base, displacement) pair.
  const auto bases = u.memory_base_registers();
  for (std::size_t idx = 0; idx < slots.size(); ++idx) {
    Slot &s = slots[idx];
    if (s.scheme_op->kind != OperandKind::Memory || s.mem_assigned)
      continue;
    if (bases.empty()) {
      why = "universe has no registers reserved for memory bases";
      return std::nullopt;
    }
    const int root = uf.find(static_cast<int>(idx));
    std::set<std::pair<std::string, std::int64_t>> banned;
    for (const auto &e : mustnot_edges) {
      const int ra = uf.find(e.a), rb = uf.find(e.b);
      const Slot *partner = nullptr;
      if (ra == root && slots[e.b].mem_assigned)
        partner = &slots[e.b];
      else if (rb == root && slots[e.a].mem_assigned)
        partner = &slots[e.a];
      if (partner)
        banned.emplace(partner->mem_base->name, partner->mem_disp);
      if (ra == root && rb == root) {
        why = "constraint " + pair_str(e.pair) +
              " forbids aliasing inside one must-alias group";
        return std::nullopt;
      }
    }
    std::vector<std::pair<const RegisterDef *, std::int64_t>> candidates;
    for (const RegisterDef *b : bases)
      for (std::int64_t d : config.memory_displacement_pool)
        if (!banned.count({b->name, d}))
          candidates.emplace_back(b, d);
    if (candidates.empty()) {
      why = "no (base, displacement) pair left for memory slot " +
            slot_str(s.ref) + " under its must-not constraints";
      return std::nullopt;
    }
    const auto [base, disp] = candidates[rng.uniform_index(candidates.size())];
    for (auto &t : slots) {
      if (t.scheme_op->kind == OperandKind::Memory &&
          uf.find(slot_index.at(t.ref)) == root) {
        t.mem_base = base;
        t.mem_disp = disp;
        t.mem_assigned = true;
      }
    }
  }

  // Immediates.
  std::vector<InstructionInstance> insns;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    std::vector<ConcreteOperand> ops;
    for (std::size_t o = 0; o < chosen[i]->operands.size(); ++o) {
      const Slot &s = slots[slot_index.at(
          OperandRef{static_cast<int>(i + 1), static_cast<int>(o + 1)})];
      switch (s.scheme_op->kind) {
      case OperandKind::Register:
        ops.push_back(ConcreteOperand::make_reg(s.reg));
        break;
      case OperandKind::Memory:
        ops.push_back(ConcreteOperand::make_mem(s.mem_base, s.mem_disp));
        break;
      case OperandKind::Immediate:
        if (s.scheme_op->fixed_value)
          ops.push_back(ConcreteOperand::make_imm(*s.scheme_op->fixed_value));
        else
          ops.push_back(ConcreteOperand::make_imm(
              rng.uniform_int(0, (std::int64_t{1} << std::min(s.scheme_op->width, 8)) - 1)));
        break;
      }
    }
    insns.emplace_back(chosen[i], std::move(ops));
  }
  BasicBlock block(std::move(insns));
  assert(member(block, ab) && "sampled block escaped the abstract block");
  return block;
}

} // namespace

SampleResult sample(const SchemeUniverse &u, const AbstractBlock &ab, Rng &rng,
                    const SamplerConfig &config) {
  if (ab.insns.empty())
    throw std::invalid_argument("cannot sample from an empty abstract block");
  std::vector<std::vector<std::size_t>> gammas;
  for (std::size_t i = 0; i < ab.insns.size(); ++i) {
    gammas.push_back(insn_gamma(u, ab.insns[i]).indices());
    if (gammas.back().empty())
      throw EmptyConcretization("abstract instruction " + std::to_string(i + 1) +
                                " concretizes to no scheme");
  }
  SampleResult result;
  for (int attempt_no = 0; attempt_no < config.max_retries; ++attempt_no) {
    std::string why;
    if (auto block = attempt(u, ab, gammas, rng, config, why)) {
      result.block = std::move(block);
      return result;
    }
    ++result.failed_attempts;
    result.failure_reason = why;
  }
  return result;
}

BatchResult sample_batch(const SchemeUniverse &u, const AbstractBlock &ab,
                         int count, Rng &rng, const SamplerConfig &config) {
  BatchResult out;
  for (int i = 0; i < count; ++i) {
    SampleResult r = sample(u, ab, rng, config);
    out.failed_attempts += r.failed_attempts;
    if (r.block)
      out.blocks.push_back(std::move(*r.block));
  }
  out.underfilled = static_cast<int>(out.blocks.size()) < count;
  return out;
}

BasicBlock sample_unconstrained(const SchemeUniverse &u, int length, Rng &rng,
                                const SamplerConfig &config) {
  if (length < 1)
    throw std::invalid_argument("block length must be positive");
  AbstractBlock top;
  top.insns.resize(static_cast<std::size_t>(length));
  SampleResult r = sample(u, top, rng, config);
  if (!r.block)
    throw std::runtime_error("unconstrained sampling dead-ended: " +
                             r.failure_reason);
  return std::move(*r.block);
}

} // namespace bbdiff
