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

#ifndef BBDIFF_ABSDOM_HPP
#define BBDIFF_ABSDOM_HPP

#include <array>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bbdiff/bblock.hpp"
#include "bbdiff/isa.hpp"

namespace bbdiff {

// ---------------------------------------------------------------------------
// Feature lattices
// ---------------------------------------------------------------------------

// Widening limits: edit distances grow 0..3 before jumping to Top, power-of-
// two bounds grow up to 2^5.
inline constexpr int kMaxEditDistance = 3;
inline constexpr int kMaxLogUopBound = 5;

struct TopV {
  bool operator==(const TopV &) const = default;
};
// Exactly one raw value: gamma = { i | f(i) = value }.
struct SingletonV {
  std::string value;
  bool operator==(const SingletonV &) const = default;
};
// All mnemonics within `distance` Levenshtein edits of `base`.
struct EditDistanceV {
  std::string base;
  int distance = 0;
  bool operator==(const EditDistanceV &) const = default;
};
// gamma = { i | f(i) < 2^bound }.
struct LogSizeV {
  int bound = 0;
  bool operator==(const LogSizeV &) const = default;
};
// gamma = { i | f(i) ⊇ elements }.
struct SubsetV {
  std::set<std::string> elements;
  bool operator==(const SubsetV &) const = default;
};
// gamma = { i | f(i) = ∅ }; the "definitely none" point below every subset.
struct DefNoneV {
  bool operator==(const DefNoneV &) const = default;
};

using FeatureValue =
    std::variant<TopV, SingletonV, EditDistanceV, LogSizeV, SubsetV, DefNoneV>;

inline bool is_top(const FeatureValue &v) {
  return std::holds_alternative<TopV>(v);
}

int levenshtein(const std::string &a, const std::string &b);

// Most precise abstraction of a raw feature value.
FeatureValue feature_beta(Feature f, const FeatureRaw &raw);

// Membership of one scheme in the concretization of (f, v).
bool feature_gamma_matches(Feature f, const FeatureValue &v,
                           const InstructionScheme &scheme);

// Concretization over a universe, memoized in the universe's cache.
const SchemeSet &feature_gamma(const SchemeUniverse &u, Feature f,
                               const FeatureValue &v);

// Immediate successors in the generality preorder; strictly ascending, empty
// for Top.
std::vector<FeatureValue> feature_expansions(Feature f, const FeatureValue &v);

json feature_value_to_json(const FeatureValue &v);
FeatureValue feature_value_from_json(const json &j);

// ---------------------------------------------------------------------------
// Abstract instructions
// ---------------------------------------------------------------------------

struct AbstractInsn {
  std::array<FeatureValue, 7> features = {TopV{}, TopV{}, TopV{}, TopV{},
                                          TopV{}, TopV{}, TopV{}};

  FeatureValue &at(Feature f) { return features[static_cast<std::size_t>(f)]; }
  const FeatureValue &at(Feature f) const {
    return features[static_cast<std::size_t>(f)];
  }

  bool operator==(const AbstractInsn &) const = default;
};

AbstractInsn insn_beta(const InstructionScheme &scheme);
bool insn_gamma_contains(const AbstractInsn &ai, const InstructionScheme &scheme);
SchemeSet insn_gamma(const SchemeUniverse &u, const AbstractInsn &ai);

// gamma(specific) ⊆ gamma(general), decided by explicit set computation.
bool insn_subsumes(const SchemeUniverse &u, const AbstractInsn &general,
                   const AbstractInsn &specific);

// ---------------------------------------------------------------------------
// Aliasing
// ---------------------------------------------------------------------------

// 1-based position of one operand slot in a block.
struct OperandRef {
  int insn = 0;
  int op = 0;
  auto operator<=>(const OperandRef &) const = default;
};

// Unordered pair of distinct operand slots, stored in canonical (lexicographic)
// order. Construction normalizes; self-pairs are rejected.
struct AliasPair {
  OperandRef first, second;

  AliasPair() = default;
  AliasPair(OperandRef a, OperandRef b);
  auto operator<=>(const AliasPair &) const = default;
};

enum class AliasKind { Must, MustNot };

// Absent key = no constraint (Top).
using AliasMap = std::map<AliasPair, AliasKind>;

// ---------------------------------------------------------------------------
// Abstract blocks
// ---------------------------------------------------------------------------

struct AbstractBlock {
  std::vector<AbstractInsn> insns;
  AliasMap aliasing;

  std::size_t size() const { return insns.size(); }
  bool operator==(const AbstractBlock &) const = default;
};

// Best abstraction of a concrete block: per-instruction feature abstraction
// plus must/must-not entries for every pair of matching operands (both intra-
// and inter-instruction).
AbstractBlock represent(const BasicBlock &block);

// b ∈ gamma(ab)? Defined only for equal lengths (false otherwise). Alias
// constraints bind only where both operand slots exist and match.
bool member(const BasicBlock &block, const AbstractBlock &ab);

// ---------------------------------------------------------------------------
// Expansions
// ---------------------------------------------------------------------------

struct Expansion {
  enum class Kind { InsnFeature, AliasDrop };
  Kind kind = Kind::InsnFeature;
  // InsnFeature: replaces `from` by `to` at (insn, feature); applicable only
  // while the current value is exactly `from`.
  int insn = 0; // 1-based
  Feature feature = Feature::Mnemonic;
  FeatureValue from = TopV{};
  FeatureValue to = TopV{};
  // AliasDrop: forgets the constraint at `pair`.
  AliasPair pair;

  bool operator==(const Expansion &) const = default;
};

// All applicable expansions, deterministically ordered (instructions in
// order, features in declaration order, successors in feature_expansions
// order, then alias drops in canonical key order).
std::vector<Expansion> available_expansions(const AbstractBlock &ab);

// Applies one expansion; throws std::invalid_argument if it is not applicable
// (wrong current value, expanding Top, missing alias entry).
AbstractBlock apply_expansion(const AbstractBlock &ab, const Expansion &e);

// ---------------------------------------------------------------------------
// Subsumption
// ---------------------------------------------------------------------------

// True iff `general` subsumes `specific`: an injective map m from general's
// instructions into specific's exists with gamma(specific[m(i)]) ⊆
// gamma(general[i]), all alias constraints of `general` present identically
// at the mapped slots, and the images visited in some rotation of general's
// instruction order (unmapped instructions of `specific` may interleave
// freely). Exhaustive search; block lengths stay small (≤ 8).
bool block_subsumes(const SchemeUniverse &u, const AbstractBlock &general,
                    const AbstractBlock &specific);

// Does `ab` cover the concrete block (via its representation)?
bool subsumes_concrete(const SchemeUniverse &u, const AbstractBlock &ab,
                       const BasicBlock &block);

json abstract_block_to_json(const AbstractBlock &ab);
AbstractBlock abstract_block_from_json(const json &j);

json expansion_to_json(const Expansion &e);
Expansion expansion_from_json(const json &j);

} // namespace bbdiff

#endif // BBDIFF_ABSDOM_HPP
