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

#include "bbdiff/absdom.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace bbdiff {

namespace {

[[noreturn]] void bad(const std::string &msg) { throw std::invalid_argument(msg); }

std::string raw_to_string(const FeatureRaw &raw) {
  if (const auto *s = std::get_if<std::string>(&raw))
    return *s;
  if (const auto *n = std::get_if<int>(&raw))
    return std::to_string(*n);
  const auto &set = std::get<std::set<std::string>>(raw);
  std::string out = "{";
  for (const auto &e : set) {
    if (out.size() > 1)
      out += ',';
    out += e;
  }
  return out + "}";
}

} // namespace

int levenshtein(const std::string &a, const std::string &b) {
  // Two-row dynamic program.
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j)
    prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

FeatureValue feature_beta(Feature f, const FeatureRaw &raw) {
  switch (f) {
  case Feature::Mnemonic:
    return EditDistanceV{std::get<std::string>(raw), 0};
  case Feature::Category:
  case Feature::IsaSet:
  case Feature::Prefixes:
    return SingletonV{raw_to_string(raw)};
  case Feature::UopCount: {
    const int n = std::get<int>(raw);
    if (n < 1)
      bad("uop_count must be positive");
    // Smallest k with n < 2^k, i.e. ceil(log2(n+1)); Top once past the limit.
    const int k = std::bit_width(static_cast<unsigned>(n));
    if (k > kMaxLogUopBound)
      return TopV{};
    return LogSizeV{k};
  }
  case Feature::MemoryUsage:
  case Feature::OperandSchemes: {
    const auto &set = std::get<std::set<std::string>>(raw);
    if (set.empty())
      return DefNoneV{};
    return SubsetV{set};
  }
  }
  bad("bad feature");
}

bool feature_gamma_matches(Feature f, const FeatureValue &v,
                           const InstructionScheme &scheme) {
  if (is_top(v))
    return true;
  const FeatureRaw raw = feature_of(scheme, f);
  if (const auto *sv = std::get_if<SingletonV>(&v))
    return raw_to_string(raw) == sv->value;
  if (const auto *ev = std::get_if<EditDistanceV>(&v)) {
    const auto *s = std::get_if<std::string>(&raw);
    if (!s)
      throw std::logic_error("edit-distance value on a non-string feature");
    return levenshtein(ev->base, *s) <= ev->distance;
  }
  if (const auto *lv = std::get_if<LogSizeV>(&v)) {
    const auto *n = std::get_if<int>(&raw);
    if (!n)
      throw std::logic_error("log-size value on a non-numeric feature");
    return *n < (1 << lv->bound);
  }
  const auto *set = std::get_if<std::set<std::string>>(&raw);
  if (!set)
    throw std::logic_error("subset value on a non-set feature");
  if (std::holds_alternative<DefNoneV>(v))
    return set->empty();
  const auto &elems = std::get<SubsetV>(v).elements;
  return std::includes(set->begin(), set->end(), elems.begin(), elems.end());
}

const SchemeSet &feature_gamma(const SchemeUniverse &u, Feature f,
                               const FeatureValue &v) {
  const std::string key =
      std::string(feature_name(f)) + "|" + feature_value_to_json(v).dump();
  if (const SchemeSet *hit = u.cached_gamma(key))
    return *hit;
  SchemeSet set(u.num_schemes());
  for (std::size_t i = 0; i < u.num_schemes(); ++i)
    if (feature_gamma_matches(f, v, u.schemes()[i]))
      set.insert(i);
  return *u.cache_gamma(key, std::move(set));
}

std::vector<FeatureValue> feature_expansions(Feature, const FeatureValue &v) {
  if (is_top(v))
    return {};
  if (std::holds_alternative<SingletonV>(v) || std::holds_alternative<DefNoneV>(v))
    return {TopV{}};
  if (const auto *ev = std::get_if<EditDistanceV>(&v)) {
    if (ev->distance < kMaxEditDistance)
      return {EditDistanceV{ev->base, ev->distance + 1}};
    return {TopV{}};
  }
  if (const auto *lv = std::get_if<LogSizeV>(&v)) {
    if (lv->bound < kMaxLogUopBound)
      return {LogSizeV{lv->bound + 1}};
    return {TopV{}};
  }
  const auto &elems = std::get<SubsetV>(v).elements;
  if (elems.size() == 1)
    return {TopV{}};
  // One successor per dropped element.
  std::vector<FeatureValue> out;
  for (const auto &e : elems) {
    std::set<std::string> rest = elems;
    rest.erase(e);
    out.push_back(SubsetV{std::move(rest)});
  }
  return out;
}

json feature_value_to_json(const FeatureValue &v) {
  if (is_top(v))
    return json{{"kind", "top"}};
  if (const auto *sv = std::get_if<SingletonV>(&v))
    return json{{"kind", "singleton"}, {"value", sv->value}};
  if (const auto *ev = std::get_if<EditDistanceV>(&v))
    return json{{"kind", "edit_distance"},
                {"base", ev->base},
                {"distance", ev->distance}};
  if (const auto *lv = std::get_if<LogSizeV>(&v))
    return json{{"kind", "log_size"}, {"bound", lv->bound}};
  if (const auto *subset = std::get_if<SubsetV>(&v))
    return json{{"kind", "subset"}, {"elements", subset->elements}};
  return json{{"kind", "def_none"}};
}

FeatureValue feature_value_from_json(const json &j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "top")
    return TopV{};
  if (kind == "singleton")
    return SingletonV{j.at("value").get<std::string>()};
  if (kind == "edit_distance")
    return EditDistanceV{j.at("base").get<std::string>(),
                         j.at("distance").get<int>()};
  if (kind == "log_size")
    return LogSizeV{j.at("bound").get<int>()};
  if (kind == "subset")
    return SubsetV{j.at("elements").get<std::set<std::string>>()};
  if (kind == "def_none")
    return DefNoneV{};
  bad("unknown feature value kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Abstract instructions
// ---------------------------------------------------------------------------

AbstractInsn insn_beta(const InstructionScheme &scheme) {
  AbstractInsn ai;
  for (Feature f : kAllFeatures)
    ai.at(f) = feature_beta(f, feature_of(scheme, f));
  return ai;
}

bool insn_gamma_contains(const AbstractInsn &ai, const InstructionScheme &scheme) {
  for (Feature f : kAllFeatures)
    if (!feature_gamma_matches(f, ai.at(f), scheme))
      return false;
  return true;
}

SchemeSet insn_gamma(const SchemeUniverse &u, const AbstractInsn &ai) {
  SchemeSet set = SchemeSet::all(u.num_schemes());
  for (Feature f : kAllFeatures)
    set.intersect_with(feature_gamma(u, f, ai.at(f)));
  return set;
}

bool insn_subsumes(const SchemeUniverse &u, const AbstractInsn &general,
                   const AbstractInsn &specific) {
  return insn_gamma(u, specific).is_subset_of(insn_gamma(u, general));
}

// ---------------------------------------------------------------------------
// Aliasing
// ---------------------------------------------------------------------------

AliasPair::AliasPair(OperandRef a, OperandRef b) {
  if (a == b)
    bad("alias pair must reference two distinct operand slots");
  if (b < a)
    std::swap(a, b);
  first = a;
  second = b;
}

namespace {

const ConcreteOperand *operand_at(const BasicBlock &block, const OperandRef &ref) {
  if (ref.insn < 1 || static_cast<std::size_t>(ref.insn) > block.insns.size())
    return nullptr;
  const auto &ops = block.insns[ref.insn - 1].operands;
  if (ref.op < 1 || static_cast<std::size_t>(ref.op) > ops.size())
    return nullptr;
  return &ops[ref.op - 1];
}

} // namespace

AbstractBlock represent(const BasicBlock &block) {
  AbstractBlock ab;
  for (const auto &insn : block.insns)
    ab.insns.push_back(insn_beta(*insn.scheme));

  // One entry per pair of matching operand slots, intra- and
  // inter-instruction alike.
  std::vector<OperandRef> slots;
  for (std::size_t i = 0; i < block.insns.size(); ++i)
    for (std::size_t o = 0; o < block.insns[i].operands.size(); ++o)
      slots.push_back(OperandRef{static_cast<int>(i + 1), static_cast<int>(o + 1)});
  for (std::size_t x = 0; x < slots.size(); ++x) {
    for (std::size_t y = x + 1; y < slots.size(); ++y) {
      const ConcreteOperand &a = *operand_at(block, slots[x]);
      const ConcreteOperand &b = *operand_at(block, slots[y]);
      if (!operands_match(a, b))
        continue;
      ab.aliasing.emplace(AliasPair(slots[x], slots[y]),
                          do_alias(a, b) ? AliasKind::Must : AliasKind::MustNot);
    }
  }
  return ab;
}

bool member(const BasicBlock &block, const AbstractBlock &ab) {
  if (block.insns.size() != ab.insns.size())
    return false;
  for (std::size_t i = 0; i < block.insns.size(); ++i)
    if (!insn_gamma_contains(ab.insns[i], *block.insns[i].scheme))
      return false;
  for (const auto &[pair, kind] : ab.aliasing) {
    const ConcreteOperand *a = operand_at(block, pair.first);
    const ConcreteOperand *b = operand_at(block, pair.second);
    if (!a || !b || !operands_match(*a, *b))
      continue; // constraint binds only where operands exist and match
    if (do_alias(*a, *b) != (kind == AliasKind::Must))
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Expansions
// ---------------------------------------------------------------------------

std::vector<Expansion> available_expansions(const AbstractBlock &ab) {
  std::vector<Expansion> out;
  for (std::size_t i = 0; i < ab.insns.size(); ++i) {
    for (Feature f : kAllFeatures) {
      const FeatureValue &cur = ab.insns[i].at(f);
      for (FeatureValue &succ : feature_expansions(f, cur)) {
        Expansion e;
        e.kind = Expansion::Kind::InsnFeature;
        e.insn = static_cast<int>(i + 1);
        e.feature = f;
        e.from = cur;
        e.to = std::move(succ);
        out.push_back(std::move(e));
      }
    }
  }
  for (const auto &[pair, kind] : ab.aliasing) {
    (void)kind;
    Expansion e;
    e.kind = Expansion::Kind::AliasDrop;
    e.pair = pair;
    out.push_back(std::move(e));
  }
  return out;
}

AbstractBlock apply_expansion(const AbstractBlock &ab, const Expansion &e) {
  AbstractBlock out = ab;
  if (e.kind == Expansion::Kind::InsnFeature) {
    if (e.insn < 1 || static_cast<std::size_t>(e.insn) > out.insns.size())
      bad("expansion references instruction " + std::to_string(e.insn) +
          " outside the block");
    FeatureValue &cur = out.insns[e.insn - 1].at(e.feature);
    if (is_top(cur))
      bad("cannot expand an already-Top feature");
    if (!(cur == e.from))
      bad("expansion not applicable: current value differs from its source");
    if (cur == e.to)
      bad("expansion must strictly generalize");
    cur = e.to;
    return out;
  }
  auto it = out.aliasing.find(e.pair);
  if (it == out.aliasing.end())
    bad("alias-drop expansion references an absent constraint");
  out.aliasing.erase(it);
  return out;
}

// ---------------------------------------------------------------------------
// Subsumption
// ---------------------------------------------------------------------------

namespace {

// Checks the alias condition for a candidate map (0-based m: general index ->
// specific index): every constraint of `general` must appear with the same
// kind at the mapped slots of `specific`.
bool alias_entries_preserved(const AbstractBlock &general,
                             const AbstractBlock &specific,
                             const std::vector<int> &m) {
  for (const auto &[pair, kind] : general.aliasing) {
    const OperandRef a{m[pair.first.insn - 1] + 1, pair.first.op};
    const OperandRef b{m[pair.second.insn - 1] + 1, pair.second.op};
    auto it = specific.aliasing.find(AliasPair(a, b));
    if (it == specific.aliasing.end() || it->second != kind)
      return false;
  }
  return true;
}

} // namespace

bool block_subsumes(const SchemeUniverse &u, const AbstractBlock &general,
                    const AbstractBlock &specific) {
  const std::size_t n1 = general.insns.size();
  const std::size_t n2 = specific.insns.size();
  if (n1 == 0 || n1 > n2)
    return false;

  // gamma-subset matrix: ok[i][j] iff specific[j] can be the image of
  // general[i].
  std::vector<SchemeSet> g1, g2;
  for (const auto &ai : general.insns)
    g1.push_back(insn_gamma(u, ai));
  for (const auto &ai : specific.insns)
    g2.push_back(insn_gamma(u, ai));
  std::vector<std::vector<bool>> ok(n1, std::vector<bool>(n2));
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j)
      ok[i][j] = g2[j].is_subset_of(g1[i]);

  // The order condition admits exactly the maps that visit their image set in
  // rotated ascending order, so it suffices to enumerate each sorted subset
  // of specific's positions together with each rotation of general.
  std::vector<std::size_t> subset(n1);
  std::vector<int> m(n1);
  auto try_subset = [&]() {
    const std::size_t rotations = n1 == 1 ? 1 : n1;
    for (std::size_t t = 0; t < rotations; ++t) {
      bool fits = true;
      for (std::size_t i = 0; i < n1 && fits; ++i) {
        m[i] = static_cast<int>(subset[(i + t) % n1]);
        fits = ok[i][m[i]];
      }
      if (fits && alias_entries_preserved(general, specific, m))
        return true;
    }
    return false;
  };

  // Enumerate sorted n1-subsets of {0..n2-1}.
  for (std::size_t i = 0; i < n1; ++i)
    subset[i] = i;
  while (true) {
    if (try_subset())
      return true;
    // next combination
    std::size_t i = n1;
    while (i > 0 && subset[i - 1] == n2 - n1 + (i - 1))
      --i;
    if (i == 0)
      return false;
    ++subset[i - 1];
    for (std::size_t k = i; k < n1; ++k)
      subset[k] = subset[k - 1] + 1;
  }
}

bool subsumes_concrete(const SchemeUniverse &u, const AbstractBlock &ab,
                       const BasicBlock &block) {
  return block_subsumes(u, ab, represent(block));
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

json abstract_block_to_json(const AbstractBlock &ab) {
  json insns = json::array();
  for (const auto &ai : ab.insns) {
    json ji;
    for (Feature f : kAllFeatures)
      ji[feature_name(f)] = feature_value_to_json(ai.at(f));
    insns.push_back(std::move(ji));
  }
  json aliasing = json::array();
  for (const auto &[pair, kind] : ab.aliasing) {
    aliasing.push_back({{"a", {pair.first.insn, pair.first.op}},
                        {"b", {pair.second.insn, pair.second.op}},
                        {"kind", kind == AliasKind::Must ? "must" : "mustnot"}});
  }
  return json{{"insns", std::move(insns)}, {"aliasing", std::move(aliasing)}};
}

AbstractBlock abstract_block_from_json(const json &j) {
  AbstractBlock ab;
  for (const auto &ji : j.at("insns")) {
    AbstractInsn ai;
    for (Feature f : kAllFeatures)
      ai.at(f) = feature_value_from_json(ji.at(feature_name(f)));
    ab.insns.push_back(std::move(ai));
  }
  for (const auto &ja : j.at("aliasing")) {
    const auto a = ja.at("a");
    const auto b = ja.at("b");
    const std::string kind = ja.at("kind").get<std::string>();
    if (kind != "must" && kind != "mustnot")
      bad("unknown alias kind '" + kind + "'");
    AliasPair pair(OperandRef{a.at(0).get<int>(), a.at(1).get<int>()},
                   OperandRef{b.at(0).get<int>(), b.at(1).get<int>()});
    if (pair.second.insn > static_cast<int>(ab.insns.size()) ||
        pair.first.insn < 1 || pair.first.op < 1 || pair.second.op < 1)
      bad("alias pair references an instruction outside the block");
    ab.aliasing.emplace(pair, kind == "must" ? AliasKind::Must : AliasKind::MustNot);
  }
  return ab;
}

json expansion_to_json(const Expansion &e) {
  if (e.kind == Expansion::Kind::InsnFeature)
    return json{{"kind", "insn_feature"},
                {"insn", e.insn},
                {"feature", feature_name(e.feature)},
                {"from", feature_value_to_json(e.from)},
                {"to", feature_value_to_json(e.to)}};
  return json{{"kind", "alias_drop"},
              {"a", {e.pair.first.insn, e.pair.first.op}},
              {"b", {e.pair.second.insn, e.pair.second.op}}};
}

Expansion expansion_from_json(const json &j) {
  Expansion e;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "insn_feature") {
    e.kind = Expansion::Kind::InsnFeature;
    e.insn = j.at("insn").get<int>();
    e.feature = feature_from_name(j.at("feature").get<std::string>());
    e.from = feature_value_from_json(j.at("from"));
    e.to = feature_value_from_json(j.at("to"));
  } else if (kind == "alias_drop") {
    e.kind = Expansion::Kind::AliasDrop;
    const auto a = j.at("a");
    const auto b = j.at("b");
    e.pair = AliasPair(OperandRef{a.at(0).get<int>(), a.at(1).get<int>()},
                       OperandRef{b.at(0).get<int>(), b.at(1).get<int>()});
  } else {
    bad("unknown expansion kind '" + kind + "'");
  }
  return e;
}

} // namespace bbdiff
