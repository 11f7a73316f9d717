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

#ifndef BBDIFF_ISA_HPP
#define BBDIFF_ISA_HPP

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

namespace bbdiff {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Register file
// ---------------------------------------------------------------------------

// alias_group follows the grammar "<class>.<tag>": all registers in one group
// overlap (rax/eax/al), and the prefix before the first '.' names the register
// class that operand schemes refer to. A group holds at most one register per
// width.
struct RegisterDef {
  std::string name;
  int width = 0; // bits
  std::string alias_group;
  bool reserved_for_memory = false; // usable only as a memory base when sampling

  std::string reg_class() const {
    auto dot = alias_group.find('.');
    return dot == std::string::npos ? alias_group : alias_group.substr(0, dot);
  }

  bool operator==(const RegisterDef &) const = default;
};

// ---------------------------------------------------------------------------
// Operand and instruction schemes
// ---------------------------------------------------------------------------

enum class OperandKind { Register, Memory, Immediate };

enum class Access { R, W, RW };

const char *access_name(Access a);
Access access_from_name(const std::string &s);

inline bool access_reads(Access a) { return a != Access::W; }
inline bool access_writes(Access a) { return a != Access::R; }

struct OperandScheme {
  OperandKind kind = OperandKind::Register;
  Access access = Access::R; // meaningless for immediates
  int width = 0;             // bits
  std::string register_class;          // kind == Register, empty if fixed
  std::optional<std::string> fixed_register; // kind == Register
  std::optional<std::int64_t> fixed_value;   // kind == Immediate

  bool operator==(const OperandScheme &) const = default;
};

struct MemoryUsage {
  bool reads = false;
  bool writes = false;
  int size = 0; // bits

  bool operator==(const MemoryUsage &) const = default;
};

struct InstructionScheme {
  std::string id;
  std::string mnemonic;
  std::string category;
  std::string isa_set;
  std::set<std::string> prefixes;
  int uop_count = 1;
  std::optional<MemoryUsage> memory;
  std::vector<OperandScheme> operands;

  bool operator==(const InstructionScheme &) const = default;
};

// Canonical operand-scheme token, the vocabulary of the operand_schemes
// feature. Examples: "RW:GPR:64", "R:cl", "W:MEM:64", "IMM:8", "0x0".
std::string operand_token(const OperandScheme &op);

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

enum class Feature {
  Mnemonic,
  Category,
  IsaSet,
  Prefixes,
  UopCount,
  MemoryUsage,
  OperandSchemes,
};

inline constexpr Feature kAllFeatures[] = {
    Feature::Mnemonic,   Feature::Category,    Feature::IsaSet,
    Feature::Prefixes,   Feature::UopCount,    Feature::MemoryUsage,
    Feature::OperandSchemes,
};

const char *feature_name(Feature f);
Feature feature_from_name(const std::string &s);

// Raw feature value of a concrete scheme: a string (mnemonic, category,
// isa_set, canonicalized prefixes), an integer (uop_count), or a string set
// (memory_usage, operand_schemes).
using FeatureRaw = std::variant<std::string, int, std::set<std::string>>;

FeatureRaw feature_of(const InstructionScheme &scheme, Feature f);

// Canonical rendering of a prefix set for singleton comparison ("" when
// empty, else sorted, '+'-joined).
std::string canonical_prefixes(const std::set<std::string> &prefixes);

// ---------------------------------------------------------------------------
// Scheme sets
// ---------------------------------------------------------------------------

// Bitset over the scheme indices of one universe. Concretizations and
// subsumption checks are computed on these.
class SchemeSet {
public:
  SchemeSet() = default;
  explicit SchemeSet(std::size_t n) : n_(n), bits_((n + 63) / 64, 0) {}

  static SchemeSet all(std::size_t n) {
    SchemeSet s(n);
    for (std::size_t i = 0; i < n; ++i)
      s.insert(i);
    return s;
  }

  std::size_t size() const { return n_; }
  void insert(std::size_t i) { bits_[i / 64] |= (std::uint64_t{1} << (i % 64)); }
  bool contains(std::size_t i) const {
    return (bits_[i / 64] >> (i % 64)) & 1;
  }

  std::size_t count() const;
  bool empty() const { return count() == 0; }
  bool is_subset_of(const SchemeSet &other) const;
  void intersect_with(const SchemeSet &other);
  std::vector<std::size_t> indices() const;

  bool operator==(const SchemeSet &) const = default;

private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> bits_;
};

// ---------------------------------------------------------------------------
// Universe
// ---------------------------------------------------------------------------

struct LoadFilters {
  bool exclude_memory_read_write = false; // drop schemes that both read and write memory
  std::set<std::string> exclude_scheme_ids;
  std::optional<std::set<std::string>> include_only_scheme_ids;
};

void to_json(json &j, const LoadFilters &f);
void from_json(const json &j, LoadFilters &f);

// Immutable once loaded. Blocks and abstract domains hold pointers into the
// register/scheme vectors, so the universe must outlive them; it is movable
// but not copyable to keep those pointers single-owner.
class SchemeUniverse {
public:
  SchemeUniverse() = default;
  SchemeUniverse(const SchemeUniverse &) = delete;
  SchemeUniverse &operator=(const SchemeUniverse &) = delete;
  // Moves carry the data but not the cache mutex (mutexes cannot move; a
  // fresh one guards the moved cache).
  SchemeUniverse(SchemeUniverse &&other) noexcept
      : registers_(std::move(other.registers_)),
        schemes_(std::move(other.schemes_)),
        register_by_name_(std::move(other.register_by_name_)),
        scheme_by_id_(std::move(other.scheme_by_id_)),
        gamma_cache_(std::move(other.gamma_cache_)) {}
  SchemeUniverse &operator=(SchemeUniverse &&other) noexcept {
    registers_ = std::move(other.registers_);
    schemes_ = std::move(other.schemes_);
    register_by_name_ = std::move(other.register_by_name_);
    scheme_by_id_ = std::move(other.scheme_by_id_);
    gamma_cache_ = std::move(other.gamma_cache_);
    return *this;
  }

  const std::vector<RegisterDef> &registers() const { return registers_; }
  const std::vector<InstructionScheme> &schemes() const { return schemes_; }
  std::size_t num_schemes() const { return schemes_.size(); }

  const RegisterDef *find_register(const std::string &name) const;
  const RegisterDef &register_at(std::size_t i) const { return registers_[i]; }

  const InstructionScheme *find_scheme(const std::string &id) const;
  std::size_t scheme_index(const InstructionScheme *s) const;

  // All registers of the given class and width; `usable` excludes the ones
  // reserved for memory bases.
  std::vector<const RegisterDef *> class_members(const std::string &reg_class,
                                                 int width,
                                                 bool usable_only) const;
  std::vector<const RegisterDef *> memory_base_registers() const;
  std::vector<const RegisterDef *> alias_group_members(const std::string &group) const;

  // Memoized per-(feature, abstract value) concretization sets. The map is
  // guarded by a mutex: lookups and inserts may race across worker threads.
  const SchemeSet *cached_gamma(const std::string &key) const;
  const SchemeSet *cache_gamma(const std::string &key, SchemeSet set) const;

  friend SchemeUniverse load_universe(const json &doc, const LoadFilters &filters);

  bool same_content(const SchemeUniverse &other) const {
    return registers_ == other.registers_ && schemes_ == other.schemes_;
  }

private:
  void build_indices();

  std::vector<RegisterDef> registers_;
  std::vector<InstructionScheme> schemes_;
  std::unordered_map<std::string, std::size_t> register_by_name_;
  std::unordered_map<std::string, std::size_t> scheme_by_id_;

  mutable std::mutex gamma_mutex_;
  mutable std::map<std::string, SchemeSet> gamma_cache_;
};

// Parses and validates an ISA description. Throws std::runtime_error with a
// message naming the offending entity on any schema or consistency violation.
SchemeUniverse load_universe(const json &doc, const LoadFilters &filters = {});
SchemeUniverse load_universe_file(const std::string &path,
                                  const LoadFilters &filters = {});

// Serializes back to the on-disk schema (inverse of load_universe modulo
// filtering).
json universe_to_json(const SchemeUniverse &u);

json scheme_to_json(const InstructionScheme &s);

} // namespace bbdiff

#endif // BBDIFF_ISA_HPP
