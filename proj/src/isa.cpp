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

#include "bbdiff/isa.hpp"

#include <bit>
#include <fstream>
#include <sstream>

namespace bbdiff {

namespace {

[[noreturn]] void fail(const std::string &msg) { throw std::runtime_error(msg); }

} // namespace

const char *access_name(Access a) {
  switch (a) {
  case Access::R:
    return "R";
  case Access::W:
    return "W";
  case Access::RW:
    return "RW";
  }
  fail("bad access");
}

Access access_from_name(const std::string &s) {
  if (s == "R")
    return Access::R;
  if (s == "W")
    return Access::W;
  if (s == "RW")
    return Access::RW;
  fail("unknown access mode '" + s + "' (expected R, W or RW)");
}

const char *feature_name(Feature f) {
  switch (f) {
  case Feature::Mnemonic:
    return "mnemonic";
  case Feature::Category:
    return "category";
  case Feature::IsaSet:
    return "isa_set";
  case Feature::Prefixes:
    return "prefixes";
  case Feature::UopCount:
    return "uop_count";
  case Feature::MemoryUsage:
    return "memory_usage";
  case Feature::OperandSchemes:
    return "operand_schemes";
  }
  fail("bad feature");
}

Feature feature_from_name(const std::string &s) {
  for (Feature f : kAllFeatures)
    if (s == feature_name(f))
      return f;
  fail("unknown feature '" + s + "'");
}

std::string canonical_prefixes(const std::set<std::string> &prefixes) {
  std::string out;
  for (const auto &p : prefixes) { // std::set iterates sorted
    if (!out.empty())
      out += '+';
    out += p;
  }
  return out;
}

std::string operand_token(const OperandScheme &op) {
  switch (op.kind) {
  case OperandKind::Register:
    if (op.fixed_register)
      return std::string(access_name(op.access)) + ":" + *op.fixed_register;
    return std::string(access_name(op.access)) + ":" + op.register_class + ":" +
           std::to_string(op.width);
  case OperandKind::Memory:
    return std::string(access_name(op.access)) + ":MEM:" + std::to_string(op.width);
  case OperandKind::Immediate:
    if (op.fixed_value) {
      // Fixed immediates are their literal: a hex rendering, e.g. "0x0".
      std::ostringstream os;
      os << "0x" << std::hex << *op.fixed_value;
      return os.str();
    }
    return "IMM:" + std::to_string(op.width);
  }
  fail("bad operand kind");
}

FeatureRaw feature_of(const InstructionScheme &scheme, Feature f) {
  switch (f) {
  case Feature::Mnemonic:
    return scheme.mnemonic;
  case Feature::Category:
    return scheme.category;
  case Feature::IsaSet:
    return scheme.isa_set;
  case Feature::Prefixes:
    return canonical_prefixes(scheme.prefixes);
  case Feature::UopCount:
    return scheme.uop_count;
  case Feature::MemoryUsage: {
    std::set<std::string> s;
    if (scheme.memory) {
      if (scheme.memory->reads)
        s.insert("R");
      if (scheme.memory->writes)
        s.insert("W");
      s.insert("Size:" + std::to_string(scheme.memory->size));
    }
    return s;
  }
  case Feature::OperandSchemes: {
    std::set<std::string> s;
    for (const auto &op : scheme.operands)
      s.insert(operand_token(op));
    return s;
  }
  }
  fail("bad feature");
}

// ---------------------------------------------------------------------------
// SchemeSet
// ---------------------------------------------------------------------------

std::size_t SchemeSet::count() const {
  std::size_t c = 0;
  for (std::uint64_t w : bits_)
    c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

bool SchemeSet::is_subset_of(const SchemeSet &other) const {
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i] & ~other.bits_[i])
      return false;
  return true;
}

void SchemeSet::intersect_with(const SchemeSet &other) {
  for (std::size_t i = 0; i < bits_.size(); ++i)
    bits_[i] &= other.bits_[i];
}

std::vector<std::size_t> SchemeSet::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_; ++i)
    if (contains(i))
      out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

void to_json(json &j, const LoadFilters &f) {
  j = json::object();
  j["exclude_memory_read_write"] = f.exclude_memory_read_write;
  j["exclude_scheme_ids"] = f.exclude_scheme_ids;
  if (f.include_only_scheme_ids)
    j["include_only_scheme_ids"] = *f.include_only_scheme_ids;
}

void from_json(const json &j, LoadFilters &f) {
  f = LoadFilters{};
  f.exclude_memory_read_write = j.value("exclude_memory_read_write", false);
  if (j.contains("exclude_scheme_ids"))
    f.exclude_scheme_ids = j.at("exclude_scheme_ids").get<std::set<std::string>>();
  if (j.contains("include_only_scheme_ids"))
    f.include_only_scheme_ids =
        j.at("include_only_scheme_ids").get<std::set<std::string>>();
}

namespace {

RegisterDef parse_register(const json &j) {
  RegisterDef r;
  r.name = j.at("name").get<std::string>();
  r.width = j.at("width").get<int>();
  r.alias_group = j.at("alias_group").get<std::string>();
  r.reserved_for_memory = j.value("reserved_for_memory", false);
  if (r.name.empty())
    fail("register with empty name");
  if (r.width <= 0)
    fail("register '" + r.name + "' has non-positive width");
  if (r.alias_group.empty())
    fail("register '" + r.name + "' has empty alias_group");
  return r;
}

OperandScheme parse_operand(const json &j, const std::string &scheme_id) {
  OperandScheme op;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "register") {
    op.kind = OperandKind::Register;
    op.access = access_from_name(j.at("access").get<std::string>());
    if (j.contains("fixed_register")) {
      op.fixed_register = j.at("fixed_register").get<std::string>();
      op.width = j.value("width", 0); // resolved against the register later
    } else {
      op.register_class = j.at("register_class").get<std::string>();
      op.width = j.at("width").get<int>();
      if (op.register_class.empty())
        fail("scheme '" + scheme_id + "': register operand with empty class");
    }
  } else if (kind == "memory") {
    op.kind = OperandKind::Memory;
    op.access = access_from_name(j.at("access").get<std::string>());
    op.width = j.at("width").get<int>();
  } else if (kind == "immediate") {
    op.kind = OperandKind::Immediate;
    op.access = Access::R;
    op.width = j.at("width").get<int>();
    if (j.contains("fixed_value"))
      op.fixed_value = j.at("fixed_value").get<std::int64_t>();
  } else {
    fail("scheme '" + scheme_id + "': unknown operand kind '" + kind + "'");
  }
  if (op.kind != OperandKind::Register && op.width <= 0)
    fail("scheme '" + scheme_id + "': operand with non-positive width");
  return op;
}

InstructionScheme parse_scheme(const json &j) {
  InstructionScheme s;
  s.id = j.at("id").get<std::string>();
  if (s.id.empty())
    fail("scheme with empty id");
  s.mnemonic = j.at("mnemonic").get<std::string>();
  s.category = j.at("category").get<std::string>();
  s.isa_set = j.at("isa_set").get<std::string>();
  if (j.contains("prefixes"))
    s.prefixes = j.at("prefixes").get<std::set<std::string>>();
  s.uop_count = j.at("uop_count").get<int>();
  if (s.uop_count < 1)
    fail("scheme '" + s.id + "': uop_count must be >= 1");
  if (j.contains("memory") && !j.at("memory").is_null()) {
    MemoryUsage m;
    m.reads = j.at("memory").at("reads").get<bool>();
    m.writes = j.at("memory").at("writes").get<bool>();
    m.size = j.at("memory").at("size").get<int>();
    s.memory = m;
  }
  for (const auto &jop : j.at("operands"))
    s.operands.push_back(parse_operand(jop, s.id));
  return s;
}

} // namespace

void SchemeUniverse::build_indices() {
  register_by_name_.clear();
  scheme_by_id_.clear();
  for (std::size_t i = 0; i < registers_.size(); ++i)
    register_by_name_[registers_[i].name] = i;
  for (std::size_t i = 0; i < schemes_.size(); ++i)
    scheme_by_id_[schemes_[i].id] = i;
}

const RegisterDef *SchemeUniverse::find_register(const std::string &name) const {
  auto it = register_by_name_.find(name);
  return it == register_by_name_.end() ? nullptr : &registers_[it->second];
}

const InstructionScheme *SchemeUniverse::find_scheme(const std::string &id) const {
  auto it = scheme_by_id_.find(id);
  return it == scheme_by_id_.end() ? nullptr : &schemes_[it->second];
}

std::size_t SchemeUniverse::scheme_index(const InstructionScheme *s) const {
  return static_cast<std::size_t>(s - schemes_.data());
}

std::vector<const RegisterDef *>
SchemeUniverse::class_members(const std::string &reg_class, int width,
                              bool usable_only) const {
  std::vector<const RegisterDef *> out;
  for (const auto &r : registers_)
    if (r.reg_class() == reg_class && r.width == width &&
        !(usable_only && r.reserved_for_memory))
      out.push_back(&r);
  return out;
}

std::vector<const RegisterDef *> SchemeUniverse::memory_base_registers() const {
  std::vector<const RegisterDef *> out;
  for (const auto &r : registers_)
    if (r.reserved_for_memory)
      out.push_back(&r);
  return out;
}

std::vector<const RegisterDef *>
SchemeUniverse::alias_group_members(const std::string &group) const {
  std::vector<const RegisterDef *> out;
  for (const auto &r : registers_)
    if (r.alias_group == group)
      out.push_back(&r);
  return out;
}

const SchemeSet *SchemeUniverse::cached_gamma(const std::string &key) const {
  std::lock_guard<std::mutex> lock(gamma_mutex_);
  auto it = gamma_cache_.find(key);
  return it == gamma_cache_.end() ? nullptr : &it->second;
}

const SchemeSet *SchemeUniverse::cache_gamma(const std::string &key,
                                             SchemeSet set) const {
  std::lock_guard<std::mutex> lock(gamma_mutex_);
  return &gamma_cache_.emplace(key, std::move(set)).first->second;
}

SchemeUniverse load_universe(const json &doc, const LoadFilters &filters) {
  SchemeUniverse u;
  if (!doc.is_object() || !doc.contains("registers") || !doc.contains("schemes"))
    fail("ISA description must be an object with 'registers' and 'schemes'");

  for (const auto &jr : doc.at("registers"))
    u.registers_.push_back(parse_register(jr));

  // Register invariants: unique names, at most one register per width within
  // an alias group.
  std::map<std::string, int> name_count;
  std::map<std::pair<std::string, int>, std::string> group_width;
  for (const auto &r : u.registers_) {
    if (++name_count[r.name] > 1)
      fail("duplicate register name '" + r.name + "'");
    auto key = std::make_pair(r.alias_group, r.width);
    auto [it, fresh] = group_width.emplace(key, r.name);
    if (!fresh)
      fail("alias group '" + r.alias_group + "' has two registers of width " +
           std::to_string(r.width) + " ('" + it->second + "', '" + r.name + "')");
  }

  std::set<std::string> seen_ids;
  for (const auto &js : doc.at("schemes")) {
    InstructionScheme s = parse_scheme(js);
    if (!seen_ids.insert(s.id).second)
      fail("duplicate scheme id '" + s.id + "'");

    if (filters.include_only_scheme_ids &&
        !filters.include_only_scheme_ids->count(s.id))
      continue;
    if (filters.exclude_scheme_ids.count(s.id))
      continue;
    if (filters.exclude_memory_read_write && s.memory && s.memory->reads &&
        s.memory->writes)
      continue;

    u.schemes_.push_back(std::move(s));
  }

  u.build_indices();

  // Cross-reference checks. Done after indexing so lookups work.
  for (auto &s : u.schemes_) {
    bool mem_reads = false, mem_writes = false;
    std::optional<int> mem_size;
    for (auto &op : s.operands) {
      switch (op.kind) {
      case OperandKind::Register:
        if (op.fixed_register) {
          const RegisterDef *r = u.find_register(*op.fixed_register);
          if (!r)
            fail("scheme '" + s.id + "': fixed register '" + *op.fixed_register +
                 "' is not defined");
          if (r->reserved_for_memory)
            fail("scheme '" + s.id + "': fixed register '" + r->name +
                 "' is reserved for memory bases");
          if (op.width == 0)
            op.width = r->width;
          else if (op.width != r->width)
            fail("scheme '" + s.id + "': fixed register '" + r->name +
                 "' width mismatch");
        } else {
          if (u.class_members(op.register_class, op.width, /*usable_only=*/false)
                  .empty())
            fail("scheme '" + s.id + "': no register of class '" +
                 op.register_class + "' with width " + std::to_string(op.width));
          if (u.class_members(op.register_class, op.width, /*usable_only=*/true)
                  .empty())
            fail("scheme '" + s.id + "': class '" + op.register_class + "' width " +
                 std::to_string(op.width) + " has only memory-reserved registers");
        }
        break;
      case OperandKind::Memory:
        mem_reads |= access_reads(op.access);
        mem_writes |= access_writes(op.access);
        if (mem_size && *mem_size != op.width)
          fail("scheme '" + s.id + "': memory operands of differing widths");
        mem_size = op.width;
        break;
      case OperandKind::Immediate:
        break;
      }
    }
    // Declared memory usage must agree with the operand access flags.
    if (s.memory.has_value() != mem_size.has_value())
      fail("scheme '" + s.id + "': memory record " +
           (s.memory ? "present but no memory operand" : "missing for memory operand"));
    if (s.memory) {
      if (s.memory->reads != mem_reads || s.memory->writes != mem_writes)
        fail("scheme '" + s.id + "': memory reads/writes disagree with operand "
             "access flags");
      if (s.memory->size != *mem_size)
        fail("scheme '" + s.id + "': memory size disagrees with operand width");
    }
  }

  if (doc.contains("schemes") && u.schemes_.empty())
    fail("ISA description contains no schemes after filtering");

  return u;
}

SchemeUniverse load_universe_file(const std::string &path,
                                  const LoadFilters &filters) {
  std::ifstream in(path);
  if (!in)
    fail("cannot open ISA description '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception &e) {
    fail("ISA description '" + path + "' is not valid JSON: " + e.what());
  }
  return load_universe(doc, filters);
}

json scheme_to_json(const InstructionScheme &s) {
  json js;
  js["id"] = s.id;
  js["mnemonic"] = s.mnemonic;
  js["category"] = s.category;
  js["isa_set"] = s.isa_set;
  js["prefixes"] = s.prefixes;
  js["uop_count"] = s.uop_count;
  if (s.memory) {
    js["memory"] = {{"reads", s.memory->reads},
                    {"writes", s.memory->writes},
                    {"size", s.memory->size}};
  } else {
    js["memory"] = nullptr;
  }
  js["operands"] = json::array();
  for (const auto &op : s.operands) {
    json jo;
    switch (op.kind) {
    case OperandKind::Register:
      jo["kind"] = "register";
      jo["access"] = access_name(op.access);
      if (op.fixed_register) {
        jo["fixed_register"] = *op.fixed_register;
        jo["width"] = op.width;
      } else {
        jo["register_class"] = op.register_class;
        jo["width"] = op.width;
      }
      break;
    case OperandKind::Memory:
      jo["kind"] = "memory";
      jo["access"] = access_name(op.access);
      jo["width"] = op.width;
      break;
    case OperandKind::Immediate:
      jo["kind"] = "immediate";
      jo["width"] = op.width;
      if (op.fixed_value)
        jo["fixed_value"] = *op.fixed_value;
      break;
    }
    js["operands"].push_back(std::move(jo));
  }
  return js;
}

json universe_to_json(const SchemeUniverse &u) {
  json doc;
  doc["registers"] = json::array();
  for (const auto &r : u.registers()) {
    doc["registers"].push_back({{"name", r.name},
                                {"width", r.width},
                                {"alias_group", r.alias_group},
                                {"reserved_for_memory", r.reserved_for_memory}});
  }
  doc["schemes"] = json::array();
  for (const auto &s : u.schemes())
    doc["schemes"].push_back(scheme_to_json(s));
  return doc;
}

} // namespace bbdiff
