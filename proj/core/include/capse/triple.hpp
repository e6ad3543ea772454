#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "capse/error.hpp"

namespace capse {

using Index = std::int32_t;

// One (subject, relation, object) fact with integer ids.
struct Triple {
  Index s = 0;
  Index r = 0;
  Index o = 0;

  friend bool operator==(const Triple& a, const Triple& b) {
    return a.s == b.s && a.r == b.r && a.o == b.o;
  }
  friend bool operator<(const Triple& a, const Triple& b) {
    if (a.s != b.s) return a.s < b.s;
    if (a.r != b.r) return a.r < b.r;
    return a.o < b.o;
  }
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const {
    std::uint64_t h = static_cast<std::uint32_t>(t.s);
    h = h * 0x100000001b3ULL ^ static_cast<std::uint32_t>(t.r);
    h = h * 0x100000001b3ULL ^ static_cast<std::uint32_t>(t.o);
    return static_cast<std::size_t>(h);
  }
};

// Dense name <-> index map. Indices are assigned in first-seen order and
// cover exactly [0, size()).
class StringIndex {
 public:
  // Returns the index of name, inserting it if absent.
  Index add(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    const Index id = static_cast<Index>(names_.size());
    names_.push_back(name);
    index_.emplace(names_.back(), id);
    return id;
  }

  // Returns the index of name or throws VocabError.
  Index lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw VocabError("unknown name: " + name);
    return it->second;
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const std::string& name(Index id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= names_.size())
      throw VocabError("index out of range: " + std::to_string(id));
    return names_[static_cast<std::size_t>(id)];
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Index> index_;
};

// Entity and relation vocabularies of a triple dataset.
struct Vocab {
  StringIndex entities;
  StringIndex relations;

  std::size_t num_entities() const { return entities.size(); }
  std::size_t num_relations() const { return relations.size(); }
};

// Membership set over triples, O(1) containment.
class TripleMembership {
 public:
  bool insert(const Triple& t) { return set_.insert(t).second; }
  bool contains(const Triple& t) const { return set_.count(t) != 0; }
  std::size_t size() const { return set_.size(); }

  void insert_all(const std::vector<Triple>& triples) {
    for (const Triple& t : triples) set_.insert(t);
  }

 private:
  std::unordered_set<Triple, TripleHash> set_;
};

// Ordered list of unique triples plus a membership set.
class TripleSet {
 public:
  // Returns false when t is already present (duplicates are not stored).
  bool add(const Triple& t) {
    if (!members_.insert(t)) return false;
    triples_.push_back(t);
    return true;
  }

  bool contains(const Triple& t) const { return members_.contains(t); }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }

  const std::vector<Triple>& triples() const { return triples_; }
  const TripleMembership& membership() const { return members_; }

 private:
  std::vector<Triple> triples_;
  TripleMembership members_;
};

enum class RelationCategory { OneToOne, OneToMany, ManyToOne, ManyToMany };

// Per-relation corruption statistics over the training split.
//   hpt: mean head entities per tail  = #triples / #distinct tails
//   tph: mean tail entities per head  = #triples / #distinct heads
struct RelationStat {
  double hpt = 1.0;
  double tph = 1.0;
  std::int64_t num_triples = 0;
  std::int64_t num_distinct_heads = 0;
  std::int64_t num_distinct_tails = 0;
  RelationCategory category = RelationCategory::ManyToMany;
  bool seen_in_train = false;

  // Probability that corruption replaces the head entity.
  double head_replace_prob() const { return tph / (tph + hpt); }
};

struct RelationStats {
  std::vector<RelationStat> per_relation;

  const RelationStat& at(Index r) const {
    if (r < 0 || static_cast<std::size_t>(r) >= per_relation.size())
      throw VocabError("relation index out of range: " + std::to_string(r));
    return per_relation[static_cast<std::size_t>(r)];
  }
  std::size_t size() const { return per_relation.size(); }
};

inline const char* category_label(RelationCategory c) {
  switch (c) {
    case RelationCategory::OneToOne: return "1-1";
    case RelationCategory::OneToMany: return "1-M";
    case RelationCategory::ManyToOne: return "M-1";
    case RelationCategory::ManyToMany: return "M-M";
  }
  return "?";
}

}  // namespace capse
