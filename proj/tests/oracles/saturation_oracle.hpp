#pragma once

// Naive rule firing over string triples. Every rule is applied to the whole
// triple set until nothing changes; no schema extraction, no indexes.

#include <set>
#include <stdexcept>
#include <string>
#include <tuple>

#include "kgmatch/graph_store.hpp"

namespace oracle {

using STriple = std::tuple<std::string, std::string, std::string>;
using STripleSet = std::set<STriple>;

struct SaturationFlags {
  bool contract = false;
  bool inverse_symmetry = false;
  bool predicates = false;
  bool classes = false;
};

inline STripleSet to_strings(const kgmatch::KnowledgeGraph& g) {
  STripleSet out;
  for (const auto& t : g.triples())
    out.emplace(g.node_iri(t.subject), g.predicate_iri(t.predicate), g.node_iri(t.object));
  return out;
}

namespace detail {

inline void merge_node(STripleSet& g, const std::string& from, const std::string& to) {
  STripleSet next;
  for (const auto& [s, p, o] : g) {
    const std::string s2 = s == from ? to : s;
    const std::string o2 = o == from ? to : o;
    if (s != o && s2 == o2) continue;  // loop made by the merge itself
    next.emplace(s2, p, o2);
  }
  g = std::move(next);
}

// Merges sameAs-linked nodes pairwise into the smaller IRI until none remain.
inline bool contract(STripleSet& g, const std::string& same_as) {
  bool any = false;
  for (;;) {
    const STriple* link = nullptr;
    for (const auto& t : g)
      if (std::get<1>(t) == same_as) {
        link = &t;
        break;
      }
    if (!link) return any;
    any = true;
    auto [a, p, b] = *link;
    g.erase(*link);
    if (a != b) merge_node(g, std::max(a, b), std::min(a, b));
  }
}

struct InverseAxioms {
  std::set<std::string> symmetric;
  std::set<std::pair<std::string, std::string>> pairs;
};

inline InverseAxioms inverse_axioms(const STripleSet& g, const kgmatch::Vocabulary& v) {
  InverseAxioms ax;
  for (const auto& [s, p, o] : g) {
    if (p == v.type && o == v.symmetric_property) ax.symmetric.insert(s);
    if (p == v.inverse_of) {
      if (s == o)
        ax.symmetric.insert(s);
      else
        ax.pairs.emplace(s, o);
    }
  }
  for (const auto& [a, b] : ax.pairs)
    if (ax.symmetric.count(a) || ax.symmetric.count(b)) throw std::runtime_error("symmetric predicate with inverse");
  return ax;
}

}  // namespace detail

// Throws std::runtime_error where build_variant must throw ConflictError.
inline STripleSet saturate(STripleSet g, SaturationFlags f, const kgmatch::Vocabulary& v = {}) {
  for (;;) {
    bool changed = false;
    if (f.contract) changed = detail::contract(g, v.same_as) || changed;
    STripleSet add;
    for (const auto& [s, p, o] : g) {
      if (f.predicates && p == v.sub_property_of)
        for (const auto& [x, q, y] : g)
          if (q == s) add.emplace(x, o, y);
      if (f.classes && p == v.sub_class_of)
        for (const auto& [x, q, c] : g)
          if (q == v.type && c == s) add.emplace(x, v.type, o);
    }
    if (f.inverse_symmetry) {
      auto ax = detail::inverse_axioms(g, v);
      for (const auto& [s, p, o] : g) {
        if (ax.symmetric.count(p)) add.emplace(o, p, s);
        for (const auto& [a, b] : ax.pairs) {
          if (p == a) add.emplace(o, b, s);
          if (p == b) add.emplace(o, a, s);
        }
      }
    }
    for (const auto& t : add) changed = g.insert(t).second || changed;
    if (!changed) break;
  }

  std::set<std::string> exempt;
  if (f.inverse_symmetry) {
    auto ax = detail::inverse_axioms(g, v);
    exempt = ax.symmetric;
    for (const auto& [a, b] : ax.pairs) {
      exempt.insert(a);
      exempt.insert(b);
    }
  }
  STripleSet out = g;
  for (const auto& [s, p, o] : g)
    if (!exempt.count(p)) out.emplace(o, p + "#inv", s);
  return out;
}

}  // namespace oracle
