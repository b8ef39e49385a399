#include "kgmatch/saturation.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>
#include <numeric>

namespace kgmatch {

GraphVariant GraphVariant::from_tag(VariantTag tag) {
  GraphVariant v{tag, {}};
  switch (tag) {
    case VariantTag::G0:
      break;
    case VariantTag::G1:
      v.flags.contract_sameas = true;
      break;
    case VariantTag::G2:
      v.flags.inverse_symmetry_semantics = true;
      break;
    case VariantTag::G3:
      v.flags.close_predicates = true;
      break;
    case VariantTag::G4:
      v.flags.close_classes = true;
      break;
    case VariantTag::G5:
      v.flags = {true, true, true, true};
      break;
  }
  return v;
}

std::string to_string(VariantTag tag) { return "g" + std::to_string(static_cast<int>(tag)); }

VariantTag parse_variant_tag(std::string_view text) {
  if (text.size() == 2 && std::tolower(static_cast<unsigned char>(text[0])) == 'g' && text[1] >= '0' &&
      text[1] <= '5')
    return static_cast<VariantTag>(text[1] - '0');
  throw ConfigError("unknown graph variant '" + std::string(text) + "' (expected g0..g5)");
}

KnowledgeGraph add_abstract_inverses(const KnowledgeGraph& g, const std::set<PredicateId>& exempt,
                                     std::size_t* inverses_added) {
  KnowledgeGraph out = g;
  std::size_t added = 0;
  for (PredicateId r : g.predicates_in_use()) {
    if (g.is_abstract_inverse(r) || exempt.count(r)) continue;
    PredicateId inv = out.intern_abstract_inverse(r);
    ++added;
    for (const Triple& t : g.triples())
      if (t.predicate == r) out.add(t.object, inv, t.subject);
  }
  if (inverses_added) *inverses_added = added;
  return out;
}

namespace {

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

// Reflexive-transitive successors of every key in `edges`, by BFS. Cycles
// collapse naturally: every member of a cycle reaches every other.
template <typename Id>
std::map<Id, std::vector<Id>> upward_closure(const std::set<std::pair<Id, Id>>& edges) {
  std::map<Id, std::vector<Id>> succ;
  for (const auto& [a, b] : edges) succ[a].push_back(b);
  std::map<Id, std::vector<Id>> closure;
  for (const auto& [start, _] : succ) {
    std::set<Id> seen{start};
    std::deque<Id> queue{start};
    while (!queue.empty()) {
      Id x = queue.front();
      queue.pop_front();
      auto it = succ.find(x);
      if (it == succ.end()) continue;
      for (Id y : it->second)
        if (seen.insert(y).second) queue.push_back(y);
    }
    seen.erase(start);
    closure[start] = {seen.begin(), seen.end()};
  }
  return closure;
}

void check_conflicts(const KnowledgeGraph& g, const SchemaInfo& schema) {
  for (const auto& [a, b] : schema.inverse_pairs) {
    for (PredicateId r : {a, b}) {
      if (schema.symmetric_predicates.count(r))
        throw ConflictError("predicate " + g.predicate_iri(r) + " is declared symmetric and has a declared inverse");
    }
  }
}

}  // namespace

Contraction contract_sameas(const KnowledgeGraph& g, PredicateId same_as) {
  const std::size_t n = g.node_table_size();
  UnionFind uf(n);
  for (const Triple& t : g.triples())
    if (t.predicate == same_as) uf.unite(t.subject, t.object);

  // Representative: smallest IRI in the component.
  std::vector<NodeId> best(n);
  std::iota(best.begin(), best.end(), 0);
  for (NodeId x = 0; x < n; ++x) {
    auto root = uf.find(x);
    if (g.node_iri(x) < g.node_iri(best[root])) best[root] = x;
  }
  Contraction c{g.empty_copy(), std::vector<NodeId>(n), 0};
  for (NodeId x = 0; x < n; ++x) {
    c.representative[x] = best[uf.find(x)];
    if (c.representative[x] != x) ++c.merged_nodes;
  }
  for (const Triple& t : g.triples()) {
    if (t.predicate == same_as) continue;
    NodeId s = c.representative[t.subject];
    NodeId o = c.representative[t.object];
    if (s == o && t.subject != t.object) continue;
    c.graph.add(s, t.predicate, o);
  }
  return c;
}

KnowledgeGraph complete_inverse_symmetry(const KnowledgeGraph& g, const SchemaInfo& schema) {
  check_conflicts(g, schema);
  KnowledgeGraph out = g;
  for (const Triple& t : g.triples()) {
    if (schema.symmetric_predicates.count(t.predicate)) out.add(t.object, t.predicate, t.subject);
  }
  for (const auto& [a, b] : schema.inverse_pairs) {
    for (NodeId i = 0; i < g.node_table_size(); ++i) {
      for (NodeId j : g.neighbors(i, a)) out.add(j, b, i);
      for (NodeId j : g.neighbors(i, b)) out.add(j, a, i);
    }
  }
  return out;
}

namespace {

std::set<PredicateId> inverse_exemptions(const SchemaInfo& schema) {
  std::set<PredicateId> exempt = schema.symmetric_predicates;
  for (const auto& [a, b] : schema.inverse_pairs) {
    exempt.insert(a);
    exempt.insert(b);
  }
  return exempt;
}

}  // namespace

KnowledgeGraph apply_inverse_symmetry(const KnowledgeGraph& g, const SchemaInfo& schema) {
  KnowledgeGraph completed = complete_inverse_symmetry(g, schema);
  return add_abstract_inverses(completed, inverse_exemptions(schema));
}

KnowledgeGraph close_predicate_hierarchy(const KnowledgeGraph& g, const SchemaInfo& schema) {
  if (schema.subproperty_edges.empty()) return g;
  auto supers = upward_closure(schema.subproperty_edges);
  KnowledgeGraph out = g;
  for (const Triple& t : g.triples()) {
    auto it = supers.find(t.predicate);
    if (it == supers.end()) continue;
    for (PredicateId r : it->second) out.add(t.subject, r, t.object);
  }
  return out;
}

KnowledgeGraph close_class_hierarchy(const KnowledgeGraph& g, const SchemaInfo& schema) {
  if (!schema.type || schema.subclass_edges.empty()) return g;
  auto supers = upward_closure(schema.subclass_edges);
  KnowledgeGraph out = g;
  for (const Triple& t : g.triples()) {
    if (t.predicate != *schema.type) continue;
    auto it = supers.find(t.object);
    if (it == supers.end()) continue;
    for (NodeId c : it->second) out.add(t.subject, *schema.type, c);
  }
  return out;
}

VariantResult build_variant(const KnowledgeGraph& k, GraphVariant variant, const Vocabulary& vocab) {
  const VariantFlags& f = variant.flags;
  VariantResult result{k, {}, std::vector<NodeId>(k.node_table_size())};
  std::iota(result.representative.begin(), result.representative.end(), 0);
  result.report.variant = variant;
  result.report.before = graph_stats(k);
  KnowledgeGraph& g = result.graph;

  auto grow = [&](KnowledgeGraph next) {
    result.report.added_triples += next.edge_count() - g.edge_count();
    g = std::move(next);
  };

  // Rules only add triples, except contraction, which only fires while sameAs
  // edges remain; the loop therefore terminates at the least fixpoint.
  for (;;) {
    bool changed = false;
    SchemaInfo schema = extract_schema(g, vocab);
    if (f.contract_sameas && schema.same_as && g.predicate_use(*schema.same_as) > 0) {
      Contraction c = contract_sameas(g, *schema.same_as);
      for (auto& r : result.representative) r = c.representative[r];
      result.report.merged_nodes += c.merged_nodes;
      g = std::move(c.graph);
      schema = extract_schema(g, vocab);
      changed = true;
    }
    const std::size_t before = g.edge_count();
    if (f.close_predicates) {
      grow(close_predicate_hierarchy(g, schema));
      schema = extract_schema(g, vocab);
    }
    if (f.close_classes) {
      grow(close_class_hierarchy(g, schema));
      schema = extract_schema(g, vocab);
    }
    if (f.inverse_symmetry_semantics) grow(complete_inverse_symmetry(g, schema));
    if (g.edge_count() != before) changed = true;
    if (!changed) break;
  }

  std::set<PredicateId> exempt;
  if (f.inverse_symmetry_semantics) {
    SchemaInfo schema = extract_schema(g, vocab);
    check_conflicts(g, schema);
    exempt = inverse_exemptions(schema);
  }
  const std::size_t before_inverses = g.edge_count();
  g = add_abstract_inverses(g, exempt, &result.report.abstract_inverses_added);
  result.report.added_triples += g.edge_count() - before_inverses;
  result.report.after = graph_stats(g);
  return result;
}

namespace {

void copy_predicate_table(const KnowledgeGraph& from, KnowledgeGraph& to) {
  for (PredicateId p = 0; p < from.predicate_table_size(); ++p) {
    if (auto base = from.inverse_base(p))
      to.intern_abstract_inverse(*base);
    else
      to.intern_predicate(from.predicate_iri(p));
  }
}

}  // namespace

Reduction reduce_to_khop(const KnowledgeGraph& g, std::span<const NodeId> seeds, unsigned hops) {
  const std::size_t n = g.node_table_size();
  std::vector<std::vector<NodeId>> adjacency(n);
  for (const Triple& t : g.triples()) {
    adjacency[t.subject].push_back(t.object);
    adjacency[t.object].push_back(t.subject);
  }
  constexpr unsigned kUnseen = static_cast<unsigned>(-1);
  std::vector<unsigned> depth(n, kUnseen);
  std::deque<NodeId> queue;
  for (NodeId s : seeds) {
    if (s >= n) throw LookupError("seed node id out of range");
    if (depth[s] == kUnseen) {
      depth[s] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    NodeId x = queue.front();
    queue.pop_front();
    if (depth[x] == hops) continue;
    for (NodeId y : adjacency[x]) {
      if (depth[y] == kUnseen) {
        depth[y] = depth[x] + 1;
        queue.push_back(y);
      }
    }
  }

  Reduction r{KnowledgeGraph{}, std::vector<NodeId>(n, Reduction::kDropped)};
  copy_predicate_table(g, r.graph);
  for (NodeId x = 0; x < n; ++x)
    if (depth[x] != kUnseen) r.old_to_new[x] = r.graph.intern_node(g.node_iri(x));
  for (const Triple& t : g.triples()) {
    NodeId s = r.old_to_new[t.subject];
    NodeId o = r.old_to_new[t.object];
    if (s != Reduction::kDropped && o != Reduction::kDropped) r.graph.add(s, t.predicate, o);
  }
  return r;
}

}  // namespace kgmatch
