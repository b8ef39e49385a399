#include "kgmatch/alignment.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>

#include "kgmatch/random.hpp"

namespace kgmatch {

std::string to_string(AlignmentRelation r) {
  switch (r) {
    case AlignmentRelation::SameAs:
      return "sameAs";
    case AlignmentRelation::CloseMatch:
      return "closeMatch";
    case AlignmentRelation::RelatedMatch:
      return "relatedMatch";
    case AlignmentRelation::Related:
      return "related";
    case AlignmentRelation::BroadMatch:
      return "broadMatch";
  }
  return "?";
}

AlignmentRelation parse_relation(std::string_view name) {
  for (AlignmentRelation r : kAllRelations)
    if (to_string(r) == name) return r;
  throw ConfigError("unknown alignment relation '" + std::string(name) + "'");
}

std::string default_relation_iri(AlignmentRelation r) {
  if (r == AlignmentRelation::SameAs) return "http://www.w3.org/2002/07/owl#sameAs";
  return "http://www.w3.org/2004/02/skos/core#" + to_string(r);
}

LinkVocabulary default_link_vocabulary() {
  LinkVocabulary v;
  for (AlignmentRelation r : kAllRelations) v.emplace(default_relation_iri(r), r);
  return v;
}

StrippedGraph strip_alignments(const KnowledgeGraph& g, std::span<const NodeId> candidates,
                               const LinkVocabulary& vocab) {
  std::vector<char> in_s(g.node_table_size(), 0);
  for (NodeId n : candidates) in_s.at(n) = 1;
  std::map<PredicateId, AlignmentRelation> link_predicates;
  for (const auto& [iri, rel] : vocab)
    if (auto p = g.find_predicate(iri)) link_predicates.emplace(*p, rel);

  StrippedGraph out{g.empty_copy(), {}};
  for (const Triple& t : g.triples()) {
    auto it = link_predicates.find(t.predicate);
    if (it != link_predicates.end() && in_s[t.subject] && in_s[t.object]) {
      if (t.subject != t.object) out.links.push_back({t.subject, t.object, it->second});
      continue;
    }
    out.graph.add(t.subject, t.predicate, t.object);
  }
  return out;
}

std::string to_string(ClusteringId id) { return "c" + std::to_string(static_cast<int>(id)); }

ClusteringId parse_clustering_id(std::string_view text) {
  if (text.size() == 2 && std::tolower(static_cast<unsigned char>(text[0])) == 'c' && text[1] >= '0' &&
      text[1] <= '6')
    return static_cast<ClusteringId>(text[1] - '0');
  throw ConfigError("unknown gold clustering '" + std::string(text) + "' (expected c0..c6)");
}

std::vector<AlignmentRelation> clustering_relations(ClusteringId id) {
  using R = AlignmentRelation;
  switch (id) {
    case ClusteringId::C0:
      return {kAllRelations.begin(), kAllRelations.end()};
    case ClusteringId::C1:
      return {R::SameAs, R::CloseMatch, R::RelatedMatch, R::Related};
    case ClusteringId::C2:
      return {R::SameAs};
    case ClusteringId::C3:
      return {R::CloseMatch};
    case ClusteringId::C4:
      return {R::RelatedMatch};
    case ClusteringId::C5:
      return {R::Related};
    case ClusteringId::C6:
      return {R::BroadMatch};
  }
  return {};
}

GoldClustering compute_gold_clustering(std::span<const AlignmentLink> links, ClusteringId id,
                                       std::span<const NodeId> candidates, const KnowledgeGraph& g) {
  GoldClustering gc;
  gc.id = id;
  gc.relations = clustering_relations(id);
  std::set<AlignmentRelation> selected(gc.relations.begin(), gc.relations.end());

  std::vector<NodeId> nodes(candidates.begin(), candidates.end());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  auto pos = [&](NodeId n) -> std::size_t {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), n);
    if (it == nodes.end() || *it != n) throw LookupError("link endpoint is not a match candidate");
    return static_cast<std::size_t>(it - nodes.begin());
  };

  std::vector<std::size_t> parent(nodes.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const AlignmentLink& l : links) {
    if (!selected.count(l.relation)) continue;
    std::size_t a = find(pos(l.source));
    std::size_t b = find(pos(l.target));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  // Order clusters by their smallest member IRI.
  std::map<std::size_t, std::string> smallest;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string& iri = g.node_iri(nodes[i]);
    auto [it, inserted] = smallest.emplace(find(i), iri);
    if (!inserted && iri < it->second) it->second = iri;
  }
  std::vector<std::pair<std::string, std::size_t>> order;
  for (const auto& [root, iri] : smallest) order.emplace_back(iri, root);
  std::sort(order.begin(), order.end());
  std::map<std::size_t, int> label_of_root;
  for (std::size_t k = 0; k < order.size(); ++k) label_of_root[order[k].second] = static_cast<int>(k);

  gc.cluster_sizes.assign(order.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    int label = label_of_root[find(i)];
    gc.labels[nodes[i]] = label;
    ++gc.cluster_sizes[static_cast<std::size_t>(label)];
  }
  for (std::size_t s : gc.cluster_sizes) ++gc.size_histogram[s];
  return gc;
}

std::vector<NodeId> filter_min_size(const GoldClustering& gc, std::size_t threshold) {
  std::vector<NodeId> out;
  for (const auto& [n, label] : gc.labels)
    if (gc.cluster_sizes[static_cast<std::size_t>(label)] >= threshold) out.push_back(n);
  return out;
}

std::array<std::vector<NodeId>, kFoldCount> assign_folds(const GoldClustering& gc, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<NodeId>> members(gc.cluster_sizes.size());
  for (const auto& [n, label] : gc.labels) members[static_cast<std::size_t>(label)].push_back(n);

  std::array<std::vector<NodeId>, kFoldCount> sets;
  std::size_t offset = rng.index(kFoldCount);
  for (auto& cluster : members) {
    if (cluster.size() > 5) {
      // Deal round-robin; carrying the offset across clusters spreads remainders.
      rng.shuffle(cluster);
      for (NodeId n : cluster) {
        sets[offset].push_back(n);
        offset = (offset + 1) % kFoldCount;
      }
    } else {
      for (NodeId n : cluster) sets[rng.index(kFoldCount)].push_back(n);
    }
  }
  for (auto& s : sets) std::sort(s.begin(), s.end());
  return sets;
}

std::array<FoldSplit, kFoldCount> folds_from_sets(const std::array<std::vector<NodeId>, kFoldCount>& sets) {
  std::array<FoldSplit, kFoldCount> folds;
  for (int k = 0; k < kFoldCount; ++k) {
    FoldSplit& f = folds[static_cast<std::size_t>(k)];
    f.fold_index = k + 1;
    f.test = sets[static_cast<std::size_t>(k)];
    f.validation = sets[static_cast<std::size_t>((k + 1) % kFoldCount)];
    for (int j = 0; j < kFoldCount; ++j) {
      if (j == k || j == (k + 1) % kFoldCount) continue;
      const auto& s = sets[static_cast<std::size_t>(j)];
      f.train.insert(f.train.end(), s.begin(), s.end());
    }
    std::sort(f.train.begin(), f.train.end());
  }
  return folds;
}

std::array<FoldSplit, kFoldCount> split_folds(const GoldClustering& gc, std::uint64_t seed) {
  return folds_from_sets(assign_folds(gc, seed));
}

}  // namespace kgmatch
