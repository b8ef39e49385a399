#include "doctest.h"

#include <algorithm>
#include <map>
#include <set>

#include "kgmatch/alignment.hpp"
#include "support/random_graphs.hpp"

using namespace kgmatch;
using testing_support::iri;

namespace {

struct Fixture {
  KnowledgeGraph g;
  std::vector<NodeId> s;

  NodeId node(const std::string& name) {
    NodeId id = g.intern_node(iri(name));
    if (std::find(s.begin(), s.end(), id) == s.end()) s.push_back(id);
    return id;
  }
};

// Path search over undirected selected links.
bool connected(const std::vector<AlignmentLink>& links, const std::vector<AlignmentRelation>& rel, NodeId from,
               NodeId to) {
  std::set<NodeId> seen{from};
  std::vector<NodeId> stack{from};
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    if (u == to) return true;
    for (const auto& l : links) {
      if (std::find(rel.begin(), rel.end(), l.relation) == rel.end()) continue;
      NodeId w = l.source == u ? l.target : l.target == u ? l.source : u;
      if (w != u && seen.insert(w).second) stack.push_back(w);
    }
  }
  return false;
}

GoldClustering clusters_of_sizes(Fixture& f, const std::vector<std::size_t>& sizes) {
  std::vector<AlignmentLink> links;
  int counter = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    NodeId first = f.node("m" + std::to_string(counter++));
    for (std::size_t i = 1; i < sizes[k]; ++i)
      links.push_back({f.node("m" + std::to_string(counter++)), first, AlignmentRelation::SameAs});
  }
  return compute_gold_clustering(links, ClusteringId::C0, f.s, f.g);
}

}  // namespace

TEST_CASE("relation names and clustering subsets") {
  for (auto r : kAllRelations) CHECK(parse_relation(to_string(r)) == r);
  CHECK_FALSE(is_symmetric(AlignmentRelation::BroadMatch));
  CHECK(clustering_relations(ClusteringId::C0).size() == 5);
  const auto c1 = clustering_relations(ClusteringId::C1);
  CHECK(c1.size() == 4);
  CHECK(std::find(c1.begin(), c1.end(), AlignmentRelation::BroadMatch) == c1.end());
  CHECK(clustering_relations(ClusteringId::C2) == std::vector{AlignmentRelation::SameAs});
  CHECK(clustering_relations(ClusteringId::C6) == std::vector{AlignmentRelation::BroadMatch});
  CHECK(parse_clustering_id("c4") == ClusteringId::C4);
  CHECK_THROWS_AS(parse_clustering_id("c7"), ConfigError);
}

TEST_CASE("strip_alignments") {
  Fixture f;
  const NodeId s1 = f.node("s1"), s2 = f.node("s2");
  const std::string close = default_relation_iri(AlignmentRelation::CloseMatch);
  const std::string same = default_relation_iri(AlignmentRelation::SameAs);
  f.g.add(s1, f.g.intern_predicate(close), s2);
  const NodeId d1 = f.g.intern_node(iri("d1")), d2 = f.g.intern_node(iri("d2"));
  f.g.add(d1, f.g.intern_predicate(same), d2);
  f.g.add(s1, f.g.intern_predicate(iri("p")), d1);

  auto out = strip_alignments(f.g, f.s);
  CHECK(out.links == std::vector<AlignmentLink>{{s1, s2, AlignmentRelation::CloseMatch}});
  CHECK_FALSE(out.graph.contains({s1, *f.g.find_predicate(close), s2}));
  CHECK(out.graph.contains({d1, *f.g.find_predicate(same), d2}));
  CHECK(out.graph.edge_count() == 2);

  KnowledgeGraph plain;
  plain.add(iri("a"), iri("p"), iri("b"));
  std::vector<NodeId> cands{0, 1};
  auto none = strip_alignments(plain, cands);
  CHECK(none.links.empty());
  CHECK(none.graph.triples() == plain.triples());
}

TEST_CASE("gold clusterings are components of selected links") {
  Fixture f;
  const NodeId a = f.node("a"), b = f.node("b"), c = f.node("c"), x = f.node("x"), y = f.node("y");
  std::vector<AlignmentLink> links{{a, b, AlignmentRelation::SameAs}, {b, c, AlignmentRelation::Related}};
  auto c0 = compute_gold_clustering(links, ClusteringId::C0, f.s, f.g);
  CHECK(c0.labels.at(a) == c0.labels.at(b));
  CHECK(c0.labels.at(a) == c0.labels.at(c));
  CHECK(c0.cluster_size_of(c) == 3);

  auto c2 = compute_gold_clustering(links, ClusteringId::C2, f.s, f.g);
  CHECK(c2.labels.at(a) == c2.labels.at(b));
  CHECK(c2.labels.at(a) != c2.labels.at(c));
  CHECK(c2.cluster_size_of(c) == 1);

  std::vector<AlignmentLink> broad{{x, y, AlignmentRelation::BroadMatch}};
  auto c6 = compute_gold_clustering(broad, ClusteringId::C6, f.s, f.g);
  CHECK(c6.labels.at(x) == c6.labels.at(y));
  CHECK(c6.labels.size() == f.s.size());
  // Labels follow the smallest IRI of each cluster.
  CHECK(c6.labels.at(a) == 0);
  CHECK(c6.size_histogram.at(1) == 3);
  CHECK(c6.size_histogram.at(2) == 1);
}

TEST_CASE("property: components agree with path search") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Rng rng(seed);
    Fixture f;
    const std::size_t n = 5 + rng.index(30);
    for (std::size_t i = 0; i < n; ++i) f.node("n" + std::to_string(i));
    std::vector<AlignmentLink> links;
    const std::size_t m = rng.index(std::min<std::size_t>(100, 2 * n));
    for (std::size_t k = 0; k < m; ++k) {
      NodeId u = f.s[rng.index(n)], v = f.s[rng.index(n)];
      if (u != v) links.push_back({u, v, kAllRelations[rng.index(5)]});
    }
    for (int id = 0; id <= 6; ++id) {
      const auto cid = static_cast<ClusteringId>(id);
      auto gc = compute_gold_clustering(links, cid, f.s, f.g);
      REQUIRE(gc.labels.size() == n);
      std::size_t total = 0;
      for (auto size : gc.cluster_sizes) total += size;
      CHECK(total == n);
      const auto rel = clustering_relations(cid);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          CHECK((gc.labels.at(f.s[i]) == gc.labels.at(f.s[j])) == connected(links, rel, f.s[i], f.s[j]));
      auto t1 = filter_min_size(gc, 2), t2 = filter_min_size(gc, 4);
      CHECK(std::includes(t1.begin(), t1.end(), t2.begin(), t2.end()));
    }
  }
}

TEST_CASE("filter_min_size") {
  Fixture f;
  auto gc = clusters_of_sizes(f, {12, 9});
  auto kept = filter_min_size(gc, 10);
  CHECK(kept.size() == 12);
  for (NodeId n : kept) CHECK(gc.cluster_size_of(n) == 12);
  CHECK(filter_min_size(gc, 1).size() == 21);
}

TEST_CASE("fold splits") {
  SUBCASE("cluster of ten") {
    Fixture f;
    auto gc = clusters_of_sizes(f, {10});
    for (std::uint64_t seed = 0; seed < 20; ++seed)
      for (const auto& s : assign_folds(gc, seed)) CHECK(s.size() == 2);
  }
  SUBCASE("cluster of twelve") {
    Fixture f;
    auto gc = clusters_of_sizes(f, {12});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::vector<std::size_t> sizes;
      for (const auto& s : assign_folds(gc, seed)) sizes.push_back(s.size());
      std::sort(sizes.begin(), sizes.end());
      CHECK(sizes == std::vector<std::size_t>{2, 2, 2, 3, 3});
    }
  }
  SUBCASE("validation rotates") {
    Fixture f;
    auto gc = clusters_of_sizes(f, {12, 7, 3, 1});
    auto sets = assign_folds(gc, 5);
    auto folds = split_folds(gc, 5);
    CHECK(folds[4].fold_index == 5);
    CHECK(folds[4].validation == sets[0]);
    for (int k = 0; k < 5; ++k) {
      const auto& fold = folds[static_cast<std::size_t>(k)];
      CHECK(fold.test == sets[static_cast<std::size_t>(k)]);
      CHECK(fold.validation == sets[static_cast<std::size_t>((k + 1) % 5)]);
      std::vector<NodeId> all = fold.train;
      all.insert(all.end(), fold.validation.begin(), fold.validation.end());
      all.insert(all.end(), fold.test.begin(), fold.test.end());
      std::sort(all.begin(), all.end());
      CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
      CHECK(all.size() == gc.labels.size());
    }
  }
}

TEST_CASE("property: per-cluster fold counts differ by at most one") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng rng(seed);
    Fixture f;
    std::vector<std::size_t> sizes;
    for (int k = 0; k < 6; ++k) sizes.push_back(1 + rng.index(25));
    auto gc = clusters_of_sizes(f, sizes);
    auto sets = assign_folds(gc, seed);
    CHECK(sets == assign_folds(gc, seed));
    for (std::size_t label = 0; label < gc.cluster_sizes.size(); ++label) {
      if (gc.cluster_sizes[label] <= 5) continue;
      std::size_t lo = SIZE_MAX, hi = 0;
      for (const auto& s : sets) {
        std::size_t count = 0;
        for (NodeId n : s) count += gc.labels.at(n) == static_cast<int>(label);
        lo = std::min(lo, count);
        hi = std::max(hi, count);
      }
      CHECK(hi - lo <= 1);
    }
  }
}
