#include "doctest.h"

#include <algorithm>
#include <set>

#include "kgmatch/pipeline.hpp"
#include "kgmatch/synthgen.hpp"
#include "oracles/saturation_oracle.hpp"

using namespace kgmatch;

namespace {

std::set<std::string> neighbor_iris(const KnowledgeGraph& g, const std::string& node) {
  std::set<std::string> out;
  const NodeId n = *g.find_node(node);
  for (const auto& t : g.triples())
    if (t.subject == n && g.predicate_iri(t.predicate).find("/vocab/has") != std::string::npos)
      out.insert(g.node_iri(t.object));
  return out;
}

std::set<std::string> canonical(const GroundTruthLedger& l, const std::string& node) {
  const auto& v = l.canonical_neighbors.at(node);
  return {v.begin(), v.end()};
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t shared = 0;
  for (const auto& x : a) shared += b.count(x);
  return static_cast<double>(shared) / static_cast<double>(a.size() + b.size() - shared);
}

}  // namespace

TEST_CASE("minimal instance") {
  SynthConfig c;
  c.num_relationship_clusters = 1;
  c.cluster_size_min = c.cluster_size_max = 2;
  c.noise_edges = 0;
  c.sameas_duplicate_rate = 0;
  c.strong_keep = 1;
  c.relation_mix = {1, 0, 0, 0, 0};
  auto out = generate(c);
  REQUIRE(out.ledger.cluster_labels.size() == 2);
  REQUIRE(out.ledger.links.size() == 1);
  const auto& link = out.ledger.links[0];
  CHECK(link.relation == AlignmentRelation::SameAs);
  auto g = parse_ntriples_string(out.ntriples).graph;
  CHECK(neighbor_iris(g, link.source) == neighbor_iris(g, link.target));
  CHECK_FALSE(neighbor_iris(g, link.source).empty());
  CHECK(g.find_predicate("http://synth.example/vocab/associatedWith") == std::nullopt);
}

TEST_CASE("no duplicates makes contraction the identity") {
  SynthConfig c;
  c.sameas_duplicate_rate = 0;
  auto out = generate(c);
  CHECK(out.ledger.duplicates.empty());
  // Planted sameAs alignments are stripped first, as in the pipeline.
  auto raw = parse_ntriples_string(out.ntriples).graph;
  CandidateRule rule;
  rule.prefixes = out.ledger.candidate_prefixes;
  const auto prepared = prepare_input(raw, rule, default_link_vocabulary());
  const auto& g = prepared.graph;
  auto g0 = build_variant(g, GraphVariant::from_tag(VariantTag::G0));
  auto g1 = build_variant(g, GraphVariant::from_tag(VariantTag::G1));
  CHECK(g1.report.merged_nodes == 0);
  CHECK(oracle::to_strings(g1.graph) == oracle::to_strings(g0.graph));
}

TEST_CASE("ledger clusters equal the gold clustering of the planted links") {
  SynthConfig c;
  auto out = generate(c);
  auto g = parse_ntriples_string(out.ntriples).graph;
  CandidateRule rule;
  rule.prefixes = out.ledger.candidate_prefixes;
  auto prepared = prepare_input(g, rule, default_link_vocabulary());
  CHECK(prepared.links.size() == out.ledger.links.size());
  auto gold = compute_gold_clustering(prepared.links, ClusteringId::C0, prepared.candidates, prepared.graph);
  REQUIRE(gold.labels.size() == out.ledger.cluster_labels.size());
  CHECK(gold.cluster_sizes.size() == c.num_relationship_clusters);
  std::map<int, int> to_planted;
  for (const auto& [node, label] : gold.labels) {
    const int planted = out.ledger.cluster_labels.at(prepared.graph.node_iri(node));
    auto [it, fresh] = to_planted.emplace(label, planted);
    CHECK(it->second == planted);
  }
  std::set<int> images;
  for (const auto& [l, p] : to_planted) images.insert(p);
  CHECK(images.size() == to_planted.size());
  for (auto size : gold.cluster_sizes) CHECK(size == 12);
}

TEST_CASE("ledger is consistent with the emitted graph") {
  SynthConfig c;
  c.seed = 11;
  auto out = generate(c);
  auto g = parse_ntriples_string(out.ntriples).graph;
  const Vocabulary v;
  for (const auto& l : out.ledger.links) {
    CHECK(out.ledger.cluster_labels.count(l.source) == 1);
    CHECK(out.ledger.cluster_labels.count(l.target) == 1);
    CHECK(out.ledger.cluster_labels.at(l.source) == out.ledger.cluster_labels.at(l.target));
    REQUIRE(g.find_predicate(default_relation_iri(l.relation)));
    CHECK(g.contains({*g.find_node(l.source), *g.find_predicate(default_relation_iri(l.relation)), *g.find_node(l.target)}));
  }
  const PredicateId same_as = *g.find_predicate(v.same_as);
  CHECK_FALSE(out.ledger.duplicates.empty());
  for (const auto& [dup, home] : out.ledger.duplicates) CHECK(g.contains({*g.find_node(dup), same_as, *g.find_node(home)}));
  for (const auto& [s, p, o] : out.ledger.axioms)
    CHECK(g.contains({*g.find_node(s), *g.find_predicate(p), *g.find_node(o)}));
  for (const auto& [iri, label] : out.ledger.cluster_labels) {
    bool prefixed = false;
    for (const auto& p : out.ledger.candidate_prefixes) prefixed = prefixed || iri.starts_with(p);
    CHECK(prefixed);
  }
}

TEST_CASE("neighbor overlap follows relation strength") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig c;
    c.seed = seed;
    auto out = generate(c);
    const auto& l = out.ledger;
    double strong_sum = 0, weak_sum = 0, strong_min = 1, weak_max = 0;
    std::size_t strong_n = 0, weak_n = 0, broad_n = 0;
    for (const auto& link : l.links) {
      auto a = canonical(l, link.source), b = canonical(l, link.target);
      const double j = jaccard(a, b);
      switch (link.relation) {
        case AlignmentRelation::SameAs:
        case AlignmentRelation::CloseMatch:
          strong_sum += j;
          strong_min = std::min(strong_min, j);
          ++strong_n;
          break;
        case AlignmentRelation::RelatedMatch:
        case AlignmentRelation::Related:
          weak_sum += j;
          weak_max = std::max(weak_max, j);
          ++weak_n;
          break;
        case AlignmentRelation::BroadMatch:
          // The source is the narrower relationship: a strict superset.
          CHECK(a.size() > b.size());
          CHECK(std::includes(a.begin(), a.end(), b.begin(), b.end()));
          ++broad_n;
          break;
      }
    }
    CAPTURE(seed);
    REQUIRE(strong_n > 0);
    REQUIRE(weak_n > 0);
    CHECK(broad_n > 0);
    CHECK(strong_sum / static_cast<double>(strong_n) > weak_sum / static_cast<double>(weak_n));
    CHECK(strong_min >= weak_max);
  }
}

TEST_CASE("clusters share more neighbors within than across") {
  auto out = generate(SynthConfig{});
  const auto& l = out.ledger;
  double within = 0, across = 0;
  std::size_t nw = 0, na = 0;
  for (const auto& [a, la] : l.cluster_labels)
    for (const auto& [b, lb] : l.cluster_labels) {
      if (a >= b) continue;
      const double j = jaccard(canonical(l, a), canonical(l, b));
      if (la == lb) {
        within += j;
        ++nw;
      } else {
        across += j;
        ++na;
      }
    }
  CHECK(within / static_cast<double>(nw) > 4 * across / static_cast<double>(na));
}

TEST_CASE("ontology hierarchies of the configured depth") {
  for (std::size_t depth : {1u, 3u}) {
    SynthConfig c;
    c.ontology_depth = depth;
    auto out = generate(c);
    const Vocabulary v;
    std::size_t sub_class = 0, sub_prop = 0;
    for (const auto& [s, p, o] : out.ledger.axioms) {
      sub_class += p == v.sub_class_of;
      sub_prop += p == v.sub_property_of;
    }
    // Three binary trees with 2 + 4 + ... + 2^depth edges each.
    CHECK(sub_class == 3 * ((std::size_t{2} << depth) - 2));
    CHECK(sub_prop == 4);
  }
}

TEST_CASE("generation is deterministic under the seed") {
  SynthConfig c;
  auto a = generate(c), b = generate(c);
  CHECK(a.ntriples == b.ntriples);
  CHECK(a.ledger.cluster_labels == b.ledger.cluster_labels);
  c.seed = 8;
  CHECK(generate(c).ntriples != a.ntriples);
}

TEST_CASE("infeasible or malformed configs are rejected") {
  SynthConfig c;
  c.entities_per_role = {40, 10, 40};
  CHECK_THROWS_AS(generate(c), ConfigError);
  c = SynthConfig{};
  c.relation_mix = {0.5, 0.5, 0.5, 0, 0};
  CHECK_THROWS_AS(generate(c), ConfigError);
  c = SynthConfig{};
  c.cluster_size_min = 5;
  c.cluster_size_max = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SynthConfig{};
  c.num_sources = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
