#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "kgmatch/alignment.hpp"

namespace kgmatch {

// Desk-scale generator of reified n-ary relationship graphs: each relationship
// node ("pgr") links to drug-, gene- and phenotype-like component entities,
// entities are duplicated across sources and tied with sameAs, and planted
// alignment links between relationship nodes provide gold clusters.
struct SynthConfig {
  std::size_t num_sources = 3;
  std::size_t num_relationship_clusters = 8;
  std::size_t cluster_size_min = 12;
  std::size_t cluster_size_max = 12;
  // Component entities available per role (drug, gene, phenotype).
  std::array<std::size_t, 3> entities_per_role = {40, 40, 40};
  // Core entities each cluster draws per role.
  std::size_t core_per_role = 2;
  // Probabilities over sameAs, closeMatch, relatedMatch, related, broadMatch,
  // used to pick how each member is derived from its parent.
  std::array<double, 5> relation_mix = {0.2, 0.2, 0.2, 0.2, 0.2};
  std::size_t ontology_depth = 3;
  double sameas_duplicate_rate = 0.3;
  std::size_t noise_edges = 30;
  // Neighbor overlap: a strongly linked member keeps each neighbor of its
  // parent with probability strong_keep; a weakly linked one keeps each core
  // entity with probability weak_keep.
  double strong_keep = 0.9;
  double weak_keep = 0.6;
  // Besides the tree edge to its parent, each member links to every earlier
  // member of its cluster with this probability. Non-superset pairs receive
  // sameAs, closeMatch, relatedMatch, related by decreasing neighbor overlap
  // in the proportions of relation_mix; strict-superset pairs get broadMatch.
  double extra_link_rate = 1.0;
  std::uint64_t seed = 7;

  void validate() const;
};

struct PlantedLink {
  std::string source;
  std::string target;
  AlignmentRelation relation;
};

struct GroundTruthLedger {
  std::vector<PlantedLink> links;
  std::map<std::string, int> cluster_labels;    // relationship IRI -> planted cluster
  std::map<std::string, std::string> duplicates;  // duplicate IRI -> canonical IRI
  std::vector<std::tuple<std::string, std::string, std::string>> axioms;
  std::vector<std::string> candidate_prefixes;
  // Canonical component IRIs per relationship node, before source duplication.
  std::map<std::string, std::vector<std::string>> canonical_neighbors;
};

struct SynthOutput {
  std::string ntriples;
  GroundTruthLedger ledger;
};

inline constexpr const char* kSynthBase = "http://synth.example/";

SynthOutput generate(const SynthConfig& config);

}  // namespace kgmatch
