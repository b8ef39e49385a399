#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgmatch/graph_store.hpp"

namespace kgmatch {

enum class AlignmentRelation { SameAs, CloseMatch, RelatedMatch, Related, BroadMatch };

inline constexpr std::array<AlignmentRelation, 5> kAllRelations = {
    AlignmentRelation::SameAs, AlignmentRelation::CloseMatch, AlignmentRelation::RelatedMatch,
    AlignmentRelation::Related, AlignmentRelation::BroadMatch};

// Short names: sameAs, closeMatch, relatedMatch, related, broadMatch.
std::string to_string(AlignmentRelation r);
AlignmentRelation parse_relation(std::string_view name);
std::string default_relation_iri(AlignmentRelation r);
inline bool is_symmetric(AlignmentRelation r) { return r != AlignmentRelation::BroadMatch; }

struct AlignmentLink {
  NodeId source = 0;
  NodeId target = 0;
  AlignmentRelation relation = AlignmentRelation::SameAs;

  bool operator==(const AlignmentLink&) const = default;
};

// Link predicate IRI -> relation.
using LinkVocabulary = std::map<std::string, AlignmentRelation>;
LinkVocabulary default_link_vocabulary();

struct StrippedGraph {
  KnowledgeGraph graph;
  std::vector<AlignmentLink> links;
};

// Removes alignment triples whose endpoints are both match candidates. Node
// ids are preserved. Alignment-predicate triples touching non-candidates stay.
StrippedGraph strip_alignments(const KnowledgeGraph& g, std::span<const NodeId> candidates,
                               const LinkVocabulary& vocab = default_link_vocabulary());

enum class ClusteringId { C0, C1, C2, C3, C4, C5, C6 };

std::string to_string(ClusteringId id);
ClusteringId parse_clustering_id(std::string_view text);
// Relation subset selected by each gold clustering.
std::vector<AlignmentRelation> clustering_relations(ClusteringId id);

struct GoldClustering {
  ClusteringId id = ClusteringId::C0;
  std::vector<AlignmentRelation> relations;
  // Candidate node -> dense label; labels ordered by the smallest IRI in each cluster.
  std::map<NodeId, int> labels;
  // Indexed by label.
  std::vector<std::size_t> cluster_sizes;
  // Cluster size -> number of clusters of that size.
  std::map<std::size_t, std::size_t> size_histogram;

  std::size_t cluster_size_of(NodeId n) const { return cluster_sizes.at(static_cast<std::size_t>(labels.at(n))); }
};

// Connected components of (candidates, selected links), links taken undirected.
GoldClustering compute_gold_clustering(std::span<const AlignmentLink> links, ClusteringId id,
                                       std::span<const NodeId> candidates, const KnowledgeGraph& g);

// Candidates whose gold cluster has at least `threshold` members, ascending.
std::vector<NodeId> filter_min_size(const GoldClustering& gc, std::size_t threshold);

inline constexpr int kFoldCount = 5;

struct FoldSplit {
  int fold_index = 1;  // 1..5
  std::vector<NodeId> train;
  std::vector<NodeId> validation;
  std::vector<NodeId> test;
};

// Partition of the candidate set into the five S_k (index 0 is S_1).
std::array<std::vector<NodeId>, kFoldCount> assign_folds(const GoldClustering& gc, std::uint64_t seed);

// Fold k tests on S_k, validates on S_{k+1} (S_1 after S_5), trains on the rest.
std::array<FoldSplit, kFoldCount> split_folds(const GoldClustering& gc, std::uint64_t seed);
std::array<FoldSplit, kFoldCount> folds_from_sets(const std::array<std::vector<NodeId>, kFoldCount>& sets);

}  // namespace kgmatch
