#pragma once

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgmatch/graph_store.hpp"

namespace kgmatch {

enum class VariantTag { G0, G1, G2, G3, G4, G5 };

struct VariantFlags {
  bool contract_sameas = false;
  bool inverse_symmetry_semantics = false;
  bool close_predicates = false;
  bool close_classes = false;

  bool operator==(const VariantFlags&) const = default;
};

struct GraphVariant {
  VariantTag tag = VariantTag::G0;
  VariantFlags flags;

  static GraphVariant from_tag(VariantTag tag);
};

std::string to_string(VariantTag tag);
// Accepts "g0".."g5" (case-insensitive).
VariantTag parse_variant_tag(std::string_view text);

struct SaturationReport {
  GraphVariant variant;
  GraphStats before;
  GraphStats after;
  std::size_t added_triples = 0;
  std::size_t merged_nodes = 0;
  std::size_t abstract_inverses_added = 0;
  // Hierarchies are closed over original predicates before abstract inverses
  // are created; abstract inverses never take part in closure.
  std::string inverse_order = "closure-then-transpose";
};

struct Contraction {
  KnowledgeGraph graph;
  // Indexed by node id; ids are shared between input and output graphs.
  std::vector<NodeId> representative;
  std::size_t merged_nodes = 0;
};

// Adds r#inv with the transposed adjacency for every predicate in use that is
// not itself an abstract inverse and not in `exempt`.
KnowledgeGraph add_abstract_inverses(const KnowledgeGraph& g, const std::set<PredicateId>& exempt = {},
                                     std::size_t* inverses_added = nullptr);

// Merges every undirected sameAs component into its lexicographically smallest
// IRI. Self-loops produced by the merge and all sameAs edges are dropped.
Contraction contract_sameas(const KnowledgeGraph& g, PredicateId same_as);

// Symmetric and declared-inverse completion only, no abstract inverses.
// Throws ConflictError when a predicate is both symmetric and part of an
// inverse pair.
KnowledgeGraph complete_inverse_symmetry(const KnowledgeGraph& g, const SchemaInfo& schema);

// Completion plus abstract inverses for every predicate that is neither
// symmetric nor part of a declared inverse pair.
KnowledgeGraph apply_inverse_symmetry(const KnowledgeGraph& g, const SchemaInfo& schema);

KnowledgeGraph close_predicate_hierarchy(const KnowledgeGraph& g, const SchemaInfo& schema);
KnowledgeGraph close_class_hierarchy(const KnowledgeGraph& g, const SchemaInfo& schema);

struct VariantResult {
  KnowledgeGraph graph;
  SaturationReport report;
  std::vector<NodeId> representative;
};

// Input must already be stripped of alignment links.
VariantResult build_variant(const KnowledgeGraph& k, GraphVariant variant, const Vocabulary& vocab = {});

struct Reduction {
  KnowledgeGraph graph;
  // Old node id -> new node id, or kDropped.
  std::vector<NodeId> old_to_new;
  static constexpr NodeId kDropped = static_cast<NodeId>(-1);
};

// Keeps nodes within `hops` undirected edges of any seed and all triples among
// them. Predicate ids are preserved; node ids are renumbered densely in the
// original order.
Reduction reduce_to_khop(const KnowledgeGraph& g, std::span<const NodeId> seeds, unsigned hops);

}  // namespace kgmatch
