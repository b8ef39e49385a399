#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgmatch/error.hpp"

namespace kgmatch {

using NodeId = std::uint32_t;
using PredicateId = std::uint32_t;

struct Triple {
  NodeId subject = 0;
  PredicateId predicate = 0;
  NodeId object = 0;

  auto operator<=>(const Triple&) const = default;
};

struct GraphStats {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::size_t predicate_count = 0;

  bool operator==(const GraphStats&) const = default;
};

// Directed labeled multigraph over interned IRIs. Node and predicate ids are
// dense and assigned in first-seen order; triples form a set.
//
// fwd_index(i, r) holds {j | (i, r, j)} and rev_index(j, r) holds
// {i | (i, r, j)}; both are kept sorted so lookups return deterministic order.
class KnowledgeGraph {
 public:
  NodeId intern_node(std::string_view iri);
  PredicateId intern_predicate(std::string_view iri);
  // Creates (or returns) the tagged predicate "<iri of base>#inv".
  PredicateId intern_abstract_inverse(PredicateId base);

  std::optional<NodeId> find_node(std::string_view iri) const;
  std::optional<PredicateId> find_predicate(std::string_view iri) const;

  const std::string& node_iri(NodeId id) const;
  const std::string& predicate_iri(PredicateId id) const;
  bool is_abstract_inverse(PredicateId id) const;
  // Base predicate of an abstract inverse.
  std::optional<PredicateId> inverse_base(PredicateId id) const;

  std::size_t node_table_size() const { return node_iris_.size(); }
  std::size_t predicate_table_size() const { return predicates_.size(); }

  // Returns false when the triple was already present.
  bool add(NodeId subject, PredicateId predicate, NodeId object);
  bool add(std::string_view subject, std::string_view predicate, std::string_view object);
  bool contains(const Triple& t) const { return triples_.count(t) != 0; }

  // O(1) hashed lookup; unknown ids raise LookupError.
  const std::vector<NodeId>& neighbors(NodeId i, PredicateId r) const;
  const std::vector<NodeId>& reverse_neighbors(NodeId j, PredicateId r) const;

  const std::set<Triple>& triples() const { return triples_; }
  std::size_t edge_count() const { return triples_.size(); }
  // Number of triples carrying predicate r.
  std::size_t predicate_use(PredicateId r) const;
  // Predicates carrying at least one triple, ascending.
  std::vector<PredicateId> predicates_in_use() const;

  // Same node and predicate tables, no triples. Ids stay valid across the copy.
  KnowledgeGraph empty_copy() const;

 private:
  static std::uint64_t key(NodeId n, PredicateId p) {
    return (static_cast<std::uint64_t>(n) << 32) | p;
  }
  void check_node(NodeId id) const;
  void check_predicate(PredicateId id) const;

  struct PredicateEntry {
    std::string iri;
    std::optional<PredicateId> inverse_of;
  };

  std::vector<std::string> node_iris_;
  std::unordered_map<std::string, NodeId> node_ids_;
  std::vector<PredicateEntry> predicates_;
  std::unordered_map<std::string, PredicateId> predicate_ids_;
  std::vector<std::size_t> predicate_use_;
  std::set<Triple> triples_;
  std::unordered_map<std::uint64_t, std::vector<NodeId>> fwd_;
  std::unordered_map<std::uint64_t, std::vector<NodeId>> rev_;
};

// Counts over the deduplicated triple set: nodes and predicates that occur in
// at least one triple.
GraphStats graph_stats(const KnowledgeGraph& g);

struct NTriplesResult {
  KnowledgeGraph graph;
  std::size_t literals_dropped = 0;
  std::size_t lines = 0;
};

// Reads the N-Triples subset: `<iri> <iri> (<iri>|literal) .` per line, `#`
// comments and blank lines skipped. Literal-object lines are counted and dropped.
NTriplesResult parse_ntriples(std::istream& in);
NTriplesResult parse_ntriples_string(std::string_view text);
NTriplesResult read_ntriples_file(const std::string& path);

void write_ntriples(std::ostream& out, const KnowledgeGraph& g);
std::string to_ntriples(const KnowledgeGraph& g);

bool is_absolute_iri(std::string_view iri);

// Well-known vocabulary used for schema extraction. Configurable because data
// sets differ on how symmetry or inverses are declared.
struct Vocabulary {
  std::string type = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
  std::string sub_class_of = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
  std::string sub_property_of = "http://www.w3.org/2000/01/rdf-schema#subPropertyOf";
  std::string inverse_of = "http://www.w3.org/2002/07/owl#inverseOf";
  std::string symmetric_property = "http://www.w3.org/2002/07/owl#SymmetricProperty";
  std::string same_as = "http://www.w3.org/2002/07/owl#sameAs";
};

struct SchemaInfo {
  std::optional<PredicateId> type;
  std::optional<PredicateId> sub_class_of;
  std::optional<PredicateId> sub_property_of;
  std::optional<PredicateId> inverse_of;
  std::optional<PredicateId> same_as;

  std::set<std::pair<NodeId, NodeId>> subclass_edges;
  std::set<std::pair<PredicateId, PredicateId>> subproperty_edges;
  // Stored as (min, max). A predicate declared its own inverse is recorded as
  // symmetric instead.
  std::set<std::pair<PredicateId, PredicateId>> inverse_pairs;
  std::set<PredicateId> symmetric_predicates;
};

// Predicates named by axioms are interned so that closures can target
// predicates that carry no triples yet.
SchemaInfo extract_schema(KnowledgeGraph& g, const Vocabulary& vocab = {});

}  // namespace kgmatch
