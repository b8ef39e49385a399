#include "kgmatch/graph_store.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace kgmatch {

namespace {

const std::vector<NodeId> kEmpty;

void insert_sorted(std::vector<NodeId>& v, NodeId x) {
  v.insert(std::lower_bound(v.begin(), v.end(), x), x);
}

}  // namespace

NodeId KnowledgeGraph::intern_node(std::string_view iri) {
  if (iri.empty()) throw Error("empty IRI");
  auto it = node_ids_.find(std::string(iri));
  if (it != node_ids_.end()) return it->second;
  auto id = static_cast<NodeId>(node_iris_.size());
  node_iris_.emplace_back(iri);
  node_ids_.emplace(node_iris_.back(), id);
  return id;
}

PredicateId KnowledgeGraph::intern_predicate(std::string_view iri) {
  if (iri.empty()) throw Error("empty IRI");
  auto it = predicate_ids_.find(std::string(iri));
  if (it != predicate_ids_.end()) return it->second;
  auto id = static_cast<PredicateId>(predicates_.size());
  predicates_.push_back({std::string(iri), std::nullopt});
  predicate_ids_.emplace(predicates_.back().iri, id);
  predicate_use_.push_back(0);
  return id;
}

PredicateId KnowledgeGraph::intern_abstract_inverse(PredicateId base) {
  check_predicate(base);
  if (predicates_[base].inverse_of) throw Error("abstract inverse of an abstract inverse: " + predicates_[base].iri);
  PredicateId id = intern_predicate(predicates_[base].iri + "#inv");
  predicates_[id].inverse_of = base;
  return id;
}

std::optional<NodeId> KnowledgeGraph::find_node(std::string_view iri) const {
  auto it = node_ids_.find(std::string(iri));
  if (it == node_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<PredicateId> KnowledgeGraph::find_predicate(std::string_view iri) const {
  auto it = predicate_ids_.find(std::string(iri));
  if (it == predicate_ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& KnowledgeGraph::node_iri(NodeId id) const {
  check_node(id);
  return node_iris_[id];
}

const std::string& KnowledgeGraph::predicate_iri(PredicateId id) const {
  check_predicate(id);
  return predicates_[id].iri;
}

bool KnowledgeGraph::is_abstract_inverse(PredicateId id) const {
  check_predicate(id);
  return predicates_[id].inverse_of.has_value();
}

std::optional<PredicateId> KnowledgeGraph::inverse_base(PredicateId id) const {
  check_predicate(id);
  return predicates_[id].inverse_of;
}

bool KnowledgeGraph::add(NodeId subject, PredicateId predicate, NodeId object) {
  check_node(subject);
  check_node(object);
  check_predicate(predicate);
  if (!triples_.insert({subject, predicate, object}).second) return false;
  insert_sorted(fwd_[key(subject, predicate)], object);
  insert_sorted(rev_[key(object, predicate)], subject);
  ++predicate_use_[predicate];
  return true;
}

bool KnowledgeGraph::add(std::string_view subject, std::string_view predicate, std::string_view object) {
  NodeId s = intern_node(subject);
  PredicateId p = intern_predicate(predicate);
  NodeId o = intern_node(object);
  return add(s, p, o);
}

const std::vector<NodeId>& KnowledgeGraph::neighbors(NodeId i, PredicateId r) const {
  check_node(i);
  check_predicate(r);
  auto it = fwd_.find(key(i, r));
  return it == fwd_.end() ? kEmpty : it->second;
}

const std::vector<NodeId>& KnowledgeGraph::reverse_neighbors(NodeId j, PredicateId r) const {
  check_node(j);
  check_predicate(r);
  auto it = rev_.find(key(j, r));
  return it == rev_.end() ? kEmpty : it->second;
}

std::size_t KnowledgeGraph::predicate_use(PredicateId r) const {
  check_predicate(r);
  return predicate_use_[r];
}

std::vector<PredicateId> KnowledgeGraph::predicates_in_use() const {
  std::vector<PredicateId> out;
  for (PredicateId r = 0; r < predicate_use_.size(); ++r)
    if (predicate_use_[r] > 0) out.push_back(r);
  return out;
}

KnowledgeGraph KnowledgeGraph::empty_copy() const {
  KnowledgeGraph g;
  g.node_iris_ = node_iris_;
  g.node_ids_ = node_ids_;
  g.predicates_ = predicates_;
  g.predicate_ids_ = predicate_ids_;
  g.predicate_use_.assign(predicates_.size(), 0);
  return g;
}

void KnowledgeGraph::check_node(NodeId id) const {
  if (id >= node_iris_.size()) throw LookupError("unknown node id " + std::to_string(id));
}

void KnowledgeGraph::check_predicate(PredicateId id) const {
  if (id >= predicates_.size()) throw LookupError("unknown predicate id " + std::to_string(id));
}

GraphStats graph_stats(const KnowledgeGraph& g) {
  std::vector<char> seen(g.node_table_size(), 0);
  GraphStats s;
  for (const Triple& t : g.triples()) {
    seen[t.subject] = 1;
    seen[t.object] = 1;
  }
  s.node_count = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), 1));
  s.edge_count = g.edge_count();
  s.predicate_count = g.predicates_in_use().size();
  return s;
}

bool is_absolute_iri(std::string_view iri) {
  auto colon = iri.find(':');
  if (colon == std::string_view::npos || colon == 0) return false;
  if (!std::isalpha(static_cast<unsigned char>(iri[0]))) return false;
  for (std::size_t i = 1; i < colon; ++i) {
    char c = iri[i];
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') return false;
  }
  return true;
}

namespace {

class LineCursor {
 public:
  LineCursor(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

  void skip_ws() {
    while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t')) ++pos_;
  }
  bool at_end() const { return pos_ >= line_.size(); }
  char peek() const { return at_end() ? '\0' : line_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_no_, pos_ + 1, what); }

  std::string_view iri() {
    skip_ws();
    if (peek() != '<') fail("expected '<'");
    std::size_t start = ++pos_;
    while (!at_end() && line_[pos_] != '>') {
      char c = line_[pos_];
      if (c == ' ' || c == '\t' || c == '<' || c == '"') fail("illegal character in IRI");
      ++pos_;
    }
    if (at_end()) fail("unterminated IRI");
    std::string_view out = line_.substr(start, pos_ - start);
    ++pos_;
    if (out.empty()) fail("empty IRI");
    if (!is_absolute_iri(out)) {
      pos_ = start;
      fail("relative IRI <" + std::string(out) + ">");
    }
    return out;
  }

  void literal() {
    skip_ws();
    if (peek() != '"') fail("expected literal");
    ++pos_;
    while (!at_end() && line_[pos_] != '"') {
      if (line_[pos_] == '\\') ++pos_;
      ++pos_;
    }
    if (at_end()) fail("unterminated literal");
    ++pos_;
    if (peek() == '@') {
      ++pos_;
      std::size_t start = pos_;
      while (!at_end() && (std::isalnum(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '-')) ++pos_;
      if (pos_ == start) fail("empty language tag");
    } else if (line_.substr(pos_, 2) == "^^") {
      pos_ += 2;
      iri();
    }
  }

  void terminator() {
    skip_ws();
    if (peek() != '.') fail("expected '.'");
    ++pos_;
    skip_ws();
    if (!at_end() && peek() != '#') fail("trailing characters after '.'");
  }

 private:
  std::string_view line_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

}  // namespace

NTriplesResult parse_ntriples(std::istream& in) {
  NTriplesResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    LineCursor cur(line, line_no);
    cur.skip_ws();
    if (cur.at_end() || cur.peek() == '#') continue;
    if (cur.peek() == '_') cur.fail("blank nodes are not supported");
    std::string_view s = cur.iri();
    std::string_view p = cur.iri();
    cur.skip_ws();
    if (cur.peek() == '"') {
      cur.literal();
      cur.terminator();
      ++result.literals_dropped;
      continue;
    }
    if (cur.peek() == '_') cur.fail("blank nodes are not supported");
    std::string_view o = cur.iri();
    cur.terminator();
    result.graph.add(s, p, o);
  }
  result.lines = line_no;
  return result;
}

NTriplesResult parse_ntriples_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_ntriples(in);
}

NTriplesResult read_ntriples_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return parse_ntriples(in);
}

void write_ntriples(std::ostream& out, const KnowledgeGraph& g) {
  for (const Triple& t : g.triples()) {
    out << '<' << g.node_iri(t.subject) << "> <" << g.predicate_iri(t.predicate) << "> <" << g.node_iri(t.object)
        << "> .\n";
  }
}

std::string to_ntriples(const KnowledgeGraph& g) {
  std::ostringstream out;
  write_ntriples(out, g);
  return out.str();
}

SchemaInfo extract_schema(KnowledgeGraph& g, const Vocabulary& vocab) {
  SchemaInfo schema;
  schema.type = g.find_predicate(vocab.type);
  schema.sub_class_of = g.find_predicate(vocab.sub_class_of);
  schema.sub_property_of = g.find_predicate(vocab.sub_property_of);
  schema.inverse_of = g.find_predicate(vocab.inverse_of);
  schema.same_as = g.find_predicate(vocab.same_as);

  // Snapshot first: interning predicates below must not disturb iteration.
  std::vector<Triple> triples(g.triples().begin(), g.triples().end());
  auto as_predicate = [&](NodeId n) { return g.intern_predicate(g.node_iri(n)); };
  auto symmetric_class = g.find_node(vocab.symmetric_property);

  for (const Triple& t : triples) {
    if (t.predicate == schema.sub_class_of) {
      schema.subclass_edges.emplace(t.subject, t.object);
    } else if (t.predicate == schema.sub_property_of) {
      schema.subproperty_edges.emplace(as_predicate(t.subject), as_predicate(t.object));
    } else if (t.predicate == schema.inverse_of) {
      PredicateId a = as_predicate(t.subject);
      PredicateId b = as_predicate(t.object);
      if (a == b)
        schema.symmetric_predicates.insert(a);
      else
        schema.inverse_pairs.emplace(std::min(a, b), std::max(a, b));
    } else if (t.predicate == schema.type && symmetric_class && t.object == *symmetric_class) {
      schema.symmetric_predicates.insert(as_predicate(t.subject));
    }
  }
  return schema;
}

}  // namespace kgmatch
