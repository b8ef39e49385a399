#include "kgmatch/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "kgmatch/graph_store.hpp"
#include "kgmatch/random.hpp"

namespace kgmatch {

namespace {

const std::array<const char*, 3> kRoles = {"drug", "gene", "phenotype"};
const std::array<const char*, 3> kRoleClasses = {"Drug", "Gene", "Phenotype"};
const std::array<const char*, 3> kRolePredicates = {"hasDrug", "hasGene", "hasPhenotype"};

std::string vocab(const std::string& local) { return std::string(kSynthBase) + "vocab/" + local; }
std::string onto(const std::string& local) { return std::string(kSynthBase) + "onto/" + local; }
std::string source_iri(std::size_t source, const std::string& local) {
  return std::string(kSynthBase) + "src" + std::to_string(source) + "/" + local;
}

bool is_strong(AlignmentRelation r) { return r == AlignmentRelation::SameAs || r == AlignmentRelation::CloseMatch; }

struct Entity {
  std::size_t role;
  std::size_t index;
  auto operator<=>(const Entity&) const = default;
};

}  // namespace

void SynthConfig::validate() const {
  if (num_sources == 0) throw ConfigError("num_sources must be positive");
  if (num_relationship_clusters == 0) throw ConfigError("num_relationship_clusters must be positive");
  if (cluster_size_min < 1 || cluster_size_max < cluster_size_min) throw ConfigError("invalid cluster size range");
  if (core_per_role == 0) throw ConfigError("core_per_role must be positive");
  double total = 0;
  for (double p : relation_mix) {
    if (p < 0) throw ConfigError("relation_mix entries must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("relation_mix must sum to 1");
  if (sameas_duplicate_rate < 0 || sameas_duplicate_rate > 1) throw ConfigError("sameas_duplicate_rate must be in [0,1]");
  if (extra_link_rate < 0 || extra_link_rate > 1) throw ConfigError("extra_link_rate must be in [0,1]");
  if (strong_keep < 0 || strong_keep > 1 || weak_keep < 0 || weak_keep > 1)
    throw ConfigError("keep probabilities must be in [0,1]");
  for (std::size_t r = 0; r < 3; ++r) {
    if (entities_per_role[r] < num_relationship_clusters * core_per_role)
      throw ConfigError(std::string("infeasible config: ") + std::to_string(num_relationship_clusters * core_per_role) +
                        " core " + kRoles[r] + " entities needed, " + std::to_string(entities_per_role[r]) +
                        " available");
  }
}

SynthOutput generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  KnowledgeGraph g;
  SynthOutput out;
  GroundTruthLedger& ledger = out.ledger;
  Vocabulary rdf;

  auto axiom = [&](const std::string& s, const std::string& p, const std::string& o) {
    g.add(s, p, o);
    ledger.axioms.emplace_back(s, p, o);
  };

  // Predicate hierarchy: has<Role> <= hasComponent <= involves.
  for (const char* p : kRolePredicates) axiom(vocab(p), rdf.sub_property_of, vocab("hasComponent"));
  axiom(vocab("hasComponent"), rdf.sub_property_of, vocab("involves"));
  axiom(vocab("targets"), rdf.inverse_of, vocab("targetedBy"));
  axiom(vocab("interactsWith"), rdf.type, rdf.symmetric_property);

  // Binary class tree of the configured depth under each role root.
  std::array<std::vector<std::string>, 3> leaves;
  for (std::size_t r = 0; r < 3; ++r) {
    std::vector<std::string> level = {onto(kRoleClasses[r])};
    for (std::size_t depth = 1; depth <= config.ontology_depth; ++depth) {
      std::vector<std::string> next;
      for (std::size_t k = 0; k < level.size() * 2; ++k) {
        std::string cls = onto(std::string(kRoleClasses[r]) + "/L" + std::to_string(depth) + "_" + std::to_string(k));
        axiom(cls, rdf.sub_class_of, level[k / 2]);
        next.push_back(cls);
      }
      level = std::move(next);
    }
    leaves[r] = level;
  }

  // Component entities with cross-source duplicates.
  std::map<Entity, std::map<std::size_t, std::string>> iri_in_source;
  std::map<Entity, std::string> home_iri;
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t e = 0; e < config.entities_per_role[r]; ++e) {
      Entity ent{r, e};
      const std::size_t home = e % config.num_sources;
      const std::string local = std::string(kRoles[r]) + "/" + std::to_string(e);
      const std::string iri = source_iri(home, local);
      const std::string& cls = leaves[r][rng.index(leaves[r].size())];
      g.add(iri, rdf.type, cls);
      home_iri[ent] = iri;
      iri_in_source[ent][home] = iri;
      for (std::size_t s = 0; s < config.num_sources; ++s) {
        if (s == home || !rng.bernoulli(config.sameas_duplicate_rate)) continue;
        const std::string dup = source_iri(s, local);
        g.add(dup, rdf.same_as, iri);
        g.add(dup, rdf.type, cls);
        iri_in_source[ent][s] = dup;
        ledger.duplicates[dup] = iri;
      }
    }
  }
  auto resolve = [&](const Entity& e, std::size_t source) {
    const auto& in = iri_in_source.at(e);
    auto it = in.find(source);
    return it != in.end() ? it->second : home_iri.at(e);
  };
  auto random_source_iri = [&](const Entity& e) {
    const auto& in = iri_in_source.at(e);
    auto it = in.begin();
    std::advance(it, static_cast<long>(rng.index(in.size())));
    return it->second;
  };

  // Background: drug-gene targeting stated from either side, gene interactions
  // stated in one direction only, and random gene-phenotype associations.
  const std::size_t n_drugs = config.entities_per_role[0];
  const std::size_t n_genes = config.entities_per_role[1];
  const std::size_t n_phen = config.entities_per_role[2];
  for (std::size_t d = 0; d < n_drugs; ++d) {
    Entity gene{1, rng.index(n_genes)};
    if (rng.bernoulli(0.5))
      g.add(random_source_iri({0, d}), vocab("targets"), random_source_iri(gene));
    else
      g.add(random_source_iri(gene), vocab("targetedBy"), random_source_iri({0, d}));
  }
  for (std::size_t k = 0; k < n_genes / 2; ++k) {
    Entity a{1, rng.index(n_genes)}, b{1, rng.index(n_genes)};
    if (a != b) g.add(random_source_iri(a), vocab("interactsWith"), random_source_iri(b));
  }
  for (std::size_t k = 0; k < config.noise_edges; ++k) {
    Entity a{1, rng.index(n_genes)}, b{2, rng.index(n_phen)};
    g.add(random_source_iri(a), vocab("associatedWith"), random_source_iri(b));
  }

  // Disjoint cluster cores.
  std::array<std::vector<std::size_t>, 3> pools;
  for (std::size_t r = 0; r < 3; ++r) {
    pools[r].resize(config.entities_per_role[r]);
    std::iota(pools[r].begin(), pools[r].end(), 0);
    rng.shuffle(pools[r]);
  }
  auto random_entity = [&]() {
    const std::size_t r = rng.index(3);
    return Entity{r, rng.index(config.entities_per_role[r])};
  };

  for (std::size_t s = 0; s < config.num_sources; ++s) ledger.candidate_prefixes.push_back(source_iri(s, "pgr/"));
  const std::string pgr_class = onto("PgxRelationship");

  // Planted pairs whose relation is settled after all clusters exist.
  struct Pending {
    double overlap;
    std::size_t order;
    std::string later, earlier;
  };
  std::vector<Pending> pool;
  std::vector<std::pair<std::size_t, PlantedLink>> planted;  // (order, link)
  std::size_t order = 0;

  for (std::size_t c = 0; c < config.num_relationship_clusters; ++c) {
    std::set<Entity> core;
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t k = 0; k < config.core_per_role; ++k) core.insert({r, pools[r][c * config.core_per_role + k]});

    const std::size_t size =
        config.cluster_size_min + rng.index(config.cluster_size_max - config.cluster_size_min + 1);
    std::vector<std::set<Entity>> members;
    std::vector<std::string> iris;
    std::vector<std::size_t> parent_of(size, 0);
    for (std::size_t m = 0; m < size; ++m) {
      const std::size_t source = m % config.num_sources;
      const std::string iri = source_iri(source, "pgr/" + std::to_string(c) + "_" + std::to_string(m));
      std::set<Entity> nbrs;
      if (m == 0) {
        nbrs = core;
      } else {
        const std::size_t parent = rng.index(m);
        parent_of[m] = parent;
        const double u = rng.uniform01();
        std::size_t pick = 0;
        double acc = config.relation_mix[0];
        while (pick + 1 < kAllRelations.size() && u >= acc) acc += config.relation_mix[++pick];
        const AlignmentRelation rel = kAllRelations[pick];
        if (is_strong(rel)) {
          for (const Entity& e : members[parent])
            if (rng.bernoulli(config.strong_keep)) nbrs.insert(e);
        } else if (rel == AlignmentRelation::BroadMatch) {
          // Strict superset of the broader relationship's components.
          nbrs = members[parent];
          for (int tries = 0; tries < 100; ++tries)
            if (nbrs.insert(random_entity()).second) break;
        } else {
          for (const Entity& e : core)
            if (rng.bernoulli(config.weak_keep)) nbrs.insert(e);
          nbrs.insert(random_entity());
        }
        if (nbrs.empty()) {
          auto it = core.begin();
          std::advance(it, static_cast<long>(rng.index(core.size())));
          nbrs.insert(*it);
        }
      }
      g.add(iri, rdf.type, pgr_class);
      auto& canon = ledger.canonical_neighbors[iri];
      for (const Entity& e : nbrs) {
        g.add(iri, vocab(kRolePredicates[e.role]), resolve(e, source));
        canon.push_back(home_iri.at(e));
      }
      ledger.cluster_labels[iri] = static_cast<int>(c);
      members.push_back(std::move(nbrs));
      iris.push_back(iri);
    }

    // Tree edges keep every cluster connected; extra pairs densify the links.
    for (std::size_t m = 1; m < size; ++m) {
      for (std::size_t q = 0; q < m; ++q) {
        if (q != parent_of[m] && !rng.bernoulli(config.extra_link_rate)) continue;
        const auto& a = members[m];
        const auto& b = members[q];
        const bool a_sup = a.size() > b.size() && std::includes(a.begin(), a.end(), b.begin(), b.end());
        const bool b_sup = b.size() > a.size() && std::includes(b.begin(), b.end(), a.begin(), a.end());
        if (a_sup || b_sup) {
          // The node with more components is the narrower relationship.
          planted.push_back({order++, {a_sup ? iris[m] : iris[q], a_sup ? iris[q] : iris[m],
                                       AlignmentRelation::BroadMatch}});
          continue;
        }
        std::size_t shared = 0;
        for (const Entity& e : a) shared += b.count(e);
        const double jaccard = static_cast<double>(shared) / static_cast<double>(a.size() + b.size() - shared);
        pool.push_back({jaccard, order++, iris[m], iris[q]});
      }
    }
  }

  // Symmetric relations go to pairs by decreasing neighbor overlap, in the
  // proportions of relation_mix, so stronger links share more neighbors.
  std::stable_sort(pool.begin(), pool.end(), [](const Pending& x, const Pending& y) { return x.overlap > y.overlap; });
  double symmetric_total = 0;
  for (std::size_t k = 0; k < 4; ++k) symmetric_total += config.relation_mix[k];
  std::size_t rank = 0;
  for (const Pending& p : pool) {
    AlignmentRelation rel = AlignmentRelation::Related;
    if (symmetric_total > 0) {
      double cum = 0;
      for (std::size_t k = 0; k < 4; ++k) {
        if (config.relation_mix[k] == 0) continue;
        cum += config.relation_mix[k] / symmetric_total;
        rel = kAllRelations[k];
        if (static_cast<double>(rank) < std::round(cum * static_cast<double>(pool.size()))) break;
      }
    }
    planted.push_back({p.order, {p.later, p.earlier, rel}});
    ++rank;
  }
  std::sort(planted.begin(), planted.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (auto& [o, link] : planted) {
    g.add(link.source, default_relation_iri(link.relation), link.target);
    ledger.links.push_back(std::move(link));
  }

  out.ntriples = to_ntriples(g);
  return out;
}

}  // namespace kgmatch
