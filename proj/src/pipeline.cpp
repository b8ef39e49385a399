#include "kgmatch/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include "kgmatch/error.hpp"

namespace kgmatch {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "kgmatch 0.1.0";

std::string join(const std::string& a, const std::string& b) { return (fs::path(a) / b).string(); }

template <typename T, typename Parse>
std::vector<T> parse_list(const Json& j, const char* key, Parse parse) {
  std::vector<T> out;
  if (!j.is_array()) throw ConfigError(std::string("'") + key + "' must be an array");
  for (const auto& v : j) {
    if (!v.is_string()) throw ConfigError(std::string("'") + key + "' entries must be strings");
    try {
      out.push_back(parse(v.template get<std::string>()));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  return out;
}

std::string nmi_mean_name(NmiMean m) {
  switch (m) {
    case NmiMean::Arithmetic:
      return "arithmetic";
    case NmiMean::Geometric:
      return "geometric";
    case NmiMean::Min:
      return "min";
    case NmiMean::Max:
      return "max";
  }
  return "arithmetic";
}

NmiMean parse_nmi_mean(const std::string& s) {
  if (s == "arithmetic") return NmiMean::Arithmetic;
  if (s == "geometric") return NmiMean::Geometric;
  if (s == "min") return NmiMean::Min;
  if (s == "max") return NmiMean::Max;
  throw ConfigError("unknown nmi_mean '" + s + "'");
}

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

std::vector<NodeId> CandidateRule::select(const KnowledgeGraph& g) const {
  std::set<std::string> exact(iris.begin(), iris.end());
  std::vector<NodeId> out;
  for (NodeId n = 0; n < g.node_table_size(); ++n) {
    const std::string& iri = g.node_iri(n);
    bool hit = exact.count(iri) != 0;
    for (const auto& p : prefixes) hit = hit || iri.starts_with(p);
    if (hit) out.push_back(n);
  }
  return out;
}

void RunConfig::validate() const {
  if (input && synthgen) throw ConfigError("config names both an input graph and a synthgen section");
  if (!input && !synthgen) throw ConfigError("config needs an input graph or a synthgen section");
  if (input && candidates.empty()) throw ConfigError("candidate selection rule required with an input graph");
  if (variants.empty()) throw ConfigError("at least one variant required");
  if (clusterings.empty()) throw ConfigError("at least one gold clustering required");
  if (thresholds.empty()) throw ConfigError("at least one size threshold required");
  if (algorithms.empty()) throw ConfigError("at least one clustering algorithm required");
  for (auto t : thresholds)
    if (t == 0) throw ConfigError("thresholds must be positive");
  if (optics_xi <= 0 || optics_xi >= 1) throw ConfigError("optics_xi must be in (0,1)");
  if (out.empty()) throw ConfigError("output directory required");
  gcn.validate();
  train.validate();
}

RunConfig run_config_from_json(const Json& j, const std::string& base_dir) {
  static const std::set<std::string> known = {"input",      "synthgen",    "candidates", "link_predicates",
                                              "variants",   "clusterings", "thresholds", "algorithms",
                                              "hops",       "gcn",         "train",      "optics_xi",
                                              "optics_min_size", "nmi_mean", "seed",     "out"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");

  RunConfig c;
  try {
    if (j.contains("input")) {
      fs::path p = j.at("input").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
      c.input = p.string();
    }
    if (j.contains("synthgen")) c.synthgen = synth_config_from_json(j.at("synthgen"));
    if (j.contains("candidates")) {
      const auto& cj = j.at("candidates");
      for (const auto& [k, v] : cj.items())
        if (k != "prefixes" && k != "iris") throw ConfigError("unknown key '" + k + "' in candidates");
      c.candidates.prefixes = cj.value("prefixes", std::vector<std::string>{});
      c.candidates.iris = cj.value("iris", std::vector<std::string>{});
    }
    if (j.contains("link_predicates")) {
      c.link_vocabulary.clear();
      for (const auto& [iri, rel] : j.at("link_predicates").items())
        c.link_vocabulary[iri] = parse_relation(rel.get<std::string>());
    }
    if (j.contains("variants"))
      c.variants = parse_list<VariantTag>(j.at("variants"), "variants", [](const std::string& s) {
        return parse_variant_tag(s);
      });
    if (j.contains("clusterings"))
      c.clusterings = parse_list<ClusteringId>(j.at("clusterings"), "clusterings", [](const std::string& s) {
        return parse_clustering_id(s);
      });
    if (j.contains("algorithms"))
      c.algorithms = parse_list<ClusterAlgorithm>(j.at("algorithms"), "algorithms", [](const std::string& s) {
        return parse_cluster_algorithm(s);
      });
    if (j.contains("thresholds")) c.thresholds = j.at("thresholds").get<std::vector<std::size_t>>();
    if (j.contains("hops")) c.hops = j.at("hops").get<unsigned>();
    if (j.contains("gcn")) c.gcn = gcn_config_from_json(j.at("gcn"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    if (j.contains("optics_xi")) c.optics_xi = j.at("optics_xi").get<double>();
    if (j.contains("optics_min_size")) {
      const auto s = j.at("optics_min_size").get<std::string>();
      if (s == "threshold")
        c.optics_min_size = OpticsMinSize::Threshold;
      else if (s == "smallest_test_cluster")
        c.optics_min_size = OpticsMinSize::SmallestTestCluster;
      else
        throw ConfigError("unknown optics_min_size '" + s + "'");
    }
    if (j.contains("nmi_mean")) c.nmi_mean = parse_nmi_mean(j.at("nmi_mean").get<std::string>());
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return run_config_from_json(j, fs::path(path).parent_path().string());
}

Json to_json(const RunConfig& c) {
  Json j;
  if (c.input) j["input"] = *c.input;
  if (c.synthgen) j["synthgen"] = to_json(*c.synthgen);
  j["candidates"] = {{"prefixes", c.candidates.prefixes}, {"iris", c.candidates.iris}};
  Json links = Json::object();
  for (const auto& [iri, rel] : c.link_vocabulary) links[iri] = to_string(rel);
  j["link_predicates"] = links;
  Json variants = Json::array(), clusterings = Json::array(), algorithms = Json::array();
  for (auto v : c.variants) variants.push_back(to_string(v));
  for (auto v : c.clusterings) clusterings.push_back(to_string(v));
  for (auto v : c.algorithms) algorithms.push_back(to_string(v));
  j["variants"] = variants;
  j["clusterings"] = clusterings;
  j["thresholds"] = c.thresholds;
  j["algorithms"] = algorithms;
  j["hops"] = c.hops;
  j["gcn"] = to_json(c.gcn);
  j["train"] = to_json(c.train);
  j["optics_xi"] = c.optics_xi;
  j["optics_min_size"] = c.optics_min_size == OpticsMinSize::Threshold ? "threshold" : "smallest_test_cluster";
  j["nmi_mean"] = nmi_mean_name(c.nmi_mean);
  j["seed"] = c.seed;
  j["out"] = c.out;
  return j;
}

// ---------------------------------------------------------------------------
// Stages

PreparedInput prepare_input(const KnowledgeGraph& raw, const CandidateRule& rule, const LinkVocabulary& vocab) {
  PreparedInput p;
  p.candidates = rule.select(raw);
  if (p.candidates.empty()) throw ConfigError("candidate rule selects no nodes");
  StrippedGraph s = strip_alignments(raw, p.candidates, vocab);
  p.graph = std::move(s.graph);
  p.links = std::move(s.links);
  return p;
}

std::size_t GoldRecord::cluster_size_of(const std::string& iri) const {
  auto it = labels.find(iri);
  if (it == labels.end()) throw LookupError("not a candidate: " + iri);
  return cluster_sizes.at(static_cast<std::size_t>(it->second));
}

std::vector<std::string> GoldRecord::train_members(int fold) const {
  if (fold < 1 || fold > kFoldCount) throw LookupError("fold index out of range");
  const int test = fold - 1, val = fold % kFoldCount;
  std::vector<std::string> out;
  for (int k = 0; k < kFoldCount; ++k)
    if (k != test && k != val) out.insert(out.end(), folds[k].begin(), folds[k].end());
  return sorted(std::move(out));
}

const std::vector<std::string>& GoldRecord::validation_members(int fold) const {
  if (fold < 1 || fold > kFoldCount) throw LookupError("fold index out of range");
  return folds[static_cast<std::size_t>(fold % kFoldCount)];
}

const std::vector<std::string>& GoldRecord::test_members(int fold) const {
  if (fold < 1 || fold > kFoldCount) throw LookupError("fold index out of range");
  return folds[static_cast<std::size_t>(fold - 1)];
}

GoldRecord make_gold_record(const PreparedInput& input, ClusteringId id, std::uint64_t seed) {
  const KnowledgeGraph& g = input.graph;
  GoldClustering gc = compute_gold_clustering(input.links, id, input.candidates, g);
  auto sets = assign_folds(gc, seed);
  GoldRecord r;
  r.id = id;
  r.relations = gc.relations;
  r.cluster_sizes = gc.cluster_sizes;
  r.seed = seed;
  for (const auto& [n, label] : gc.labels) r.labels[g.node_iri(n)] = label;
  for (int k = 0; k < kFoldCount; ++k) {
    for (NodeId n : sets[k]) r.folds[k].push_back(g.node_iri(n));
    std::sort(r.folds[k].begin(), r.folds[k].end());
  }
  for (const auto& l : input.links) r.links.push_back({g.node_iri(l.source), g.node_iri(l.target), l.relation});
  return r;
}

Json to_json(const GoldRecord& g) {
  Json relations = Json::array();
  for (auto r : g.relations) relations.push_back(to_string(r));
  Json folds = Json::array();
  for (const auto& f : g.folds) folds.push_back(f);
  Json links = Json::array();
  for (const auto& l : g.links)
    links.push_back({{"source", l.source}, {"target", l.target}, {"relation", to_string(l.relation)}});
  return {{"clustering", to_string(g.id)}, {"relations", relations},     {"seed", g.seed},
          {"labels", g.labels},            {"cluster_sizes", g.cluster_sizes}, {"folds", folds},
          {"links", links}};
}

GoldRecord gold_record_from_json(const Json& j) {
  try {
    GoldRecord g;
    g.id = parse_clustering_id(j.at("clustering").get<std::string>());
    for (const auto& r : j.at("relations")) g.relations.push_back(parse_relation(r.get<std::string>()));
    g.seed = j.at("seed").get<std::uint64_t>();
    g.labels = j.at("labels").get<std::map<std::string, int>>();
    g.cluster_sizes = j.at("cluster_sizes").get<std::vector<std::size_t>>();
    const auto& folds = j.at("folds");
    if (folds.size() != static_cast<std::size_t>(kFoldCount)) throw Error("gold record needs five folds");
    for (int k = 0; k < kFoldCount; ++k) g.folds[k] = folds[k].get<std::vector<std::string>>();
    for (const auto& l : j.at("links"))
      g.links.push_back({l.at("source").get<std::string>(), l.at("target").get<std::string>(),
                         parse_relation(l.at("relation").get<std::string>())});
    for (const auto& [iri, label] : g.labels)
      if (label < 0 || static_cast<std::size_t>(label) >= g.cluster_sizes.size())
        throw Error("gold label out of range for " + iri);
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed gold record: ") + e.what());
  }
}

Eigen::Index VariantArtifact::column_of(const std::string& candidate_iri) const {
  auto it = candidate_alias.find(candidate_iri);
  const std::string& iri = it != candidate_alias.end() ? it->second : candidate_iri;
  auto id = graph.find_node(iri);
  if (!id) throw LookupError("candidate missing from variant graph: " + candidate_iri);
  return static_cast<Eigen::Index>(*id);
}

VariantArtifact saturate_variant(const PreparedInput& input, VariantTag tag, unsigned hops) {
  VariantResult v = build_variant(input.graph, GraphVariant::from_tag(tag));
  std::vector<NodeId> seeds;
  for (NodeId c : input.candidates) seeds.push_back(v.representative[c]);
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  Reduction red = reduce_to_khop(v.graph, seeds, hops);

  VariantArtifact a;
  a.report = v.report;
  a.reduced = graph_stats(red.graph);
  for (NodeId c : input.candidates) {
    const NodeId mapped = red.old_to_new[v.representative[c]];
    a.candidate_alias[input.graph.node_iri(c)] = red.graph.node_iri(mapped);
  }
  a.graph = std::move(red.graph);
  return a;
}

Json variant_report_json(const VariantArtifact& v) {
  Json j = to_json(v.report);
  j["hops_reduced"] = to_json(v.reduced);
  std::size_t aliased = 0;
  for (const auto& [from, to] : v.candidate_alias) aliased += from != to;
  j["candidates"] = v.candidate_alias.size();
  j["candidates_merged"] = aliased;
  return j;
}

Eigen::Index EmbeddingTable::column_of(const std::string& iri) const {
  auto it = std::lower_bound(iris.begin(), iris.end(), iri);
  if (it != iris.end() && *it == iri) return it - iris.begin();
  // Tables read from disk need not be sorted.
  auto lin = std::find(iris.begin(), iris.end(), iri);
  if (lin == iris.end()) throw LookupError("no embedding for " + iri);
  return lin - iris.begin();
}

FoldTraining train_fold(const VariantArtifact& variant, const GoldRecord& gold, int fold, const GcnConfig& gcn,
                        const TrainConfig& train_cfg, const TrainOptions& options) {
  auto batch_of = [&](const std::vector<std::string>& members) {
    SnnBatch b;
    for (const auto& iri : members) {
      if (gold.cluster_size_of(iri) < train_cfg.min_cluster_size) continue;
      b.columns.push_back(variant.column_of(iri));
      b.labels.push_back(gold.labels.at(iri));
    }
    return b;
  };
  FoldTraining out;
  out.result = train(variant.graph, batch_of(gold.train_members(fold)), batch_of(gold.validation_members(fold)), gcn,
                     train_cfg, options);
  const auto& h = out.result.embeddings;
  for (const auto& [iri, label] : gold.labels) out.embeddings.iris.push_back(iri);
  out.embeddings.vectors.resize(h.rows(), static_cast<Eigen::Index>(out.embeddings.iris.size()));
  for (std::size_t i = 0; i < out.embeddings.iris.size(); ++i)
    out.embeddings.vectors.col(static_cast<Eigen::Index>(i)) = h.col(variant.column_of(out.embeddings.iris[i]));
  return out;
}

std::size_t EvalSet::gold_cluster_count() const { return std::set<int>(gold.begin(), gold.end()).size(); }

EvalSet evaluation_set(const GoldRecord& gold, int fold, std::size_t threshold) {
  EvalSet e;
  for (const auto& iri : sorted(gold.test_members(fold))) {
    if (gold.cluster_size_of(iri) < threshold) continue;
    e.iris.push_back(iri);
    e.gold.push_back(gold.labels.at(iri));
  }
  return e;
}

ClusterAssignment cluster_stage(const EmbeddingTable& emb, const EvalSet& eval, ClusterAlgorithm algorithm,
                                std::size_t threshold, double xi, OpticsMinSize min_size) {
  if (eval.iris.empty()) throw Error("no evaluated nodes");
  PointMatrix points(static_cast<Eigen::Index>(eval.iris.size()), emb.vectors.rows());
  for (std::size_t i = 0; i < eval.iris.size(); ++i)
    points.row(static_cast<Eigen::Index>(i)) = emb.vectors.col(emb.column_of(eval.iris[i])).transpose();
  switch (algorithm) {
    case ClusterAlgorithm::Ward:
      return ward_cluster(points, eval.gold_cluster_count());
    case ClusterAlgorithm::Single:
      return single_cluster(points, eval.gold_cluster_count());
    case ClusterAlgorithm::Optics: {
      std::size_t m = threshold;
      if (min_size == OpticsMinSize::SmallestTestCluster) {
        std::map<int, std::size_t> counts;
        for (int l : eval.gold) ++counts[l];
        m = eval.iris.size();
        for (const auto& [l, n] : counts) m = std::min(m, n);
      }
      return optics_cluster(points, std::max<std::size_t>(m, 2), xi);
    }
  }
  throw Error("unknown clustering algorithm");
}

std::vector<DistanceDistribution> distance_stage(const EmbeddingTable& emb, const GoldRecord& gold, int fold,
                                                 std::vector<std::string>* node_iris) {
  std::vector<std::string> iris = sorted(gold.test_members(fold));
  std::map<std::string, NodeId> index;
  for (std::size_t i = 0; i < iris.size(); ++i) index[iris[i]] = static_cast<NodeId>(i);
  std::vector<AlignmentLink> links;
  for (const auto& l : gold.links) {
    auto s = index.find(l.source), t = index.find(l.target);
    if (s != index.end() && t != index.end()) links.push_back({s->second, t->second, l.relation});
  }
  std::vector<NodeId> test(iris.size());
  for (std::size_t i = 0; i < iris.size(); ++i) test[i] = static_cast<NodeId>(i);
  auto out = distance_analysis(emb.vectors, links, test, [&](NodeId n) { return emb.column_of(iris[n]); });
  if (node_iris) *node_iris = std::move(iris);
  return out;
}

std::string distances_to_csv(const std::vector<DistanceDistribution>& dists, const std::vector<std::string>& iris) {
  std::string out = "# distance: euclidean (not squared)\nrelation,source,target,distance\n";
  for (const auto& d : dists)
    for (const auto& p : d.pairs)
      out += to_string(d.relation) + "," + iris.at(p.source) + "," + iris.at(p.target) + "," +
             format_double(p.distance) + "\n";
  return out;
}

std::string distance_summary_to_csv(const std::vector<DistanceDistribution>& dists) {
  std::string out = "# distance: euclidean (not squared)\nrelation,pairs,min,q1,median,q3,max,empty\n";
  for (const auto& d : dists) {
    out += to_string(d.relation) + "," + std::to_string(d.pairs.size());
    if (d.summary)
      for (double v : *d.summary) out += "," + format_double(v);
    else
      out += ",,,,,";
    out += d.empty() ? ",true\n" : ",false\n";
  }
  return out;
}

std::string derive_seed_label(ClusteringId c, VariantTag g, int fold) {
  return to_string(c) + "/" + to_string(g) + "/fold" + std::to_string(fold);
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& label) {
  return fnv1a64(label + "#" + std::to_string(seed));
}

// ---------------------------------------------------------------------------
// Orchestration

std::string CellKey::dir() const {
  return "cells/" + to_string(clustering) + "_" + to_string(variant) + "/fold" + std::to_string(fold);
}

std::vector<CellKey> planned_cells(const RunConfig& c) {
  std::vector<CellKey> cells;
  for (auto cl : c.clusterings)
    for (auto v : c.variants)
      for (int f = 1; f <= kFoldCount; ++f) cells.push_back({cl, v, f});
  return cells;
}

namespace {

struct Inputs {
  PreparedInput prepared;
  std::map<std::string, std::string> checksums;  // relative path -> checksum
};

Inputs load_inputs(const RunConfig& config) {
  Inputs in;
  KnowledgeGraph raw;
  CandidateRule rule = config.candidates;
  std::size_t dropped = 0;
  if (config.input) {
    auto parsed = read_ntriples_file(*config.input);
    raw = std::move(parsed.graph);
    dropped = parsed.literals_dropped;
    in.checksums["input"] = checksum_file(*config.input);
  } else {
    SynthOutput synth = generate(*config.synthgen);
    write_file_atomic(join(config.out, "input/graph.nt"), synth.ntriples);
    write_file_atomic(join(config.out, "input/ledger.json"), dump_json(to_json(synth.ledger)));
    in.checksums["input/graph.nt"] = hex64(fnv1a64(synth.ntriples));
    in.checksums["input/ledger.json"] = checksum_file(join(config.out, "input/ledger.json"));
    if (rule.empty()) rule.prefixes = synth.ledger.candidate_prefixes;
    raw = parse_ntriples_string(synth.ntriples).graph;
  }
  in.prepared = prepare_input(raw, rule, config.link_vocabulary);
  in.prepared.literals_dropped = dropped;
  return in;
}

std::string cell_fingerprint(const RunConfig& config, const CellKey& key, const std::string& gold_sum,
                             const std::string& variant_sum) {
  Json j = to_json(config);
  j.erase("out");
  j["cell"] = key.dir();
  j["gold"] = gold_sum;
  j["variant"] = variant_sum;
  return hex64(fnv1a64(j.dump()));
}

bool cell_is_current(const std::string& cell_dir, const std::string& fingerprint) {
  const std::string meta = join(cell_dir, "cell.json");
  if (!fs::exists(meta)) return false;
  try {
    Json j = Json::parse(read_file(meta));
    if (j.value("status", "") != "done" || j.value("fingerprint", "") != fingerprint) return false;
    for (const auto& [name, sum] : j.at("files").items()) {
      const std::string path = join(cell_dir, name);
      if (!fs::exists(path) || checksum_file(path) != sum.get<std::string>()) return false;
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

struct CellOutcome {
  CellKey key;
  std::string status;  // done, skipped, failed
  std::string error;
  double seconds = 0;
};

void run_cell(const RunConfig& config, const CellKey& key, const VariantArtifact& variant, const GoldRecord& gold,
              const std::string& fingerprint) {
  const std::string dir = join(config.out, key.dir());
  fs::remove_all(dir);
  std::map<std::string, std::string> files;
  auto emit = [&](const std::string& name, const std::string& content) {
    write_file_atomic(join(dir, name), content);
    files[name] = hex64(fnv1a64(content));
  };

  TrainConfig tc = config.train;
  tc.seed = derive_seed(config.seed, derive_seed_label(key.clustering, key.variant, key.fold));
  FoldTraining ft = train_fold(variant, gold, key.fold, config.gcn, tc);
  emit("embeddings.csv", embeddings_to_csv(ft.embeddings.iris, ft.embeddings.vectors));
  emit("loss_history.csv", loss_history_to_csv(ft.result.history));
  emit("checkpoint.json", dump_json(checkpoint_to_json(config.gcn, ft.result.params, ft.result.temperature, tc.seed)));

  Json evaluations = Json::array();
  Json skipped = Json::array();
  for (std::size_t t : config.thresholds) {
    EvalSet eval = evaluation_set(gold, key.fold, t);
    if (eval.iris.empty()) {
      skipped.push_back({{"threshold", t}, {"reason", "no test nodes in gold clusters of this size"}});
      continue;
    }
    for (ClusterAlgorithm alg : config.algorithms) {
      ClusterAssignment a = cluster_stage(ft.embeddings, eval, alg, t, config.optics_xi, config.optics_min_size);
      emit("assignments/" + to_string(alg) + "_t" + std::to_string(t) + ".csv", assignments_to_csv(eval.iris, a.labels));
      evaluations.push_back({{"threshold", t},
                             {"algorithm", to_string(alg)},
                             {"nodes", eval.iris.size()},
                             {"gold_clusters", eval.gold_cluster_count()},
                             {"parameter", a.parameter},
                             {"ACC", accuracy(a.labels, eval.gold)},
                             {"ARI", adjusted_rand_index(a.labels, eval.gold)},
                             {"NMI", normalized_mutual_information(a.labels, eval.gold, config.nmi_mean)}});
    }
  }
  emit("metrics.json", dump_json({{"cell", key.dir()}, {"evaluations", evaluations}, {"skipped", skipped}}));

  std::vector<std::string> iris;
  auto dists = distance_stage(ft.embeddings, gold, key.fold, &iris);
  emit("distances.csv", distances_to_csv(dists, iris));
  emit("distance_summary.csv", distance_summary_to_csv(dists));

  Json meta = {{"cell", key.dir()},
               {"status", "done"},
               {"fingerprint", fingerprint},
               {"train_seed", tc.seed},
               {"epochs_run", ft.result.history.size()},
               {"best_epoch", ft.result.best_epoch},
               {"stopped_early", ft.result.stopped_early},
               {"files", files}};
  write_file_atomic(join(dir, "cell.json"), dump_json(meta));
}

// Cross-fold tables per (clustering, variant); rows need all five folds.
void aggregate(const RunConfig& config, ClusteringId c, VariantTag g) {
  const std::string name = to_string(c) + "_" + to_string(g);
  Json rows = Json::array();
  std::string csv = "threshold,algorithm,ACC,ARI,NMI\n";
  std::vector<Json> fold_metrics;
  for (int f = 1; f <= kFoldCount; ++f) {
    const std::string path = join(config.out, CellKey{c, g, f}.dir() + "/metrics.json");
    fold_metrics.push_back(fs::exists(path) ? Json::parse(read_file(path)) : Json());
  }
  Json incomplete = Json::array();
  for (std::size_t t : config.thresholds) {
    for (ClusterAlgorithm alg : config.algorithms) {
      std::vector<MetricValues> per_fold;
      for (const Json& m : fold_metrics) {
        if (m.is_null()) continue;
        for (const auto& e : m.at("evaluations"))
          if (e.at("threshold").get<std::size_t>() == t && e.at("algorithm").get<std::string>() == to_string(alg))
            per_fold.push_back({e.at("ACC").get<double>(), e.at("ARI").get<double>(), e.at("NMI").get<double>()});
      }
      if (per_fold.size() != static_cast<std::size_t>(kFoldCount)) {
        incomplete.push_back({{"threshold", t}, {"algorithm", to_string(alg)}, {"folds", per_fold.size()}});
        continue;
      }
      MetricReport r = cross_validated_report(per_fold);
      Json row = {{"threshold", t}, {"algorithm", to_string(alg)}};
      const Json metrics = to_json(r);
      for (const auto& [k, v] : metrics.items()) row[k] = v;
      rows.push_back(row);
      csv += std::to_string(t) + "," + to_string(alg) + "," + r.acc.formatted() + "," + r.ari.formatted() + "," +
             r.nmi.formatted() + "\n";
    }
  }
  const std::string dir = join(config.out, "results/" + name);
  write_file_atomic(join(dir, "metrics.json"),
                    dump_json({{"clustering", to_string(c)},
                               {"variant", to_string(g)},
                               {"rows", rows},
                               {"incomplete", incomplete}}));
  write_file_atomic(join(dir, "metrics.csv"), csv);
}

}  // namespace

int cmd_saturate(const RunConfig& config) {
  config.validate();
  Inputs in = load_inputs(config);
  for (VariantTag tag : config.variants) {
    VariantArtifact v = saturate_variant(in.prepared, tag, config.hops);
    const std::string dir = join(config.out, "variants/" + to_string(tag));
    write_file_atomic(join(dir, "graph.nt"), to_ntriples(v.graph));
    write_file_atomic(join(dir, "report.json"), dump_json(variant_report_json(v)));
  }
  return kExitOk;
}

int cmd_pipeline(const RunConfig& config, const PipelineOptions& options) {
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const auto cells = planned_cells(config);
  Json manifest = {{"version", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"config", to_json(config)}};
  if (options.dry_run) {
    Json planned = Json::array();
    for (const auto& c : cells) planned.push_back({{"cell", c.dir()}, {"status", "planned"}});
    manifest["dry_run"] = true;
    manifest["cells"] = planned;
    write_file_atomic(join(config.out, "manifest.json"), dump_json(manifest));
    return kExitOk;
  }

  Json timings = Json::object();
  auto t0 = std::chrono::steady_clock::now();
  Inputs in = load_inputs(config);
  timings["input"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  std::map<ClusteringId, GoldRecord> golds;
  std::map<ClusteringId, std::string> gold_sums;
  for (ClusteringId c : config.clusterings) {
    golds[c] = make_gold_record(in.prepared, c, config.seed);
    const std::string text = dump_json(to_json(golds[c]));
    write_file_atomic(join(config.out, "gold/" + to_string(c) + ".json"), text);
    gold_sums[c] = hex64(fnv1a64(text));
    in.checksums["gold/" + to_string(c) + ".json"] = gold_sums[c];
  }
  timings["gold"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  std::map<VariantTag, VariantArtifact> variants;
  std::map<VariantTag, std::string> variant_sums;
  for (VariantTag g : config.variants) {
    variants[g] = saturate_variant(in.prepared, g, config.hops);
    const std::string dir = "variants/" + to_string(g);
    const std::string text = to_ntriples(variants[g].graph);
    write_file_atomic(join(config.out, dir + "/graph.nt"), text);
    write_file_atomic(join(config.out, dir + "/report.json"), dump_json(variant_report_json(variants[g])));
    variant_sums[g] = hex64(fnv1a64(text));
    in.checksums[dir + "/graph.nt"] = variant_sums[g];
  }
  timings["saturation"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  std::vector<CellOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const CellKey& key = cells[i];
      CellOutcome& out = outcomes[i];
      out.key = key;
      const auto tc = std::chrono::steady_clock::now();
      const std::string fp = cell_fingerprint(config, key, gold_sums.at(key.clustering), variant_sums.at(key.variant));
      try {
        if (cell_is_current(join(config.out, key.dir()), fp)) {
          out.status = "skipped";
        } else {
          run_cell(config, key, variants.at(key.variant), golds.at(key.clustering), fp);
          out.status = "done";
        }
      } catch (const std::exception& e) {
        out.status = "failed";
        out.error = e.what();
        std::error_code ec;
        fs::remove_all(join(config.out, key.dir()), ec);
      }
      out.seconds = seconds_since(tc);
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  timings["cells"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  for (ClusteringId c : config.clusterings)
    for (VariantTag g : config.variants) aggregate(config, c, g);
  bool reported = false;
  try {
    auto rows = collect_report(config.out);
    write_file_atomic(join(config.out, "report.csv"), report_to_csv(rows));
    write_file_atomic(join(config.out, "report.json"), dump_json(report_to_json(rows)));
    reported = true;
  } catch (const Error&) {
  }
  timings["report"] = seconds_since(t0);
  timings["total"] = seconds_since(t_start);

  bool failed = false;
  Json cell_json = Json::array();
  for (const auto& o : outcomes) {
    Json e = {{"cell", o.key.dir()}, {"status", o.status}, {"seconds", o.seconds}};
    if (!o.error.empty()) e["error"] = o.error;
    const std::string meta = join(config.out, o.key.dir() + "/cell.json");
    if (fs::exists(meta)) e["checksum"] = checksum_file(meta);
    failed = failed || o.status == "failed";
    cell_json.push_back(e);
  }
  manifest["artifacts"] = in.checksums;
  manifest["literals_dropped"] = in.prepared.literals_dropped;
  manifest["cells"] = cell_json;
  manifest["report_written"] = reported;
  manifest["timings_seconds"] = timings;
  write_file_atomic(join(config.out, "manifest.json"), dump_json(manifest));
  return failed ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// Report

std::vector<ReportRow> collect_report(const std::string& root) {
  const fs::path results = fs::path(root) / "results";
  std::vector<fs::path> files;
  if (fs::is_directory(results))
    for (const auto& entry : fs::directory_iterator(results))
      if (fs::exists(entry.path() / "metrics.json")) files.push_back(entry.path() / "metrics.json");
  std::sort(files.begin(), files.end());

  std::vector<ReportRow> rows;
  for (const auto& f : files) {
    Json j = Json::parse(read_file(f.string()));
    for (const auto& r : j.at("rows")) {
      for (const char* metric : {"ACC", "ARI", "NMI"}) {
        ReportRow row;
        row.clustering = j.at("clustering").get<std::string>();
        row.variant = j.at("variant").get<std::string>();
        row.threshold = r.at("threshold").get<std::size_t>();
        row.algorithm = r.at("algorithm").get<std::string>();
        row.metric = metric;
        row.mean = r.at(metric).at("mean").get<double>();
        row.stddev = r.at(metric).at("std").get<double>();
        row.formatted = r.at(metric).at("formatted").get<std::string>();
        rows.push_back(std::move(row));
      }
    }
  }
  if (rows.empty()) throw Error("no completed results under " + root);

  // Best flags: highest mean in the group; the first row of the group wins ties.
  auto flag = [&](auto group_key, bool ReportRow::*field) {
    std::map<decltype(group_key(rows[0])), std::size_t> best;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto [it, fresh] = best.emplace(group_key(rows[i]), i);
      if (!fresh && rows[i].mean > rows[it->second].mean) it->second = i;
    }
    for (const auto& [k, i] : best) rows[i].*field = true;
  };
  flag([](const ReportRow& r) { return std::make_tuple(r.clustering, r.variant, r.threshold, r.metric); },
       &ReportRow::best_algorithm);
  flag([](const ReportRow& r) { return std::make_tuple(r.clustering, r.algorithm, r.threshold, r.metric); },
       &ReportRow::best_variant);
  return rows;
}

std::string report_to_csv(const std::vector<ReportRow>& rows) {
  std::string out = "clustering,variant,threshold,algorithm,metric,mean,std,formatted,best_algorithm,best_variant\n";
  for (const auto& r : rows)
    out += r.clustering + "," + r.variant + "," + std::to_string(r.threshold) + "," + r.algorithm + "," + r.metric +
           "," + format_double(r.mean) + "," + format_double(r.stddev) + "," + r.formatted + "," +
           (r.best_algorithm ? "true" : "false") + "," + (r.best_variant ? "true" : "false") + "\n";
  return out;
}

Json report_to_json(const std::vector<ReportRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows)
    out.push_back({{"clustering", r.clustering},
                   {"variant", r.variant},
                   {"threshold", r.threshold},
                   {"algorithm", r.algorithm},
                   {"metric", r.metric},
                   {"mean", r.mean},
                   {"std", r.stddev},
                   {"formatted", r.formatted},
                   {"best_algorithm", r.best_algorithm},
                   {"best_variant", r.best_variant}});
  return out;
}

int cmd_report(const std::string& root) {
  auto rows = collect_report(root);
  write_file_atomic(join(root, "report.csv"), report_to_csv(rows));
  write_file_atomic(join(root, "report.json"), dump_json(report_to_json(rows)));
  return kExitOk;
}

}  // namespace kgmatch
