#include "kgmatch/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kgmatch/error.hpp"

namespace kgmatch {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string checksum_file(const std::string& path) { return hex64(fnv1a64(read_file(path))); }

void write_file_atomic(const std::string& path, std::string_view content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json to_json(const GraphStats& s) {
  return {{"nodes", s.node_count}, {"edges", s.edge_count}, {"predicates", s.predicate_count}};
}

Json to_json(const SaturationReport& r) {
  const auto& f = r.variant.flags;
  return {{"variant", to_string(r.variant.tag)},
          {"flags",
           {{"contract_sameas", f.contract_sameas},
            {"inverse_symmetry_semantics", f.inverse_symmetry_semantics},
            {"close_predicates", f.close_predicates},
            {"close_classes", f.close_classes}}},
          {"before", to_json(r.before)},
          {"after", to_json(r.after)},
          {"added_triples", r.added_triples},
          {"merged_nodes", r.merged_nodes},
          {"abstract_inverses_added", r.abstract_inverses_added},
          {"inverse_order", r.inverse_order}};
}

Json to_json(const SynthConfig& c) {
  return {{"num_sources", c.num_sources},
          {"num_relationship_clusters", c.num_relationship_clusters},
          {"cluster_size_min", c.cluster_size_min},
          {"cluster_size_max", c.cluster_size_max},
          {"entities_per_role", c.entities_per_role},
          {"core_per_role", c.core_per_role},
          {"relation_mix", c.relation_mix},
          {"ontology_depth", c.ontology_depth},
          {"sameas_duplicate_rate", c.sameas_duplicate_rate},
          {"noise_edges", c.noise_edges},
          {"strong_keep", c.strong_keep},
          {"weak_keep", c.weak_keep},
          {"extra_link_rate", c.extra_link_rate},
          {"seed", c.seed}};
}

namespace {

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json values = Json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) values.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", std::move(values)}};
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& values = j.at("values");
  if (static_cast<Eigen::Index>(values.size()) != rows * cols) throw ShapeError("matrix value count mismatch");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = values[k++].get<double>();
  return m;
}

}  // namespace

SynthConfig synth_config_from_json(const Json& j) {
  reject_unknown(j,
                 {"num_sources", "num_relationship_clusters", "cluster_size_min", "cluster_size_max",
                  "entities_per_role", "core_per_role", "relation_mix", "ontology_depth", "sameas_duplicate_rate",
                  "noise_edges", "strong_keep", "weak_keep", "extra_link_rate", "seed"},
                 "synthgen");
  SynthConfig c;
  read_opt(j, "num_sources", c.num_sources);
  read_opt(j, "num_relationship_clusters", c.num_relationship_clusters);
  read_opt(j, "cluster_size_min", c.cluster_size_min);
  read_opt(j, "cluster_size_max", c.cluster_size_max);
  read_opt(j, "entities_per_role", c.entities_per_role);
  read_opt(j, "core_per_role", c.core_per_role);
  read_opt(j, "relation_mix", c.relation_mix);
  read_opt(j, "ontology_depth", c.ontology_depth);
  read_opt(j, "sameas_duplicate_rate", c.sameas_duplicate_rate);
  read_opt(j, "noise_edges", c.noise_edges);
  read_opt(j, "strong_keep", c.strong_keep);
  read_opt(j, "weak_keep", c.weak_keep);
  read_opt(j, "extra_link_rate", c.extra_link_rate);
  read_opt(j, "seed", c.seed);
  c.validate();
  return c;
}

Json to_json(const GroundTruthLedger& ledger) {
  Json links = Json::array();
  for (const auto& l : ledger.links)
    links.push_back({{"source", l.source}, {"target", l.target}, {"relation", to_string(l.relation)}});
  Json axioms = Json::array();
  for (const auto& [s, p, o] : ledger.axioms) axioms.push_back({s, p, o});
  return {{"links", std::move(links)},
          {"cluster_labels", ledger.cluster_labels},
          {"duplicates", ledger.duplicates},
          {"axioms", std::move(axioms)},
          {"candidate_prefixes", ledger.candidate_prefixes},
          {"canonical_neighbors", ledger.canonical_neighbors}};
}

GroundTruthLedger ledger_from_json(const Json& j) {
  GroundTruthLedger l;
  for (const auto& link : j.at("links"))
    l.links.push_back({link.at("source").get<std::string>(), link.at("target").get<std::string>(),
                       parse_relation(link.at("relation").get<std::string>())});
  l.cluster_labels = j.at("cluster_labels").get<std::map<std::string, int>>();
  l.duplicates = j.at("duplicates").get<std::map<std::string, std::string>>();
  for (const auto& a : j.at("axioms")) l.axioms.emplace_back(a.at(0), a.at(1), a.at(2));
  l.candidate_prefixes = j.at("candidate_prefixes").get<std::vector<std::string>>();
  l.canonical_neighbors = j.at("canonical_neighbors").get<std::map<std::string, std::vector<std::string>>>();
  return l;
}

Json to_json(const GcnConfig& c) {
  Json acts = Json::array();
  for (auto a : c.activations) acts.push_back(a == Activation::Tanh ? "tanh" : "linear");
  return {{"layer_dims", c.layer_dims},
          {"activations", std::move(acts)},
          {"num_bases", c.num_bases},
          {"normalization", c.normalization == Normalization::NeighborCount ? "neighbor_count" : "none"}};
}

GcnConfig gcn_config_from_json(const Json& j) {
  reject_unknown(j, {"layer_dims", "activations", "num_bases", "normalization"}, "gcn");
  GcnConfig c;
  read_opt(j, "layer_dims", c.layer_dims);
  read_opt(j, "num_bases", c.num_bases);
  if (j.contains("activations")) {
    c.activations.clear();
    for (const auto& a : j.at("activations")) {
      const auto name = a.get<std::string>();
      if (name == "tanh")
        c.activations.push_back(Activation::Tanh);
      else if (name == "linear")
        c.activations.push_back(Activation::Linear);
      else
        throw ConfigError("unknown activation '" + name + "'");
    }
  }
  if (j.contains("normalization")) {
    const auto name = j.at("normalization").get<std::string>();
    if (name == "neighbor_count")
      c.normalization = Normalization::NeighborCount;
    else if (name == "none")
      c.normalization = Normalization::None;
    else
      throw ConfigError("unknown normalization '" + name + "'");
  }
  c.validate();
  return c;
}

Json to_json(const TrainConfig& c) {
  return {{"max_epochs", c.max_epochs},
          {"learning_rate", c.learning_rate},
          {"patience", c.patience},
          {"min_delta", c.min_delta},
          {"seed", c.seed},
          {"initial_temperature", c.initial_temperature},
          {"rho_floor", c.rho_floor},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"min_cluster_size", c.min_cluster_size}};
}

TrainConfig train_config_from_json(const Json& j) {
  reject_unknown(j,
                 {"max_epochs", "learning_rate", "patience", "min_delta", "seed", "initial_temperature", "rho_floor",
                  "beta1", "beta2", "epsilon", "min_cluster_size"},
                 "train");
  TrainConfig c;
  read_opt(j, "max_epochs", c.max_epochs);
  read_opt(j, "learning_rate", c.learning_rate);
  read_opt(j, "patience", c.patience);
  read_opt(j, "min_delta", c.min_delta);
  read_opt(j, "seed", c.seed);
  read_opt(j, "initial_temperature", c.initial_temperature);
  read_opt(j, "rho_floor", c.rho_floor);
  read_opt(j, "beta1", c.beta1);
  read_opt(j, "beta2", c.beta2);
  read_opt(j, "epsilon", c.epsilon);
  read_opt(j, "min_cluster_size", c.min_cluster_size);
  c.validate();
  return c;
}

Json checkpoint_to_json(const GcnConfig& config, const GcnParams<double>& params, const TemperatureParam& temperature,
                        std::uint64_t seed) {
  Json layers = Json::array();
  for (const auto& l : params.layers) {
    Json bases = Json::array();
    for (const auto& v : l.bases) bases.push_back(matrix_json(v));
    layers.push_back({{"input_dim", l.input_dim()},
                      {"output_dim", l.output_dim()},
                      {"relation_count", l.relation_count()},
                      {"num_bases", l.num_bases()},
                      {"bases", std::move(bases)},
                      {"coefficients", matrix_json(l.coefficients)},
                      {"self_weight", matrix_json(l.self_weight)}});
  }
  return {{"format", "kgmatch-checkpoint-1"},
          {"config", to_json(config)},
          {"seed", seed},
          {"rho", temperature.rho},
          {"rho_floor", temperature.floor},
          {"layers", std::move(layers)}};
}

Checkpoint checkpoint_from_json(const Json& j) {
  if (j.value("format", "") != "kgmatch-checkpoint-1") throw Error("not a kgmatch checkpoint");
  Checkpoint c;
  c.config = gcn_config_from_json(j.at("config"));
  c.seed = j.at("seed").get<std::uint64_t>();
  c.temperature.rho = j.at("rho").get<double>();
  c.temperature.floor = j.at("rho_floor").get<double>();
  for (const auto& lj : j.at("layers")) {
    LayerParams<double> l;
    for (const auto& b : lj.at("bases")) l.bases.push_back(matrix_from_json(b));
    l.coefficients = matrix_from_json(lj.at("coefficients"));
    l.self_weight = matrix_from_json(lj.at("self_weight"));
    if (l.input_dim() != lj.at("input_dim").get<Eigen::Index>() ||
        l.output_dim() != lj.at("output_dim").get<Eigen::Index>())
      throw ShapeError("checkpoint layer shape mismatch");
    c.params.layers.push_back(std::move(l));
  }
  return c;
}

Json to_json(const MetricSummary& s) {
  return {{"mean", s.mean}, {"std", s.stddev}, {"formatted", s.formatted()}, {"per_fold", s.per_fold}};
}

Json to_json(const MetricReport& r) { return {{"ACC", to_json(r.acc)}, {"ARI", to_json(r.ari)}, {"NMI", to_json(r.nmi)}}; }

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  // Fields never contain commas or quotes here (IRIs, numbers, names).
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      fields.emplace_back(line.substr(start, comma == std::string_view::npos ? line.size() - start : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::string embeddings_to_csv(const std::vector<std::string>& iris, const Eigen::MatrixXd& vectors) {
  if (static_cast<Eigen::Index>(iris.size()) != vectors.cols()) throw ShapeError("one IRI per embedding column");
  std::string out = "iri";
  for (Eigen::Index r = 0; r < vectors.rows(); ++r) out += ",v" + std::to_string(r);
  out += '\n';
  for (std::size_t i = 0; i < iris.size(); ++i) {
    out += iris[i];
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) out += "," + format_double(vectors(r, static_cast<Eigen::Index>(i)));
    out += '\n';
  }
  return out;
}

std::pair<std::vector<std::string>, Eigen::MatrixXd> embeddings_from_csv(std::string_view text) {
  auto rows = parse_csv(text);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "iri") throw ParseError(1, 1, "embeddings CSV lacks header");
  const auto dim = static_cast<Eigen::Index>(rows[0].size() - 1);
  std::vector<std::string> iris;
  Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(rows.size() - 1));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != dim + 1)
      throw ParseError(i + 1, 1, "embeddings CSV row has wrong width");
    iris.push_back(rows[i][0]);
    for (Eigen::Index r = 0; r < dim; ++r)
      m(r, static_cast<Eigen::Index>(i - 1)) = std::stod(rows[i][static_cast<std::size_t>(r + 1)]);
  }
  return {std::move(iris), std::move(m)};
}

std::string loss_history_to_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,val_loss,T\n";
  for (const auto& e : history)
    out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," + format_double(e.val_loss) + "," +
           format_double(e.temperature) + "\n";
  return out;
}

std::string assignments_to_csv(const std::vector<std::string>& iris, const std::vector<int>& labels) {
  if (iris.size() != labels.size()) throw ShapeError("one label per IRI");
  std::string out = "iri,label\n";
  for (std::size_t i = 0; i < iris.size(); ++i) out += iris[i] + "," + std::to_string(labels[i]) + "\n";
  return out;
}

std::pair<std::vector<std::string>, std::vector<int>> assignments_from_csv(std::string_view text) {
  auto rows = parse_csv(text);
  if (rows.empty() || rows[0] != std::vector<std::string>{"iri", "label"})
    throw ParseError(1, 1, "assignments CSV lacks header");
  std::vector<std::string> iris;
  std::vector<int> labels;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw ParseError(i + 1, 1, "assignments CSV row has wrong width");
    iris.push_back(rows[i][0]);
    labels.push_back(std::stoi(rows[i][1]));
  }
  return {std::move(iris), std::move(labels)};
}

}  // namespace kgmatch
