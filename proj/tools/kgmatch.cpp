// Command-line front end: one subcommand per pipeline stage plus the full run.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "kgmatch/error.hpp"
#include "kgmatch/pipeline.hpp"

using namespace kgmatch;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool dry_run = false;
  unsigned jobs = 1;
};

RunConfig resolve_config(const std::string& path, const Globals& g) {
  RunConfig c;
  if (!path.empty()) {
    c = load_run_config(path);
  } else {
    c.synthgen = SynthConfig{};
  }
  if (g.seed) c.seed = *g.seed;
  if (g.out) c.out = *g.out;
  c.validate();
  return c;
}

std::string out_dir(const Globals& g, const std::string& fallback = ".") { return g.out.value_or(fallback); }

GoldRecord load_gold(const std::string& path) { return gold_record_from_json(Json::parse(read_file(path))); }

EmbeddingTable load_embeddings(const std::string& path) {
  auto [iris, vectors] = embeddings_from_csv(read_file(path));
  return {std::move(iris), std::move(vectors)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kgmatch: knowledge graph node matching with relational GCN embeddings"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_value = 0;
  std::string out_value;
  auto* seed_opt = app.add_option("--seed", seed_value, "Master seed (overrides the config)");
  auto* out_opt = app.add_option("--out", out_value, "Output directory (overrides the config)");
  app.add_flag("--dry-run", g.dry_run, "Plan the run and write the manifest without computing");
  app.add_option("--jobs", g.jobs, "Worker threads for pipeline cells")->check(CLI::PositiveNumber);
  app.fallthrough();

  std::string config_path;

  auto* synth = app.add_subcommand("synthgen", "Generate a synthetic graph and its ground-truth ledger");
  synth->add_option("--config", config_path, "JSON file with synthgen settings");

  auto* saturate = app.add_subcommand("saturate", "Build reduced graph variants with saturation reports");
  saturate->add_option("--config", config_path, "Run config (JSON)");

  auto* gold_cmd = app.add_subcommand("gold-clusters", "Compute gold clusterings and fold splits");
  gold_cmd->add_option("--config", config_path, "Run config (JSON)");

  std::string graph_path, gold_path, emb_path, assign_path, algorithm = "single";
  int fold = 1;
  std::size_t threshold = 10;

  auto* train_cmd = app.add_subcommand("train", "Train the encoder on one fold of a variant graph");
  train_cmd->add_option("--graph", graph_path, "Variant graph (N-Triples)")->required();
  train_cmd->add_option("--gold", gold_path, "Gold record (JSON)")->required();
  train_cmd->add_option("--fold", fold, "Fold index 1..5")->check(CLI::Range(1, 5));
  train_cmd->add_option("--config", config_path, "Run config supplying gcn and train settings");

  auto* cluster_cmd = app.add_subcommand("cluster", "Cluster the evaluated nodes of one fold");
  cluster_cmd->add_option("--embeddings", emb_path, "Embeddings CSV")->required();
  cluster_cmd->add_option("--gold", gold_path, "Gold record (JSON)")->required();
  cluster_cmd->add_option("--fold", fold, "Fold index 1..5")->check(CLI::Range(1, 5));
  cluster_cmd->add_option("--threshold", threshold, "Minimum gold cluster size")->check(CLI::PositiveNumber);
  cluster_cmd->add_option("--algorithm", algorithm, "ward, single or optics");

  auto* eval_cmd = app.add_subcommand("evaluate", "Score an assignment against the gold clustering");
  eval_cmd->add_option("--assignments", assign_path, "Assignments CSV")->required();
  eval_cmd->add_option("--gold", gold_path, "Gold record (JSON)")->required();

  auto* dist_cmd = app.add_subcommand("distances", "Distances between linked test nodes, per relation");
  dist_cmd->add_option("--embeddings", emb_path, "Embeddings CSV")->required();
  dist_cmd->add_option("--gold", gold_path, "Gold record (JSON)")->required();
  dist_cmd->add_option("--fold", fold, "Fold index 1..5")->check(CLI::Range(1, 5));

  auto* pipe = app.add_subcommand("pipeline", "Run every (clustering, variant, fold) cell");
  pipe->add_option("--config", config_path, "Run config (JSON); default: synthgen defaults");

  std::string report_root;
  auto* report = app.add_subcommand("report", "Consolidate cross-validated tables of a results tree");
  report->add_option("root", report_root, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }
  if (seed_opt->count()) g.seed = seed_value;
  if (out_opt->count()) g.out = out_value;

  try {
    if (*synth) {
      SynthConfig sc;
      if (!config_path.empty()) sc = synth_config_from_json(Json::parse(read_file(config_path)));
      if (g.seed) sc.seed = *g.seed;
      if (g.dry_run) return kExitOk;
      SynthOutput s = generate(sc);
      const std::string dir = out_dir(g);
      write_file_atomic((fs::path(dir) / "graph.nt").string(), s.ntriples);
      write_file_atomic((fs::path(dir) / "ledger.json").string(), dump_json(to_json(s.ledger)));
      return kExitOk;
    }
    if (*saturate) {
      RunConfig c = resolve_config(config_path, g);
      if (g.dry_run) return kExitOk;
      return cmd_saturate(c);
    }
    if (*gold_cmd) {
      RunConfig c = resolve_config(config_path, g);
      if (g.dry_run) return kExitOk;
      KnowledgeGraph raw;
      CandidateRule rule = c.candidates;
      if (c.input) {
        raw = read_ntriples_file(*c.input).graph;
      } else {
        SynthOutput s = generate(*c.synthgen);
        if (rule.empty()) rule.prefixes = s.ledger.candidate_prefixes;
        raw = parse_ntriples_string(s.ntriples).graph;
      }
      PreparedInput in = prepare_input(raw, rule, c.link_vocabulary);
      for (ClusteringId id : c.clusterings)
        write_file_atomic((fs::path(c.out) / "gold" / (to_string(id) + ".json")).string(),
                          dump_json(to_json(make_gold_record(in, id, c.seed))));
      return kExitOk;
    }
    if (*train_cmd) {
      RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
      if (g.dry_run) return kExitOk;
      GoldRecord gold = load_gold(gold_path);
      VariantArtifact v;
      v.graph = read_ntriples_file(graph_path).graph;
      TrainConfig tc = c.train;
      tc.seed = derive_seed(g.seed.value_or(c.seed), "train/fold" + std::to_string(fold));
      FoldTraining ft = train_fold(v, gold, fold, c.gcn, tc);
      const fs::path dir = out_dir(g);
      write_file_atomic((dir / "embeddings.csv").string(), embeddings_to_csv(ft.embeddings.iris, ft.embeddings.vectors));
      write_file_atomic((dir / "loss_history.csv").string(), loss_history_to_csv(ft.result.history));
      write_file_atomic((dir / "checkpoint.json").string(),
                        dump_json(checkpoint_to_json(c.gcn, ft.result.params, ft.result.temperature, tc.seed)));
      return kExitOk;
    }
    if (*cluster_cmd) {
      if (g.dry_run) return kExitOk;
      GoldRecord gold = load_gold(gold_path);
      EmbeddingTable emb = load_embeddings(emb_path);
      EvalSet eval = evaluation_set(gold, fold, threshold);
      ClusterAssignment a = cluster_stage(emb, eval, parse_cluster_algorithm(algorithm), threshold);
      write_file_atomic((fs::path(out_dir(g)) / "assignments.csv").string(), assignments_to_csv(eval.iris, a.labels));
      return kExitOk;
    }
    if (*eval_cmd) {
      if (g.dry_run) return kExitOk;
      GoldRecord gold = load_gold(gold_path);
      auto [iris, pred] = assignments_from_csv(read_file(assign_path));
      Labels truth;
      for (const auto& iri : iris) {
        auto it = gold.labels.find(iri);
        if (it == gold.labels.end()) throw LookupError("assigned node is not a candidate: " + iri);
        truth.push_back(it->second);
      }
      MetricValues m = evaluate_labels(pred, truth);
      Json j = {{"nodes", iris.size()}, {"ACC", m.acc}, {"ARI", m.ari}, {"NMI", m.nmi}};
      std::cout << dump_json(j);
      if (g.out) write_file_atomic((fs::path(*g.out) / "metrics.json").string(), dump_json(j));
      return kExitOk;
    }
    if (*dist_cmd) {
      if (g.dry_run) return kExitOk;
      GoldRecord gold = load_gold(gold_path);
      EmbeddingTable emb = load_embeddings(emb_path);
      std::vector<std::string> iris;
      auto dists = distance_stage(emb, gold, fold, &iris);
      const fs::path dir = out_dir(g);
      write_file_atomic((dir / "distances.csv").string(), distances_to_csv(dists, iris));
      write_file_atomic((dir / "distance_summary.csv").string(), distance_summary_to_csv(dists));
      return kExitOk;
    }
    if (*pipe) {
      RunConfig c = resolve_config(config_path, g);
      return cmd_pipeline(c, {g.jobs, g.dry_run});
    }
    if (*report) {
      if (g.dry_run) return kExitOk;
      return cmd_report(report_root);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitOk;
}
