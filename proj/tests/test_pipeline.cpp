#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <sys/wait.h>

#include "kgmatch/pipeline.hpp"

using namespace kgmatch;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("kgmatch_test_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig small_config(const fs::path& out) {
  Json j = Json::parse(R"({
    "synthgen": {"num_relationship_clusters": 3, "entities_per_role": [20, 20, 20], "noise_edges": 10},
    "variants": ["g0", "g5"],
    "clusterings": ["c0"],
    "thresholds": [10],
    "algorithms": ["ward", "single", "optics"],
    "gcn": {"layer_dims": [8, 8, 4], "num_bases": 2},
    "train": {"max_epochs": 6},
    "seed": 5
  })");
  j["out"] = out.string();
  return run_config_from_json(j);
}

// Relative path -> contents of every regular file under root except the manifest.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).string();
    if (rel == "manifest.json") continue;
    out[rel] = read_file(e.path().string());
  }
  return out;
}

Json manifest(const fs::path& root) { return Json::parse(read_file((root / "manifest.json").string())); }

std::map<std::string, std::string> cell_status(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& c : manifest(root).at("cells")) out[c.at("cell").get<std::string>()] = c.at("status").get<std::string>();
  return out;
}

// One completed run shared by the tests that only read it.
const fs::path& completed_run() {
  static const fs::path root = [] {
    fs::path p = scratch("full");
    REQUIRE(cmd_pipeline(small_config(p), {2, false}) == kExitOk);
    return p;
  }();
  return root;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("config parsing") {
  auto c = small_config("run_dir");
  CHECK(c.variants == std::vector<VariantTag>{VariantTag::G0, VariantTag::G5});
  CHECK(c.gcn.layer_dims == std::vector<Eigen::Index>{8, 8, 4});
  CHECK(c.train.max_epochs == 6);
  CHECK(c.synthgen->num_relationship_clusters == 3);
  CHECK(c.seed == 5);
  CHECK(to_json(run_config_from_json(to_json(c))) == to_json(c));

  Json j = to_json(c);
  j["colour"] = "blue";
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j = to_json(c);
  j["train"]["momentum"] = 0.9;
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j = to_json(c);
  j["variants"] = Json::array();
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j = to_json(c);
  j["variants"] = {"g9"};
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j = to_json(c);
  j["input"] = "graph.nt";
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j = to_json(c);
  j["thresholds"] = "ten";
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
}

TEST_CASE("derived seeds differ per cell and master seed") {
  const auto a = derive_seed(1, derive_seed_label(ClusteringId::C0, VariantTag::G0, 1));
  CHECK(a == derive_seed(1, derive_seed_label(ClusteringId::C0, VariantTag::G0, 1)));
  CHECK(a != derive_seed(1, derive_seed_label(ClusteringId::C0, VariantTag::G0, 2)));
  CHECK(a != derive_seed(1, derive_seed_label(ClusteringId::C0, VariantTag::G5, 1)));
  CHECK(a != derive_seed(2, derive_seed_label(ClusteringId::C0, VariantTag::G0, 1)));
}

TEST_CASE("dry run writes only the manifest") {
  const fs::path out = scratch("dry");
  CHECK(cmd_pipeline(small_config(out), {1, true}) == kExitOk);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(out)) files += e.is_regular_file();
  CHECK(files == 1);
  auto m = manifest(out);
  CHECK(m.at("dry_run") == true);
  CHECK(m.at("cells").size() == 10);
  for (const auto& c : m.at("cells")) CHECK(c.at("status") == "planned");
  fs::remove_all(out);
}

TEST_CASE("results tree shape") {
  const fs::path& root = completed_run();
  for (const char* variant : {"g0", "g5"}) {
    CHECK(fs::exists(root / "variants" / variant / "graph.nt"));
    CHECK(fs::exists(root / "variants" / variant / "report.json"));
    for (int f = 1; f <= 5; ++f) {
      const fs::path cell = root / "cells" / (std::string("c0_") + variant) / ("fold" + std::to_string(f));
      for (const char* file : {"cell.json", "metrics.json", "embeddings.csv", "loss_history.csv", "checkpoint.json",
                               "distances.csv", "distance_summary.csv"})
        CHECK(fs::exists(cell / file));
      for (const char* alg : {"ward", "single", "optics"})
        CHECK(fs::exists(cell / "assignments" / (std::string(alg) + "_t10.csv")));
      auto metrics = Json::parse(read_file((cell / "metrics.json").string()));
      CHECK(metrics.at("evaluations").size() == 3);
    }
    auto agg = Json::parse(read_file((root / "results" / (std::string("c0_") + variant) / "metrics.json").string()));
    CHECK(agg.at("rows").size() == 3);
  }
  CHECK(fs::exists(root / "gold" / "c0.json"));
  CHECK(csv_rows(read_file((root / "report.csv").string())).size() == 2 * 3 * 3);
  for (const auto& [cell, status] : cell_status(root)) CHECK(status == "done");
}

TEST_CASE("saturation reports agree with the written graphs") {
  const fs::path& root = completed_run();
  auto config = small_config(root);
  const SynthOutput synth = generate(*config.synthgen);
  CandidateRule rule;
  rule.prefixes = synth.ledger.candidate_prefixes;
  auto prepared = prepare_input(parse_ntriples_string(synth.ntriples).graph, rule, config.link_vocabulary);

  auto g0 = Json::parse(read_file((root / "variants/g0/report.json").string()));
  CHECK(g0.at("abstract_inverses_added").get<std::size_t>() == prepared.graph.predicates_in_use().size());
  CHECK(g0.at("before").at("predicates").get<std::size_t>() == prepared.graph.predicates_in_use().size());

  for (const char* variant : {"g0", "g5"}) {
    auto report = Json::parse(read_file((root / "variants" / variant / "report.json").string()));
    auto written = graph_stats(read_ntriples_file((root / "variants" / variant / "graph.nt").string()).graph);
    CHECK(report.at("hops_reduced").at("nodes").get<std::size_t>() == written.node_count);
    CHECK(report.at("hops_reduced").at("edges").get<std::size_t>() == written.edge_count);
    CHECK(report.at("hops_reduced").at("predicates").get<std::size_t>() == written.predicate_count);
    CHECK(report.at("after").at("edges").get<std::size_t>() >= written.edge_count);
  }
}

TEST_CASE("reruns are byte-identical") {
  const fs::path& first = completed_run();
  const fs::path second = scratch("rerun");
  REQUIRE(cmd_pipeline(small_config(second), {1, false}) == kExitOk);
  auto a = tree(first), b = tree(second);
  CHECK(a.size() == b.size());
  for (const auto& [path, content] : a) {
    CAPTURE(path);
    REQUIRE(b.count(path) == 1);
    CHECK(b.at(path) == content);
  }
  std::map<std::string, std::string> sums_a, sums_b;
  for (const auto& c : manifest(first).at("cells")) sums_a[c.at("cell")] = c.at("checksum");
  for (const auto& c : manifest(second).at("cells")) sums_b[c.at("cell")] = c.at("checksum");
  CHECK(sums_a == sums_b);
  CHECK(manifest(first).at("artifacts") == manifest(second).at("artifacts"));
  fs::remove_all(second);
}

TEST_CASE("resume recomputes only missing or damaged cells") {
  const fs::path root = scratch("resume");
  const auto config = small_config(root);
  REQUIRE(cmd_pipeline(config, {1, false}) == kExitOk);
  const auto before = tree(root);

  REQUIRE(cmd_pipeline(config, {1, false}) == kExitOk);
  for (const auto& [cell, status] : cell_status(root)) CHECK(status == "skipped");

  fs::remove_all(root / "cells/c0_g5/fold3");
  {
    std::ofstream damaged(root / "cells/c0_g0/fold2/metrics.json", std::ios::app);
    damaged << " ";
  }
  REQUIRE(cmd_pipeline(config, {1, false}) == kExitOk);
  for (const auto& [cell, status] : cell_status(root)) {
    CAPTURE(cell);
    const bool redo = cell == "cells/c0_g5/fold3" || cell == "cells/c0_g0/fold2";
    CHECK(status == (redo ? "done" : "skipped"));
  }
  CHECK(tree(root) == before);
  fs::remove_all(root);
}

TEST_CASE("report best flags match an independent recomputation") {
  auto rows = csv_rows(read_file((completed_run() / "report.csv").string()));
  // Columns: clustering,variant,threshold,algorithm,metric,mean,std,formatted,best_algorithm,best_variant
  std::map<std::string, double> best_alg, best_var;
  for (const auto& r : rows) {
    REQUIRE(r.size() == 10);
    const double mean = std::stod(r[5]);
    const std::string alg_group = r[0] + r[1] + r[2] + r[4], var_group = r[0] + r[3] + r[2] + r[4];
    best_alg[alg_group] = std::max(best_alg.count(alg_group) ? best_alg[alg_group] : -2.0, mean);
    best_var[var_group] = std::max(best_var.count(var_group) ? best_var[var_group] : -2.0, mean);
  }
  std::map<std::string, int> alg_flags, var_flags;
  for (const auto& r : rows) {
    const double mean = std::stod(r[5]);
    const std::string alg_group = r[0] + r[1] + r[2] + r[4], var_group = r[0] + r[3] + r[2] + r[4];
    if (r[8] == "true") {
      ++alg_flags[alg_group];
      CHECK(mean == best_alg[alg_group]);
    }
    if (r[9] == "true") {
      ++var_flags[var_group];
      CHECK(mean == best_var[var_group]);
    }
  }
  CHECK(alg_flags.size() == best_alg.size());
  CHECK(var_flags.size() == best_var.size());
  for (const auto& [g, n] : alg_flags) CHECK(n == 1);
  for (const auto& [g, n] : var_flags) CHECK(n == 1);
}

TEST_CASE("report on a single variant flags every row as best variant") {
  const fs::path root = scratch("single_variant");
  fs::create_directories(root / "results/c0_g0");
  std::ofstream(root / "results/c0_g0/metrics.json") << R"({"clustering":"c0","variant":"g0","rows":[
    {"threshold":10,"algorithm":"single",
     "ACC":{"mean":0.5,"std":0.1,"formatted":"0.50 ± 0.10"},
     "ARI":{"mean":0.2,"std":0.0,"formatted":"0.20 ± 0.00"},
     "NMI":{"mean":0.3,"std":0.0,"formatted":"0.30 ± 0.00"}}]})";
  auto rows = collect_report(root.string());
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.best_algorithm);
    CHECK(r.best_variant);
  }
  fs::remove_all(root / "results");
  CHECK_THROWS_AS(collect_report(root.string()), Error);
  fs::remove_all(root);
}

TEST_CASE("command line exit codes") {
  const char* cli = std::getenv("KGMATCH_CLI");
  if (!cli) {
    MESSAGE("KGMATCH_CLI not set; skipping");
    return;
  }
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"({"synthgen": {}, "learning_rate": 3})";
  Json good = to_json(small_config(dir / "out"));
  std::ofstream(dir / "good.json") << good.dump();
  auto run = [&](const std::string& args) {
    const int status = std::system((std::string(cli) + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run("pipeline --config " + (dir / "bad.json").string()) == kExitConfig);
  CHECK(run("pipeline --config " + (dir / "missing.json").string()) == kExitConfig);
  CHECK(run("--dry-run pipeline --config " + (dir / "good.json").string()) == kExitOk);
  CHECK(fs::exists(dir / "out/manifest.json"));
  CHECK(run("report " + (dir / "empty").string()) == kExitPartial);
  fs::remove_all(dir);
}
