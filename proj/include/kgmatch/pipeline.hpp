#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgmatch/alignment.hpp"
#include "kgmatch/clustering.hpp"
#include "kgmatch/evaluation.hpp"
#include "kgmatch/gcn.hpp"
#include "kgmatch/io.hpp"
#include "kgmatch/saturation.hpp"
#include "kgmatch/synthgen.hpp"
#include "kgmatch/training.hpp"

namespace kgmatch {

// Match candidates: nodes whose IRI starts with one of `prefixes` or appears in `iris`.
struct CandidateRule {
  std::vector<std::string> prefixes;
  std::vector<std::string> iris;

  bool empty() const { return prefixes.empty() && iris.empty(); }
  std::vector<NodeId> select(const KnowledgeGraph& g) const;
};

enum class OpticsMinSize { Threshold, SmallestTestCluster };

struct RunConfig {
  std::optional<std::string> input;  // N-Triples path
  std::optional<SynthConfig> synthgen;
  CandidateRule candidates;  // empty with synthgen: the generator's prefixes
  LinkVocabulary link_vocabulary = default_link_vocabulary();
  std::vector<VariantTag> variants = {VariantTag::G0, VariantTag::G5};
  std::vector<ClusteringId> clusterings = {ClusteringId::C0};
  std::vector<std::size_t> thresholds = {10};
  std::vector<ClusterAlgorithm> algorithms = {ClusterAlgorithm::Ward, ClusterAlgorithm::Single,
                                              ClusterAlgorithm::Optics};
  unsigned hops = 3;
  GcnConfig gcn;
  TrainConfig train;
  double optics_xi = kDefaultXi;
  OpticsMinSize optics_min_size = OpticsMinSize::Threshold;
  NmiMean nmi_mean = NmiMean::Arithmetic;
  std::uint64_t seed = 42;
  std::string out = "run";

  void validate() const;
};

// Unknown keys are rejected. Relative input paths resolve against `base_dir`.
RunConfig run_config_from_json(const Json& j, const std::string& base_dir = "");
RunConfig load_run_config(const std::string& path);
Json to_json(const RunConfig& c);

// Stripped input graph with its candidates and the alignment links removed from it.
struct PreparedInput {
  KnowledgeGraph graph;
  std::vector<NodeId> candidates;
  std::vector<AlignmentLink> links;
  std::size_t literals_dropped = 0;
};

PreparedInput prepare_input(const KnowledgeGraph& raw, const CandidateRule& rule, const LinkVocabulary& vocab);

// Gold clustering and folds keyed by IRI, so it applies to every variant.
struct GoldRecord {
  ClusteringId id = ClusteringId::C0;
  std::vector<AlignmentRelation> relations;
  std::map<std::string, int> labels;
  std::vector<std::size_t> cluster_sizes;
  std::array<std::vector<std::string>, kFoldCount> folds;  // S_1..S_5
  std::vector<PlantedLink> links;                          // every stripped alignment link among candidates
  std::uint64_t seed = 0;

  std::size_t cluster_size_of(const std::string& iri) const;
  // Fold k (1-based) trains on all but S_k and S_{k+1}.
  std::vector<std::string> train_members(int fold) const;
  const std::vector<std::string>& validation_members(int fold) const;
  const std::vector<std::string>& test_members(int fold) const;
};

GoldRecord make_gold_record(const PreparedInput& input, ClusteringId id, std::uint64_t seed);
Json to_json(const GoldRecord& g);
GoldRecord gold_record_from_json(const Json& j);

struct VariantArtifact {
  KnowledgeGraph graph;  // saturated and reduced to the k-hop neighborhood of the candidates
  SaturationReport report;
  GraphStats reduced;
  // Candidate IRI -> IRI of the node carrying it in `graph` (differs after sameAs contraction).
  std::map<std::string, std::string> candidate_alias;

  Eigen::Index column_of(const std::string& candidate_iri) const;
};

VariantArtifact saturate_variant(const PreparedInput& input, VariantTag tag, unsigned hops);
Json variant_report_json(const VariantArtifact& v);

// Candidate embeddings of one fold, in the order of `iris`.
struct EmbeddingTable {
  std::vector<std::string> iris;
  Eigen::MatrixXd vectors;  // d x |iris|

  Eigen::Index column_of(const std::string& iri) const;
};

struct FoldTraining {
  TrainResult result;
  EmbeddingTable embeddings;  // every candidate in the gold record
};

FoldTraining train_fold(const VariantArtifact& variant, const GoldRecord& gold, int fold, const GcnConfig& gcn,
                        const TrainConfig& train, const TrainOptions& options = {});

// Evaluated nodes: test members of `fold` whose gold cluster has at least `threshold` members.
struct EvalSet {
  std::vector<std::string> iris;
  Labels gold;

  std::size_t gold_cluster_count() const;
};

EvalSet evaluation_set(const GoldRecord& gold, int fold, std::size_t threshold);

// Ward and Single receive the number of gold clusters present in `eval`; OPTICS
// its minimum cluster size per `min_size`.
ClusterAssignment cluster_stage(const EmbeddingTable& emb, const EvalSet& eval, ClusterAlgorithm algorithm,
                                std::size_t threshold, double xi = kDefaultXi,
                                OpticsMinSize min_size = OpticsMinSize::Threshold);

std::vector<DistanceDistribution> distance_stage(const EmbeddingTable& emb, const GoldRecord& gold, int fold,
                                                 std::vector<std::string>* node_iris = nullptr);
// One row per pair; the header comment records the distance definition.
std::string distances_to_csv(const std::vector<DistanceDistribution>& dists, const std::vector<std::string>& iris);
std::string distance_summary_to_csv(const std::vector<DistanceDistribution>& dists);

std::string derive_seed_label(ClusteringId c, VariantTag g, int fold);
std::uint64_t derive_seed(std::uint64_t seed, const std::string& label);

enum ExitCode { kExitOk = 0, kExitConfig = 1, kExitPartial = 2 };

struct PipelineOptions {
  unsigned jobs = 1;
  bool dry_run = false;
};

struct CellKey {
  ClusteringId clustering;
  VariantTag variant;
  int fold;

  std::string dir() const;  // cells/c0_g5/fold1
};

std::vector<CellKey> planned_cells(const RunConfig& c);

// Writes the results tree under config.out and returns an exit code.
int cmd_pipeline(const RunConfig& config, const PipelineOptions& options);
// Writes one reduced graph and report per variant under config.out/variants.
int cmd_saturate(const RunConfig& config);

struct ReportRow {
  std::string clustering;
  std::string variant;
  std::size_t threshold = 0;
  std::string algorithm;
  std::string metric;
  double mean = 0;
  double stddev = 0;
  std::string formatted;
  bool best_algorithm = false;
  bool best_variant = false;
};

// Reads every results/<c>_<g>/metrics.json under `root`. Throws Error on an empty tree.
std::vector<ReportRow> collect_report(const std::string& root);
std::string report_to_csv(const std::vector<ReportRow>& rows);
Json report_to_json(const std::vector<ReportRow>& rows);
int cmd_report(const std::string& root);

}  // namespace kgmatch
