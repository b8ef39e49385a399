#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgmatch/alignment.hpp"

namespace kgmatch {

// Predicted and gold labels are parallel vectors over the same node list.
using Labels = std::vector<int>;

// Best fraction of nodes correctly labeled under a one-to-one mapping of
// predicted to gold labels (Hungarian assignment on the contingency table).
double accuracy(const Labels& pred, const Labels& gold);
double adjusted_rand_index(const Labels& pred, const Labels& gold);

enum class NmiMean { Arithmetic, Geometric, Min, Max };
double normalized_mutual_information(const Labels& pred, const Labels& gold, NmiMean mean = NmiMean::Arithmetic);

// Maximum-weight perfect matching on a square matrix; returns the column
// assigned to each row.
std::vector<int> hungarian_max(const Eigen::MatrixXd& weights);

struct MetricValues {
  double acc = 0;
  double ari = 0;
  double nmi = 0;
};

MetricValues evaluate_labels(const Labels& pred, const Labels& gold);

struct MetricSummary {
  std::vector<double> per_fold;
  double mean = 0;
  double stddev = 0;  // population

  std::string formatted() const;  // "m ± s", two decimals
};

struct MetricReport {
  MetricSummary acc;
  MetricSummary ari;
  MetricSummary nmi;
};

// Requires exactly one entry per fold.
MetricReport cross_validated_report(const std::vector<MetricValues>& per_fold);
MetricSummary summarize(const std::vector<double>& values);

struct LinkedPair {
  NodeId source;
  NodeId target;
  double distance;
};

struct DistanceDistribution {
  AlignmentRelation relation = AlignmentRelation::SameAs;
  std::vector<LinkedPair> pairs;
  // Quartiles with linear interpolation; empty when `pairs` is empty.
  std::optional<std::array<double, 5>> summary;  // min, q1, median, q3, max
  bool empty() const { return pairs.empty(); }
};

double quantile(std::vector<double> values, double q);

// Euclidean distances of linked pairs with both endpoints in `test_nodes`,
// deduplicated per undirected pair and relation. `column_of` maps a node to
// its embedding column. One entry per relation, in enum order.
std::vector<DistanceDistribution> distance_analysis(const Eigen::MatrixXd& embeddings,
                                                    std::span<const AlignmentLink> links,
                                                    std::span<const NodeId> test_nodes,
                                                    const std::function<Eigen::Index(NodeId)>& column_of);

}  // namespace kgmatch
