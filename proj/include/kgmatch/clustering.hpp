#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace kgmatch {

enum class ClusterAlgorithm { Ward, Single, Optics };

std::string to_string(ClusterAlgorithm a);
ClusterAlgorithm parse_cluster_algorithm(std::string_view name);

// One row per point.
using PointMatrix = Eigen::MatrixXd;

struct ClusterAssignment {
  std::vector<int> labels;  // dense from 0, numbered by first occurrence
  ClusterAlgorithm algorithm = ClusterAlgorithm::Single;
  std::size_t parameter = 0;  // cluster count (ward, single) or minimum cluster size (optics)

  std::size_t cluster_count() const;
};

// Renumbers labels densely in order of first occurrence.
std::vector<int> canonical_labels(const std::vector<int>& labels);

enum class Linkage { Ward, Single };

// Lance-Williams update of the dissimilarity between cluster k and the union
// of clusters i and j (Euclidean dissimilarities, ward in the scipy convention).
double lance_williams(Linkage linkage, double d_ki, double d_kj, double d_ij, std::size_t n_i, std::size_t n_j,
                      std::size_t n_k);

struct Merge {
  std::size_t kept;     // surviving cluster slot (the lower index)
  std::size_t removed;  // merged into `kept`
  double distance;
};

// Agglomerates until `k` clusters remain. Among equal dissimilarities the
// lexicographically smallest (i, j) pair merges first.
ClusterAssignment agglomerate(const PointMatrix& points, std::size_t k, Linkage linkage,
                              std::vector<Merge>* merges = nullptr);

ClusterAssignment ward_cluster(const PointMatrix& points, std::size_t k);
ClusterAssignment single_cluster(const PointMatrix& points, std::size_t k);

struct OpticsResult {
  std::vector<std::size_t> ordering;
  std::vector<double> reachability;  // indexed by point; +inf when undefined
  std::vector<double> core_distance;
  std::vector<long> predecessor;  // -1 when undefined
};

// Reachability ordering with unbounded epsilon. Among equal reachabilities the
// lowest point index is expanded first.
OpticsResult optics_ordering(const PointMatrix& points, std::size_t min_samples);

inline constexpr double kDefaultXi = 0.05;

// Xi-steep cluster extraction over a reachability ordering; returns
// [start, end] intervals of the ordering, smaller nested clusters first.
std::vector<std::pair<std::size_t, std::size_t>> extract_xi_clusters(const OpticsResult& optics, double xi,
                                                                     std::size_t min_samples,
                                                                     std::size_t min_cluster_size);

// Noise points (in no extracted cluster) receive singleton labels.
ClusterAssignment optics_cluster(const PointMatrix& points, std::size_t min_cluster_size, double xi = kDefaultXi);

}  // namespace kgmatch
