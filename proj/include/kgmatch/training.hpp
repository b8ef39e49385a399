#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "kgmatch/alignment.hpp"
#include "kgmatch/error.hpp"
#include "kgmatch/gcn.hpp"

namespace kgmatch {

// Nodes constrained by the loss (as embedding columns) and their gold labels.
struct SnnBatch {
  std::vector<Eigen::Index> columns;
  std::vector<int> labels;

  std::size_t size() const { return columns.size(); }

  // Every node needs another node with the same label.
  void validate() const {
    if (columns.size() != labels.size()) throw ShapeError("batch columns and labels differ in length");
    if (columns.size() < 2) throw ContractError("soft nearest neighbor loss needs at least two nodes");
    std::vector<int> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto [lo, hi] = std::equal_range(sorted.begin(), sorted.end(), labels[i]);
      if (hi - lo < 2)
        throw ContractError("node in column " + std::to_string(columns[i]) + " has no other node with label " +
                            std::to_string(labels[i]));
    }
  }
};

template <typename Scalar>
struct SnnResult {
  Scalar loss = 0;
  Matrix<Scalar> embedding_gradient;  // same shape as the embeddings; empty unless requested
  Scalar rho_gradient = 0;
};

// Soft nearest neighbor loss over squared Euclidean distances with inverse
// temperature rho:
//   -1/|N| sum_i log( sum_{j != i, y_j = y_i} exp(-rho d_ij) / sum_{k != i} exp(-rho d_ik) ).
// Both sums use log-sum-exp with per-node max subtraction. Nodes are visited in
// ascending column order, so the result does not depend on batch order.
template <typename Scalar>
SnnResult<Scalar> snn_loss_with_gradient(const EmbeddingMatrix<Scalar>& h, const SnnBatch& batch, Scalar rho,
                                         bool want_gradient = true) {
  using std::exp;
  using std::log;
  batch.validate();
  const std::size_t n = batch.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return batch.columns[a] != batch.columns[b] ? batch.columns[a] < batch.columns[b] : batch.labels[a] < batch.labels[b];
  });
  std::vector<Eigen::Index> cols(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    cols[i] = batch.columns[order[i]];
    labels[i] = batch.labels[order[i]];
    if (cols[i] < 0 || cols[i] >= h.cols()) throw ShapeError("batch column out of range");
  }

  Matrix<Scalar> dist(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    dist(i, i) = 0;
    for (std::size_t k = i + 1; k < n; ++k) {
      Scalar d = (h.col(cols[i]) - h.col(cols[k])).squaredNorm();
      dist(i, k) = d;
      dist(k, i) = d;
    }
  }

  SnnResult<Scalar> res;
  if (want_gradient) res.embedding_gradient = Matrix<Scalar>::Zero(h.rows(), h.cols());
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  const Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();
  std::vector<Scalar> logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    Scalar max_all = neg_inf, max_same = neg_inf;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      logits[k] = -rho * dist(i, k);
      max_all = std::max(max_all, logits[k]);
      if (labels[k] == labels[i]) max_same = std::max(max_same, logits[k]);
    }
    Scalar sum_all = 0, sum_same = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      sum_all += exp(logits[k] - max_all);
      if (labels[k] == labels[i]) sum_same += exp(logits[k] - max_same);
    }
    const Scalar log_all = max_all + log(sum_all);
    const Scalar log_same = max_same + log(sum_same);
    res.loss += (log_all - log_same) * inv_n;

    if (!want_gradient) continue;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      Scalar coeff = exp(logits[k] - log_all);
      if (labels[k] == labels[i]) coeff -= exp(logits[k] - log_same);
      coeff *= inv_n;  // dL/dlogit_ik
      res.rho_gradient -= coeff * dist(i, k);
      const Scalar scale = Scalar(-2) * rho * coeff;
      auto diff = (h.col(cols[i]) - h.col(cols[k])).eval();
      res.embedding_gradient.col(cols[i]) += scale * diff;
      res.embedding_gradient.col(cols[k]) -= scale * diff;
    }
  }
  return res;
}

template <typename Scalar>
Scalar snn_loss(const EmbeddingMatrix<Scalar>& h, const SnnBatch& batch, Scalar rho) {
  return snn_loss_with_gradient(h, batch, rho, false).loss;
}

// rho = 1/T, kept at or above `floor`.
struct TemperatureParam {
  double rho = 1.0;
  double floor = 1e-6;

  double temperature() const { return 1.0 / rho; }
};

struct TrainConfig {
  int max_epochs = 200;
  double learning_rate = 0.01;
  int patience = 10;
  double min_delta = 1e-4;
  std::uint64_t seed = 0;
  double initial_temperature = 1.0;
  double rho_floor = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Only gold clusters at least this large enter the train and validation losses.
  std::size_t min_cluster_size = 10;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double temperature = 1;
};

struct AdamState {
  GcnParams<double> first_moment;
  GcnParams<double> second_moment;
  double rho_first_moment = 0;
  double rho_second_moment = 0;
  long step = 0;
};

struct TrainState {
  GcnParams<double> params;
  TemperatureParam temperature;
  AdamState adam;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;
  std::vector<EpochRecord> history;

  static TrainState initial(GcnParams<double> params, const TrainConfig& config);
};

// One Adam update of every parameter and of rho; rho is clamped to its floor.
// Throws ContractError on a non-finite gradient.
void adam_step(TrainState& state, const GcnParams<double>& gradients, double rho_gradient, const TrainConfig& config);

struct TrainOptions {
  // Called on the gradients before every Adam step.
  std::function<void(GcnParams<double>& gradients, double& rho_gradient)> gradient_hook;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  GcnParams<double> params;  // parameters of the best-validation epoch
  TemperatureParam temperature;
  EmbeddingMatrix<double> embeddings;  // final layer under `params`
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  bool stopped_early = false;
  double last_val_loss = std::numeric_limits<double>::quiet_NaN();
};

// Full-batch training with early stopping on the validation loss.
TrainResult train(const KnowledgeGraph& g, const SnnBatch& train_batch, const SnnBatch& val_batch,
                  const GcnConfig& gcn_config, const TrainConfig& train_config, const TrainOptions& options = {});

// Batch of fold members whose gold cluster has at least `min_cluster_size`
// members; `column_of` maps a candidate node to its column in the trained graph.
SnnBatch make_batch(const GoldClustering& gold, std::span<const NodeId> members, std::size_t min_cluster_size,
                    const std::function<Eigen::Index(NodeId)>& column_of);

TrainResult train(const KnowledgeGraph& g, const GoldClustering& gold, const FoldSplit& fold,
                  const std::function<Eigen::Index(NodeId)>& column_of, const GcnConfig& gcn_config,
                  const TrainConfig& train_config, const TrainOptions& options = {});

}  // namespace kgmatch
