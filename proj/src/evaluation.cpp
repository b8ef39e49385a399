#include "kgmatch/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "kgmatch/clustering.hpp"
#include "kgmatch/error.hpp"

namespace kgmatch {

namespace {

struct Contingency {
  Eigen::MatrixXd table;  // pred x gold
  Eigen::VectorXd pred_sizes;
  Eigen::VectorXd gold_sizes;
  double n = 0;
};

Contingency contingency(const Labels& pred, const Labels& gold) {
  if (pred.size() != gold.size()) throw Error("predicted and gold labelings cover different node sets");
  Labels p = canonical_labels(pred);
  Labels g = canonical_labels(gold);
  const int np = p.empty() ? 0 : *std::max_element(p.begin(), p.end()) + 1;
  const int ng = g.empty() ? 0 : *std::max_element(g.begin(), g.end()) + 1;
  Contingency c;
  c.table = Eigen::MatrixXd::Zero(np, ng);
  for (std::size_t i = 0; i < p.size(); ++i) c.table(p[i], g[i]) += 1;
  c.pred_sizes = c.table.rowwise().sum();
  c.gold_sizes = c.table.colwise().sum().transpose();
  c.n = static_cast<double>(p.size());
  return c;
}

double comb2(double x) { return x * (x - 1) / 2; }

bool same_partition(const Labels& a, const Labels& b) { return canonical_labels(a) == canonical_labels(b); }

}  // namespace

std::vector<int> hungarian_max(const Eigen::MatrixXd& weights) {
  const auto n = static_cast<int>(weights.rows());
  if (weights.cols() != n) throw ShapeError("assignment matrix must be square");
  if (n == 0) return {};
  const double top = weights.maxCoeff();
  // Shortest augmenting path formulation on cost = top - weight, 1-based.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = (top - weights(i0 - 1, j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

double accuracy(const Labels& pred, const Labels& gold) {
  Contingency c = contingency(pred, gold);
  if (c.n == 0) return 1.0;
  // Zero padding makes the table square when label counts differ.
  const auto side = std::max(c.table.rows(), c.table.cols());
  Eigen::MatrixXd square = Eigen::MatrixXd::Zero(side, side);
  square.topLeftCorner(c.table.rows(), c.table.cols()) = c.table;
  auto match = hungarian_max(square);
  double correct = 0;
  for (Eigen::Index i = 0; i < side; ++i) correct += square(i, match[static_cast<std::size_t>(i)]);
  return correct / c.n;
}

double adjusted_rand_index(const Labels& pred, const Labels& gold) {
  Contingency c = contingency(pred, gold);
  double index = 0;
  for (Eigen::Index i = 0; i < c.table.rows(); ++i)
    for (Eigen::Index j = 0; j < c.table.cols(); ++j) index += comb2(c.table(i, j));
  double sum_pred = 0, sum_gold = 0;
  for (Eigen::Index i = 0; i < c.pred_sizes.size(); ++i) sum_pred += comb2(c.pred_sizes(i));
  for (Eigen::Index j = 0; j < c.gold_sizes.size(); ++j) sum_gold += comb2(c.gold_sizes(j));
  const double total = comb2(c.n);
  if (total == 0) return same_partition(pred, gold) ? 1.0 : 0.0;
  const double expected = sum_pred * sum_gold / total;
  const double max_index = (sum_pred + sum_gold) / 2;
  if (max_index == expected) return same_partition(pred, gold) ? 1.0 : 0.0;
  return (index - expected) / (max_index - expected);
}

double normalized_mutual_information(const Labels& pred, const Labels& gold, NmiMean mean) {
  Contingency c = contingency(pred, gold);
  if (c.n == 0) return 1.0;
  auto entropy = [&](const Eigen::VectorXd& sizes) {
    double h = 0;
    for (Eigen::Index i = 0; i < sizes.size(); ++i) {
      const double p = sizes(i) / c.n;
      if (p > 0) h -= p * std::log(p);
    }
    return h;
  };
  double mi = 0;
  for (Eigen::Index i = 0; i < c.table.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.table.cols(); ++j) {
      const double nij = c.table(i, j);
      if (nij == 0) continue;
      mi += nij / c.n * std::log(c.n * nij / (c.pred_sizes(i) * c.gold_sizes(j)));
    }
  }
  const double hp = entropy(c.pred_sizes);
  const double hg = entropy(c.gold_sizes);
  if (hp == 0 && hg == 0) return 1.0;
  double denom = 0;
  switch (mean) {
    case NmiMean::Arithmetic:
      denom = (hp + hg) / 2;
      break;
    case NmiMean::Geometric:
      denom = std::sqrt(hp * hg);
      break;
    case NmiMean::Min:
      denom = std::min(hp, hg);
      break;
    case NmiMean::Max:
      denom = std::max(hp, hg);
      break;
  }
  if (denom == 0) return 0.0;
  return std::clamp(mi / denom, 0.0, 1.0);
}

MetricValues evaluate_labels(const Labels& pred, const Labels& gold) {
  return {accuracy(pred, gold), adjusted_rand_index(pred, gold), normalized_mutual_information(pred, gold)};
}

std::string MetricSummary::formatted() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", mean, stddev);
  return buf;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  s.per_fold = values;
  if (values.empty()) return s;
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

MetricReport cross_validated_report(const std::vector<MetricValues>& per_fold) {
  if (per_fold.size() != static_cast<std::size_t>(kFoldCount))
    throw Error("cross-validated report needs " + std::to_string(kFoldCount) + " folds, got " +
                std::to_string(per_fold.size()));
  std::vector<double> acc, ari, nmi;
  for (const auto& m : per_fold) {
    acc.push_back(m.acc);
    ari.push_back(m.ari);
    nmi.push_back(m.nmi);
  }
  return {summarize(acc), summarize(ari), summarize(nmi)};
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<DistanceDistribution> distance_analysis(const Eigen::MatrixXd& embeddings,
                                                    std::span<const AlignmentLink> links,
                                                    std::span<const NodeId> test_nodes,
                                                    const std::function<Eigen::Index(NodeId)>& column_of) {
  std::set<NodeId> test(test_nodes.begin(), test_nodes.end());
  std::vector<DistanceDistribution> out;
  for (AlignmentRelation rel : kAllRelations) {
    DistanceDistribution dist;
    dist.relation = rel;
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const AlignmentLink& l : links) {
      if (l.relation != rel || !test.count(l.source) || !test.count(l.target)) continue;
      auto key = std::minmax(l.source, l.target);
      if (!seen.insert({key.first, key.second}).second) continue;
      const double d = (embeddings.col(column_of(key.first)) - embeddings.col(column_of(key.second))).norm();
      dist.pairs.push_back({key.first, key.second, d});
    }
    if (!dist.pairs.empty()) {
      std::vector<double> values;
      for (const auto& p : dist.pairs) values.push_back(p.distance);
      dist.summary = std::array<double, 5>{quantile(values, 0), quantile(values, 0.25), quantile(values, 0.5),
                                           quantile(values, 0.75), quantile(values, 1)};
    }
    out.push_back(std::move(dist));
  }
  return out;
}

}  // namespace kgmatch
