#pragma once

// Dense reference encoder and loss, plus central finite differences over every
// parameter entry. Loops are spelled out; nothing here shares code with the
// sparse implementation beyond the parameter container.

#include <cmath>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "kgmatch/gcn.hpp"
#include "kgmatch/training.hpp"

namespace oracle {

using Params = kgmatch::GcnParams<double>;

// Returns d x n embeddings of the last layer for a one-hot input.
inline Eigen::MatrixXd dense_forward(const kgmatch::KnowledgeGraph& g, const Params& p,
                                     const kgmatch::GcnConfig& c) {
  const std::size_t n = g.node_table_size();
  const std::size_t R = g.predicate_table_size();
  std::map<std::pair<std::size_t, std::size_t>, double> count;  // (i, r) -> c_ir
  for (const auto& t : g.triples()) count[{t.subject, t.predicate}] += 1;

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& L = p.layers[l];
    const Eigen::Index out = L.self_weight.rows(), in = L.self_weight.cols();
    std::vector<Eigen::MatrixXd> w(R, Eigen::MatrixXd::Zero(out, in));
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t b = 0; b < L.bases.size(); ++b)
        for (Eigen::Index x = 0; x < out; ++x)
          for (Eigen::Index y = 0; y < in; ++y)
            w[r](x, y) += L.coefficients(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) * L.bases[b](x, y);

    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(out, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      for (Eigen::Index x = 0; x < out; ++x)
        for (Eigen::Index y = 0; y < in; ++y) next(x, col) += L.self_weight(x, y) * h(y, col);
    }
    for (const auto& t : g.triples()) {
      double norm = 1.0;
      if (c.normalization == kgmatch::Normalization::NeighborCount) norm = 1.0 / count[{t.subject, t.predicate}];
      for (Eigen::Index x = 0; x < out; ++x)
        for (Eigen::Index y = 0; y < in; ++y)
          next(x, static_cast<Eigen::Index>(t.subject)) +=
              norm * w[t.predicate](x, y) * h(y, static_cast<Eigen::Index>(t.object));
    }
    if (c.activations[l] == kgmatch::Activation::Tanh)
      for (Eigen::Index k = 0; k < next.size(); ++k) next.data()[k] = std::tanh(next.data()[k]);
    h = std::move(next);
  }
  return h;
}

// Soft nearest neighbor loss without any stabilization.
inline double naive_snn(const Eigen::MatrixXd& h, const std::vector<Eigen::Index>& cols, const std::vector<int>& labels,
                        double temperature) {
  double total = 0;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    double same = 0, all = 0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (k == i) continue;
      double d = 0;
      for (Eigen::Index x = 0; x < h.rows(); ++x) {
        const double diff = h(x, cols[i]) - h(x, cols[k]);
        d += diff * diff;
      }
      const double e = std::exp(-d / temperature);
      all += e;
      if (labels[k] == labels[i]) same += e;
    }
    total += -std::log(same / all);
  }
  return total / static_cast<double>(cols.size());
}

// Every scalar parameter, in a fixed order.
inline std::vector<double*> entries(Params& p) {
  std::vector<double*> out;
  for (auto& L : p.layers) {
    for (auto& v : L.bases)
      for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v.data() + k);
    for (Eigen::Index k = 0; k < L.coefficients.size(); ++k) out.push_back(L.coefficients.data() + k);
    for (Eigen::Index k = 0; k < L.self_weight.size(); ++k) out.push_back(L.self_weight.data() + k);
  }
  return out;
}

inline double central_difference(const std::function<double()>& f, double& x, double step) {
  const double keep = x;
  x = keep + step;
  const double up = f();
  x = keep - step;
  const double down = f();
  x = keep;
  return (up - down) / (2 * step);
}

}  // namespace oracle
