#pragma once

// Analytic gradients of the encoder plus loss, compared entry by entry with
// central differences of the dense oracle.

#include <algorithm>
#include <cmath>
#include <vector>

#include "kgmatch/training.hpp"
#include "oracles/gcn_oracle.hpp"

namespace testing_support {

struct GradientCheck {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst_relative = 0;
};

inline bool gradient_close(double analytic, double numeric) {
  return std::abs(analytic - numeric) <= std::max(1e-8, 1e-4 * std::max(std::abs(analytic), std::abs(numeric)));
}

inline GradientCheck check_gradients(const kgmatch::KnowledgeGraph& g, kgmatch::GcnParams<double> params,
                                     const kgmatch::GcnConfig& config, const kgmatch::SnnBatch& batch, double rho,
                                     double step = 1e-5) {
  using namespace kgmatch;
  const auto adj = RelationalAdjacency<double>::from_graph(g, config.normalization);
  auto tape = forward_with_tape(adj, params, config);
  auto loss = snn_loss_with_gradient(tape.final_embeddings(), batch, rho);
  auto grads = backward(adj, params, config, tape, loss.embedding_gradient);

  auto objective = [&] { return oracle::naive_snn(oracle::dense_forward(g, params, config), batch.columns, batch.labels, 1.0 / rho); };
  GradientCheck out;
  auto record = [&](double a, double n) {
    ++out.checked;
    if (!gradient_close(a, n)) ++out.failed;
    const double scale = std::max({std::abs(a), std::abs(n), 1e-8});
    out.worst_relative = std::max(out.worst_relative, std::abs(a - n) / scale);
  };
  auto values = oracle::entries(params);
  auto analytic = oracle::entries(grads);
  for (std::size_t k = 0; k < values.size(); ++k) record(*analytic[k], oracle::central_difference(objective, *values[k], step));
  record(loss.rho_gradient, oracle::central_difference(objective, rho, step));
  return out;
}

}  // namespace testing_support
