#include "kgmatch/training.hpp"

#include <sstream>

namespace kgmatch {

void TrainConfig::validate() const {
  if (max_epochs < 0) throw ConfigError("max_epochs must be non-negative");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (patience < 1) throw ConfigError("patience must be positive");
  if (!(min_delta >= 0)) throw ConfigError("min_delta must be non-negative");
  if (!(initial_temperature > 0)) throw ConfigError("initial temperature must be positive");
  if (!(rho_floor > 0)) throw ConfigError("rho floor must be positive");
}

TrainState TrainState::initial(GcnParams<double> params, const TrainConfig& config) {
  TrainState s;
  s.adam.first_moment = params.zeros_like();
  s.adam.second_moment = params.zeros_like();
  s.params = std::move(params);
  s.temperature.floor = config.rho_floor;
  s.temperature.rho = std::max(1.0 / config.initial_temperature, config.rho_floor);
  return s;
}

void adam_step(TrainState& state, const GcnParams<double>& gradients, double rho_gradient, const TrainConfig& config) {
  if (gradients.layers.size() != state.params.layers.size()) throw ShapeError("gradient layer count mismatch");
  std::size_t block = 0;
  zip_blocks(
      [&](const Matrix<double>& g, const Matrix<double>& p) {
        if (g.rows() != p.rows() || g.cols() != p.cols()) throw ShapeError("gradient block shape mismatch");
        if (!g.allFinite()) {
          std::ostringstream msg;
          msg << "non-finite gradient in parameter block " << block << " (max |g| = " << g.cwiseAbs().maxCoeff()
              << ")";
          throw ContractError(msg.str());
        }
        ++block;
      },
      gradients, state.params);
  if (!std::isfinite(rho_gradient)) throw ContractError("non-finite temperature gradient");

  AdamState& adam = state.adam;
  ++adam.step;
  const double b1 = config.beta1, b2 = config.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(adam.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(adam.step));
  const double lr = config.learning_rate;
  const double eps = config.epsilon;

  GcnParams<double> grads = gradients;
  zip_blocks(
      [&](Matrix<double>& p, Matrix<double>& g, Matrix<double>& m, Matrix<double>& v) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        p.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
      },
      state.params, grads, adam.first_moment, adam.second_moment);

  adam.rho_first_moment = b1 * adam.rho_first_moment + (1.0 - b1) * rho_gradient;
  adam.rho_second_moment = b2 * adam.rho_second_moment + (1.0 - b2) * rho_gradient * rho_gradient;
  state.temperature.rho -=
      lr * (adam.rho_first_moment / correction1) / (std::sqrt(adam.rho_second_moment / correction2) + eps);
  state.temperature.rho = std::max(state.temperature.rho, state.temperature.floor);
}

TrainResult train(const KnowledgeGraph& g, const SnnBatch& train_batch, const SnnBatch& val_batch,
                  const GcnConfig& gcn_config, const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  gcn_config.validate();
  if (train_batch.size() == 0) throw ConfigError("no training nodes left after cluster-size filtering");
  if (val_batch.size() == 0) throw ConfigError("no validation nodes left after cluster-size filtering");
  train_batch.validate();
  val_batch.validate();

  const auto adj = RelationalAdjacency<double>::from_graph(g, gcn_config.normalization);
  TrainState state = TrainState::initial(
      init_params<double>(gcn_config, adj.node_count, static_cast<Eigen::Index>(adj.relation_count()), config.seed),
      config);

  TrainResult result;
  result.params = state.params;
  result.temperature = state.temperature;
  double min_val = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    auto tape = forward_with_tape(adj, state.params, gcn_config);
    const auto& h = tape.final_embeddings();
    auto tr = snn_loss_with_gradient(h, train_batch, state.temperature.rho);
    const double val = snn_loss(h, val_batch, state.temperature.rho);
    EpochRecord rec{epoch, tr.loss, val, state.temperature.temperature()};
    state.history.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
    result.last_val_loss = val;

    if (val < min_val) {
      min_val = val;
      result.params = state.params;
      result.temperature = state.temperature;
      result.best_epoch = epoch;
    }
    // Patience counts epochs without an absolute improvement of min_delta.
    if (val < state.best_val_loss - config.min_delta) {
      state.best_val_loss = val;
      state.epochs_since_improvement = 0;
    } else if (++state.epochs_since_improvement >= config.patience) {
      result.stopped_early = true;
      break;
    }

    GcnParams<double> grads = backward(adj, state.params, gcn_config, tape, tr.embedding_gradient);
    double rho_grad = tr.rho_gradient;
    if (options.gradient_hook) options.gradient_hook(grads, rho_grad);
    adam_step(state, grads, rho_grad, config);
  }

  result.history = std::move(state.history);
  result.embeddings = forward(adj, result.params, gcn_config).back();
  return result;
}

SnnBatch make_batch(const GoldClustering& gold, std::span<const NodeId> members, std::size_t min_cluster_size,
                    const std::function<Eigen::Index(NodeId)>& column_of) {
  SnnBatch batch;
  for (NodeId n : members) {
    auto it = gold.labels.find(n);
    if (it == gold.labels.end()) throw LookupError("fold member is not in the gold clustering");
    if (gold.cluster_sizes[static_cast<std::size_t>(it->second)] < min_cluster_size) continue;
    batch.columns.push_back(column_of(n));
    batch.labels.push_back(it->second);
  }
  return batch;
}

TrainResult train(const KnowledgeGraph& g, const GoldClustering& gold, const FoldSplit& fold,
                  const std::function<Eigen::Index(NodeId)>& column_of, const GcnConfig& gcn_config,
                  const TrainConfig& train_config, const TrainOptions& options) {
  SnnBatch train_batch = make_batch(gold, fold.train, train_config.min_cluster_size, column_of);
  SnnBatch val_batch = make_batch(gold, fold.validation, train_config.min_cluster_size, column_of);
  return train(g, train_batch, val_batch, gcn_config, train_config, options);
}

}  // namespace kgmatch
