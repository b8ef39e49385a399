#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kgmatch/error.hpp"
#include "kgmatch/graph_store.hpp"
#include "kgmatch/random.hpp"

namespace kgmatch {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Node embeddings, one column per node.
template <typename Scalar>
using EmbeddingMatrix = Matrix<Scalar>;

enum class Activation { Tanh, Linear };
enum class Normalization { NeighborCount, None };

struct GcnConfig {
  // Output dimension of each layer; the input dimension of layer 0 is the
  // node count (featureless one-hot input).
  std::vector<Eigen::Index> layer_dims = {16, 16, 16};
  std::vector<Activation> activations = {Activation::Tanh, Activation::Tanh, Activation::Linear};
  int num_bases = 10;
  Normalization normalization = Normalization::NeighborCount;

  void validate() const {
    if (layer_dims.empty()) throw ConfigError("GCN needs at least one layer");
    if (activations.size() != layer_dims.size()) throw ConfigError("one activation per layer required");
    if (num_bases < 1) throw ConfigError("num_bases must be >= 1");
    for (auto d : layer_dims)
      if (d <= 0) throw ConfigError("layer dimensions must be positive");
  }
};

// Per-predicate normalized adjacency: relations[r](j, i) = 1 / c_{i,r} for
// every j in N_i^r, so column i of (X * relations[r]) is the normalized
// aggregate of node i's r-neighbors.
template <typename Scalar>
struct RelationalAdjacency {
  Eigen::Index node_count = 0;
  std::vector<Eigen::SparseMatrix<Scalar>> relations;

  static RelationalAdjacency from_graph(const KnowledgeGraph& g,
                                        Normalization norm = Normalization::NeighborCount) {
    RelationalAdjacency a;
    a.node_count = static_cast<Eigen::Index>(g.node_table_size());
    const std::size_t num_relations = g.predicate_table_size();
    std::vector<std::vector<Eigen::Triplet<Scalar>>> entries(num_relations);
    for (NodeId i = 0; i < g.node_table_size(); ++i) {
      for (PredicateId r = 0; r < num_relations; ++r) {
        const auto& nbrs = g.neighbors(i, r);
        if (nbrs.empty()) continue;
        Scalar w = norm == Normalization::NeighborCount ? Scalar(1) / Scalar(nbrs.size()) : Scalar(1);
        for (NodeId j : nbrs) entries[r].emplace_back(j, i, w);
      }
    }
    a.relations.resize(num_relations);
    for (std::size_t r = 0; r < num_relations; ++r) {
      a.relations[r].resize(a.node_count, a.node_count);
      a.relations[r].setFromTriplets(entries[r].begin(), entries[r].end());
    }
    return a;
  }

  std::size_t relation_count() const { return relations.size(); }
};

template <typename Scalar>
struct LayerParams {
  std::vector<Matrix<Scalar>> bases;  // V_b, output_dim x input_dim
  Matrix<Scalar> coefficients;        // a_rb, relation_count x num_bases
  Matrix<Scalar> self_weight;         // W_0, output_dim x input_dim

  Eigen::Index input_dim() const { return self_weight.cols(); }
  Eigen::Index output_dim() const { return self_weight.rows(); }
  Eigen::Index num_bases() const { return coefficients.cols(); }
  Eigen::Index relation_count() const { return coefficients.rows(); }

  std::size_t parameter_count() const {
    std::size_t n = static_cast<std::size_t>(coefficients.size() + self_weight.size());
    for (const auto& v : bases) n += static_cast<std::size_t>(v.size());
    return n;
  }

  // W_r = sum_b a_rb V_b.
  Matrix<Scalar> compose_weight(Eigen::Index r) const {
    if (r < 0 || r >= relation_count()) throw LookupError("relation index out of range");
    Matrix<Scalar> w = Matrix<Scalar>::Zero(output_dim(), input_dim());
    for (Eigen::Index b = 0; b < num_bases(); ++b) w.noalias() += coefficients(r, b) * bases[static_cast<std::size_t>(b)];
    return w;
  }

  LayerParams zeros_like() const {
    LayerParams z;
    for (const auto& v : bases) z.bases.push_back(Matrix<Scalar>::Zero(v.rows(), v.cols()));
    z.coefficients = Matrix<Scalar>::Zero(coefficients.rows(), coefficients.cols());
    z.self_weight = Matrix<Scalar>::Zero(self_weight.rows(), self_weight.cols());
    return z;
  }
};

// Parameters of the whole encoder; gradients and Adam moments use the same type.
template <typename Scalar>
struct GcnParams {
  std::vector<LayerParams<Scalar>> layers;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.parameter_count();
    return n;
  }

  GcnParams zeros_like() const {
    GcnParams z;
    for (const auto& l : layers) z.layers.push_back(l.zeros_like());
    return z;
  }

  template <typename To>
  GcnParams<To> cast() const {
    GcnParams<To> out;
    for (const auto& l : layers) {
      LayerParams<To> c;
      for (const auto& v : l.bases) c.bases.push_back(v.template cast<To>());
      c.coefficients = l.coefficients.template cast<To>();
      c.self_weight = l.self_weight.template cast<To>();
      out.layers.push_back(std::move(c));
    }
    return out;
  }
};

// Visits matching parameter blocks of structurally identical GcnParams in a
// fixed order: per layer, V_0..V_{B-1}, a, W_0.
template <typename F, typename First, typename... Rest>
void zip_blocks(F&& f, First& first, Rest&... rest) {
  for (std::size_t l = 0; l < first.layers.size(); ++l) {
    for (std::size_t b = 0; b < first.layers[l].bases.size(); ++b) f(first.layers[l].bases[b], rest.layers[l].bases[b]...);
    f(first.layers[l].coefficients, rest.layers[l].coefficients...);
    f(first.layers[l].self_weight, rest.layers[l].self_weight...);
  }
}

// Symmetric uniform (Glorot) initialization, deterministic under `seed`.
template <typename Scalar>
GcnParams<Scalar> init_params(const GcnConfig& config, Eigen::Index node_count, Eigen::Index relation_count,
                              std::uint64_t seed) {
  config.validate();
  if (node_count <= 0) throw ConfigError("graph has no nodes");
  Rng rng(seed);
  auto fill = [&](Eigen::Index rows, Eigen::Index cols, double limit) {
    Matrix<Scalar> m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = static_cast<Scalar>(rng.uniform(-limit, limit));
    return m;
  };
  GcnParams<Scalar> params;
  Eigen::Index in = node_count;
  for (Eigen::Index out : config.layer_dims) {
    LayerParams<Scalar> layer;
    const double w_limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (int b = 0; b < config.num_bases; ++b) layer.bases.push_back(fill(out, in, w_limit));
    const double a_limit = std::sqrt(6.0 / static_cast<double>(std::max<Eigen::Index>(relation_count, 1) + config.num_bases));
    layer.coefficients = fill(relation_count, config.num_bases, a_limit);
    layer.self_weight = fill(out, in, w_limit);
    params.layers.push_back(std::move(layer));
    in = out;
  }
  return params;
}

template <typename Scalar>
struct ForwardTape {
  std::vector<Matrix<Scalar>> pre_activations;  // per layer, output_dim x n
  std::vector<EmbeddingMatrix<Scalar>> outputs;  // per layer, output_dim x n

  std::size_t stored_values() const {
    std::size_t n = 0;
    for (const auto& m : pre_activations) n += static_cast<std::size_t>(m.size());
    for (const auto& m : outputs) n += static_cast<std::size_t>(m.size());
    return n;
  }
  const EmbeddingMatrix<Scalar>& final_embeddings() const { return outputs.back(); }
};

namespace detail {

template <typename Scalar>
void check_shapes(const RelationalAdjacency<Scalar>& adj, const GcnParams<Scalar>& params, const GcnConfig& config) {
  if (params.layers.size() != config.layer_dims.size()) throw ShapeError("parameter layer count does not match config");
  Eigen::Index in = adj.node_count;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& p = params.layers[l];
    const Eigen::Index out = config.layer_dims[l];
    if (p.self_weight.rows() != out || p.self_weight.cols() != in)
      throw ShapeError("layer " + std::to_string(l) + ": self weight is " + std::to_string(p.self_weight.rows()) + "x" +
                       std::to_string(p.self_weight.cols()) + ", expected " + std::to_string(out) + "x" +
                       std::to_string(in));
    if (p.coefficients.rows() != static_cast<Eigen::Index>(adj.relation_count()))
      throw ShapeError("layer " + std::to_string(l) + ": coefficient rows do not match relation count");
    if (static_cast<Eigen::Index>(p.bases.size()) != p.coefficients.cols())
      throw ShapeError("layer " + std::to_string(l) + ": basis count does not match coefficients");
    for (const auto& v : p.bases)
      if (v.rows() != out || v.cols() != in) throw ShapeError("layer " + std::to_string(l) + ": basis shape mismatch");
    in = out;
  }
}

template <typename Scalar>
Matrix<Scalar> layer_preactivation(const RelationalAdjacency<Scalar>& adj, const LayerParams<Scalar>& p,
                                   const Matrix<Scalar>* input) {
  Matrix<Scalar> pre;
  if (input == nullptr) {
    // One-hot input: W_0 * I = W_0, and W_r * A_r gathers the columns of W_r
    // indexed by each node's neighbors.
    pre = p.self_weight;
    for (std::size_t r = 0; r < adj.relations.size(); ++r) {
      if (adj.relations[r].nonZeros() == 0) continue;
      pre.noalias() += p.compose_weight(static_cast<Eigen::Index>(r)) * adj.relations[r];
    }
  } else {
    pre.noalias() = p.self_weight * (*input);
    for (std::size_t r = 0; r < adj.relations.size(); ++r) {
      if (adj.relations[r].nonZeros() == 0) continue;
      Matrix<Scalar> aggregated = (*input) * adj.relations[r];
      pre.noalias() += p.compose_weight(static_cast<Eigen::Index>(r)) * aggregated;
    }
  }
  return pre;
}

template <typename Scalar>
Matrix<Scalar> activate(const Matrix<Scalar>& pre, Activation a) {
  if (a == Activation::Linear) return pre;
  return pre.array().tanh().matrix();
}

}  // namespace detail

template <typename Scalar>
ForwardTape<Scalar> forward_with_tape(const RelationalAdjacency<Scalar>& adj, const GcnParams<Scalar>& params,
                                      const GcnConfig& config) {
  detail::check_shapes(adj, params, config);
  ForwardTape<Scalar> tape;
  const Matrix<Scalar>* input = nullptr;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    tape.pre_activations.push_back(detail::layer_preactivation(adj, params.layers[l], input));
    tape.outputs.push_back(detail::activate(tape.pre_activations.back(), config.activations[l]));
    input = &tape.outputs.back();
  }
  return tape;
}

// Embeddings of every layer, first hidden layer first.
template <typename Scalar>
std::vector<EmbeddingMatrix<Scalar>> forward(const RelationalAdjacency<Scalar>& adj, const GcnParams<Scalar>& params,
                                             const GcnConfig& config) {
  return forward_with_tape(adj, params, config).outputs;
}

// Reverse-mode pass through the encoder given dL/dH of the last layer.
template <typename Scalar>
GcnParams<Scalar> backward(const RelationalAdjacency<Scalar>& adj, const GcnParams<Scalar>& params,
                           const GcnConfig& config, const ForwardTape<Scalar>& tape,
                           const Matrix<Scalar>& output_gradient) {
  detail::check_shapes(adj, params, config);
  const std::size_t num_layers = params.layers.size();
  if (tape.outputs.size() != num_layers || tape.pre_activations.size() != num_layers)
    throw ShapeError("tape does not match parameters");
  if (output_gradient.rows() != tape.outputs.back().rows() || output_gradient.cols() != tape.outputs.back().cols())
    throw ShapeError("output gradient shape mismatch");

  GcnParams<Scalar> grads = params.zeros_like();
  Matrix<Scalar> grad_out = output_gradient;
  for (std::size_t l = num_layers; l-- > 0;) {
    const LayerParams<Scalar>& p = params.layers[l];
    LayerParams<Scalar>& g = grads.layers[l];
    Matrix<Scalar> grad_pre = grad_out;
    if (config.activations[l] == Activation::Tanh)
      grad_pre.array() *= (Scalar(1) - tape.outputs[l].array().square());

    const Matrix<Scalar>* input = l == 0 ? nullptr : &tape.outputs[l - 1];
    g.self_weight = input ? Matrix<Scalar>(grad_pre * input->transpose()) : grad_pre;
    Matrix<Scalar> grad_in;
    if (input) grad_in.noalias() = p.self_weight.transpose() * grad_pre;

    for (std::size_t r = 0; r < adj.relations.size(); ++r) {
      const auto& a = adj.relations[r];
      if (a.nonZeros() == 0) continue;
      // dL/dW_r = dP * (X A_r)^T, then split across bases via W_r = sum_b a_rb V_b.
      Matrix<Scalar> grad_w;
      if (input) {
        Matrix<Scalar> aggregated = (*input) * a;
        grad_w.noalias() = grad_pre * aggregated.transpose();
      } else {
        grad_w.noalias() = grad_pre * a.transpose();
      }
      const auto ri = static_cast<Eigen::Index>(r);
      for (Eigen::Index b = 0; b < p.num_bases(); ++b) {
        const auto bi = static_cast<std::size_t>(b);
        g.bases[bi].noalias() += p.coefficients(ri, b) * grad_w;
        g.coefficients(ri, b) = (grad_w.array() * p.bases[bi].array()).sum();
      }
      if (input) {
        Matrix<Scalar> back = p.compose_weight(ri).transpose() * grad_pre;
        grad_in.noalias() += back * a.transpose();
      }
    }
    if (input) grad_out = std::move(grad_in);
  }
  return grads;
}

}  // namespace kgmatch
