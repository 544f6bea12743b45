#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctgraph/error.hpp"
#include "ctgraph/graph_builder.hpp"
#include "ctgraph/matrix.hpp"
#include "ctgraph/spectral.hpp"

namespace ctgraph {

enum class Variant { kCheb, kGraphConv };

inline std::string_view to_string(Variant v) { return v == Variant::kCheb ? "cheb" : "graphconv"; }

inline Variant parse_variant(std::string_view s) {
  if (s == "cheb") return Variant::kCheb;
  if (s == "graphconv") return Variant::kGraphConv;
  throw ConfigError("unknown variant '" + std::string(s) + "'");
}

using LabelVector = std::vector<std::uint8_t>;

// f_n followed by g_n: Chebyshev filter, then linear + ReLU.
struct ChebLayer {
  ChebWeights cheb;
  Matrix ff_weight;
  Vector ff_bias;

  bool operator==(const ChebLayer&) const = default;
};

// ReLU(z_i W_self + (sum_j A_ij z_j) W_neighbor + b)
struct GraphConvLayer {
  Matrix self_weight;
  Matrix neighbor_weight;
  Vector bias;

  bool operator==(const GraphConvLayer&) const = default;
};

// d -> hidden -> n_labels with one ReLU.
struct Head {
  Matrix hidden_weight;
  Vector hidden_bias;
  Matrix out_weight;
  Vector out_bias;

  bool operator==(const Head&) const = default;
};

struct ModelParams {
  Variant variant = Variant::kCheb;
  std::vector<ChebLayer> cheb_layers;
  std::vector<GraphConvLayer> graphconv_layers;
  Head head;

  std::size_t n_layers() const {
    return variant == Variant::kCheb ? cheb_layers.size() : graphconv_layers.size();
  }
  std::size_t feature_dim() const { return head.hidden_weight.rows(); }
  std::size_t n_labels() const { return head.out_bias.size(); }
  std::size_t cheb_order() const {
    return variant == Variant::kCheb && !cheb_layers.empty() ? cheb_layers.front().cheb.order() : 0;
  }

  bool operator==(const ModelParams&) const = default;
};

// Gradients mirror the parameter layout exactly.
using GradientSet = ModelParams;

using Shape = std::vector<std::size_t>;

// Calls fn(span, shape) for every parameter tensor in declaration order:
// per layer (thetas..., ff_weight, ff_bias) or (self, neighbor, bias), then
// the head (hidden_weight, hidden_bias, out_weight, out_bias).
template <typename Params, typename Fn>
void visit_tensors(Params& p, Fn&& fn) {
  auto mat = [&](auto& m) { fn(m.flat(), Shape{m.rows(), m.cols()}); };
  auto vec = [&](auto& v) { fn(std::span(v), Shape{v.size()}); };
  if (p.variant == Variant::kCheb) {
    for (auto& layer : p.cheb_layers) {
      for (auto& t : layer.cheb.thetas) mat(t);
      mat(layer.ff_weight);
      vec(layer.ff_bias);
    }
  } else {
    for (auto& layer : p.graphconv_layers) {
      mat(layer.self_weight);
      mat(layer.neighbor_weight);
      vec(layer.bias);
    }
  }
  mat(p.head.hidden_weight);
  vec(p.head.hidden_bias);
  mat(p.head.out_weight);
  vec(p.head.out_bias);
}

inline std::size_t parameter_count(const ModelParams& p) {
  std::size_t n = 0;
  visit_tensors(p, [&](auto data, const Shape&) { n += data.size(); });
  return n;
}

// Parameters of the message-passing layers only (head excluded).
inline std::size_t gnn_parameter_count(const ModelParams& p) {
  std::size_t head = p.head.hidden_weight.size() + p.head.hidden_bias.size() + p.head.out_weight.size() +
                     p.head.out_bias.size();
  return parameter_count(p) - head;
}

inline ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  visit_tensors(z, [](std::span<double> data, const Shape&) { std::fill(data.begin(), data.end(), 0.0); });
  return z;
}

struct ModelConfig {
  Variant variant = Variant::kCheb;
  std::size_t feature_dim = 512;
  std::size_t n_labels = 18;
  std::size_t cheb_order = 3;  // K
  std::size_t n_layers = 3;
  std::size_t head_hidden = 0;  // 0 selects feature_dim / 2
  // Mean weighted degree of the training graphs. GraphConv's neighbour sum
  // adds this many feature vectors' worth of mass, so its init bound shrinks
  // by the same factor.
  double neighbor_degree = 1.0;

  std::size_t resolved_head_hidden() const {
    if (head_hidden != 0) return head_hidden;
    return feature_dim / 2 == 0 ? 1 : feature_dim / 2;
  }

  void validate() const {
    require(feature_dim >= 1, "ModelConfig: feature_dim must be >= 1");
    require(n_labels >= 1, "ModelConfig: n_labels must be >= 1");
    require(n_layers >= 1, "ModelConfig: n_layers must be >= 1");
    require(variant != Variant::kCheb || cheb_order >= 1, "ModelConfig: cheb_order must be >= 1");
    require(neighbor_degree > 0.0, "ModelConfig: neighbor_degree must be positive");
  }
};

// Weights uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero. GraphConv
// neighbour weights are further divided by neighbor_degree.
inline ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  auto uniform = [&](std::size_t fan_in, std::size_t fan_out) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-s, s);
    Matrix m(fan_in, fan_out);
    for (double& v : m.flat()) v = dist(rng);
    return m;
  };

  const std::size_t d = cfg.feature_dim;
  ModelParams p;
  p.variant = cfg.variant;
  for (std::size_t n = 0; n < cfg.n_layers; ++n) {
    if (cfg.variant == Variant::kCheb) {
      ChebLayer layer;
      for (std::size_t k = 0; k < cfg.cheb_order; ++k) layer.cheb.thetas.push_back(uniform(d, d));
      layer.ff_weight = uniform(d, d);
      layer.ff_bias.assign(d, 0.0);
      p.cheb_layers.push_back(std::move(layer));
    } else {
      GraphConvLayer layer;
      layer.self_weight = uniform(d, d);
      layer.neighbor_weight = (1.0 / cfg.neighbor_degree) * uniform(d, d);
      layer.bias.assign(d, 0.0);
      p.graphconv_layers.push_back(std::move(layer));
    }
  }
  const std::size_t hidden = cfg.resolved_head_hidden();
  p.head.hidden_weight = uniform(d, hidden);
  p.head.hidden_bias.assign(hidden, 0.0);
  p.head.out_weight = uniform(hidden, cfg.n_labels);
  p.head.out_bias.assign(cfg.n_labels, 0.0);
  return p;
}

// Per-sample graph operators. The Chebyshev variant reads lhat, GraphConv reads adjacency.
struct GraphOperators {
  Matrix adjacency;
  ScaledLaplacian lhat;

  std::size_t n_nodes() const { return adjacency.rows(); }
};

inline GraphOperators build_operators(const GraphSpec& spec) {
  GraphOperators g;
  g.adjacency = build_adjacency(spec);
  g.lhat = scaled_laplacian(g.adjacency);
  return g;
}

// Relabels nodes: new node i is old node perm[i].
inline GraphOperators permute_operators(const GraphOperators& g, std::span<const std::size_t> perm) {
  return {permute_symmetric(g.adjacency, perm), {permute_symmetric(g.lhat.values, perm), g.lhat.lambda_max_used}};
}

inline void relu_inplace(Matrix& m) {
  for (double& v : m.flat()) v = v > 0.0 ? v : 0.0;
}

// Intermediate values kept for the backward pass.
struct ForwardTrace {
  std::vector<Matrix> inputs;                // Z^n entering layer n
  std::vector<std::vector<Matrix>> basis;    // Cheb: T_k(Lhat) Z^n
  std::vector<Matrix> mixed;                 // Cheb: f_n(Z^n); GraphConv: A Z^n
  std::vector<Matrix> pre_activation;        // layer pre-ReLU
  Matrix node_output;                        // Z
  Matrix pooled;                             // 1 x d
  Matrix head_pre;                           // 1 x hidden, pre-ReLU
  Matrix head_hidden;                        // 1 x hidden
};

inline Matrix cheb_layer_forward(const ScaledLaplacian& lhat, const Matrix& z, const ChebLayer& p,
                                 ForwardTrace* trace = nullptr) {
  check_cheb_weights(p.cheb, z.cols());
  std::vector<Matrix> basis = chebyshev_basis(lhat, z, p.cheb.order());
  Matrix filtered(z.rows(), p.cheb.thetas.front().cols());
  for (std::size_t k = 0; k < basis.size(); ++k) axpy(1.0, matmul(basis[k], p.cheb.thetas[k]), filtered);
  Matrix pre = matmul(filtered, p.ff_weight);
  add_row_vector(pre, p.ff_bias);
  Matrix out = pre;
  relu_inplace(out);
  if (trace) {
    trace->inputs.push_back(z);
    trace->basis.push_back(std::move(basis));
    trace->mixed.push_back(std::move(filtered));
    trace->pre_activation.push_back(std::move(pre));
  }
  return out;
}

inline Matrix graphconv_layer_forward(const Matrix& adjacency, const Matrix& z, const GraphConvLayer& p,
                                      ForwardTrace* trace = nullptr) {
  require(adjacency.rows() == z.rows(), "graphconv_layer_forward: adjacency and features disagree on N");
  Matrix neighbors = matmul(adjacency, z);
  Matrix pre = matmul(z, p.self_weight) + matmul(neighbors, p.neighbor_weight);
  add_row_vector(pre, p.bias);
  Matrix out = pre;
  relu_inplace(out);
  if (trace) {
    trace->inputs.push_back(z);
    trace->basis.emplace_back();
    trace->mixed.push_back(std::move(neighbors));
    trace->pre_activation.push_back(std::move(pre));
  }
  return out;
}

inline Vector aggregate_sum(const Matrix& z) { return column_sums(z); }

inline Vector model_forward(const GraphOperators& graph, const Matrix& h, const ModelParams& params,
                            ForwardTrace* trace = nullptr) {
  require(h.rows() == graph.n_nodes(), "model_forward: feature rows must match node count");
  require(h.cols() == params.feature_dim(), "model_forward: feature dim mismatch");
  Matrix z = h;
  if (params.variant == Variant::kCheb) {
    for (const ChebLayer& layer : params.cheb_layers) z = cheb_layer_forward(graph.lhat, z, layer, trace);
  } else {
    for (const GraphConvLayer& layer : params.graphconv_layers)
      z = graphconv_layer_forward(graph.adjacency, z, layer, trace);
  }

  const Vector pooled_vec = aggregate_sum(z);
  Matrix pooled(1, pooled_vec.size());
  std::copy(pooled_vec.begin(), pooled_vec.end(), pooled.row(0).begin());

  Matrix head_pre = matmul(pooled, params.head.hidden_weight);
  add_row_vector(head_pre, params.head.hidden_bias);
  Matrix hidden = head_pre;
  relu_inplace(hidden);
  Matrix logits = matmul(hidden, params.head.out_weight);
  add_row_vector(logits, params.head.out_bias);

  if (trace) {
    trace->node_output = std::move(z);
    trace->pooled = std::move(pooled);
    trace->head_pre = std::move(head_pre);
    trace->head_hidden = std::move(hidden);
  }
  auto r = logits.row(0);
  return Vector(r.begin(), r.end());
}

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Mean binary cross-entropy over labels, evaluated as
// max(x, 0) - x y + log(1 + exp(-|x|)).
inline double bce_loss(std::span<const double> logits, std::span<const std::uint8_t> labels) {
  require(logits.size() == labels.size() && !logits.empty(), "bce_loss: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double x = logits[i];
    const double y = labels[i] ? 1.0 : 0.0;
    total += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
  }
  return total / static_cast<double>(logits.size());
}

// d bce / d logit, with sigma(x) - 1 written as -sigma(-x) so saturated
// positives keep their tiny nonzero gradient.
inline Vector bce_gradient(std::span<const double> logits, std::span<const std::uint8_t> labels) {
  require(logits.size() == labels.size() && !logits.empty(), "bce_gradient: length mismatch");
  const double scale = 1.0 / static_cast<double>(logits.size());
  Vector g(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
    g[i] = scale * (labels[i] ? -sigmoid(-logits[i]) : sigmoid(logits[i]));
  return g;
}

}  // namespace ctgraph
