#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ctgraph/matrix.hpp"
#include "ctgraph/model.hpp"

namespace ctgraph {

struct LossAndGrad {
  double loss = 0.0;
  GradientSet grads;
};

namespace detail {

// dU = dOut where the pre-activation was positive, 0 elsewhere.
inline Matrix relu_backward(const Matrix& grad_out, const Matrix& pre) {
  Matrix g = grad_out;
  auto gs = g.flat();
  auto ps = pre.flat();
  for (std::size_t i = 0; i < gs.size(); ++i)
    if (!(ps[i] > 0.0)) gs[i] = 0.0;
  return g;
}

inline void accumulate_bias(Vector& bias_grad, const Matrix& grad_pre) {
  const Vector s = column_sums(grad_pre);
  for (std::size_t j = 0; j < s.size(); ++j) bias_grad[j] += s[j];
}

// Reverse sweep through one Chebyshev layer. Returns dL/dZ^n.
inline Matrix cheb_layer_backward(const ScaledLaplacian& lhat, const ChebLayer& p, const std::vector<Matrix>& basis,
                                  const Matrix& filtered, const Matrix& pre, const Matrix& grad_out,
                                  ChebLayer& g) {
  const Matrix grad_pre = relu_backward(grad_out, pre);
  axpy(1.0, matmul_tn(filtered, grad_pre), g.ff_weight);
  accumulate_bias(g.ff_bias, grad_pre);
  const Matrix grad_filtered = matmul_nt(grad_pre, p.ff_weight);

  const std::size_t order = basis.size();
  std::vector<Matrix> grad_basis(order);
  for (std::size_t k = 0; k < order; ++k) {
    axpy(1.0, matmul_tn(basis[k], grad_filtered), g.cheb.thetas[k]);
    grad_basis[k] = matmul_nt(grad_filtered, p.cheb.thetas[k]);
  }
  // Undo T_k = 2 Lhat T_{k-1} - T_{k-2} from the top order down. Lhat is symmetric.
  for (std::size_t k = order; k-- > 2;) {
    axpy(2.0, matmul(lhat.values, grad_basis[k]), grad_basis[k - 1]);
    axpy(-1.0, grad_basis[k], grad_basis[k - 2]);
  }
  if (order >= 2) axpy(1.0, matmul(lhat.values, grad_basis[1]), grad_basis[0]);
  return grad_basis[0];
}

inline Matrix graphconv_layer_backward(const Matrix& adjacency, const GraphConvLayer& p, const Matrix& input,
                                       const Matrix& neighbors, const Matrix& pre, const Matrix& grad_out,
                                       GraphConvLayer& g) {
  const Matrix grad_pre = relu_backward(grad_out, pre);
  axpy(1.0, matmul_tn(input, grad_pre), g.self_weight);
  axpy(1.0, matmul_tn(neighbors, grad_pre), g.neighbor_weight);
  accumulate_bias(g.bias, grad_pre);
  Matrix grad_in = matmul_nt(grad_pre, p.self_weight);
  axpy(1.0, matmul_tn(adjacency, matmul_nt(grad_pre, p.neighbor_weight)), grad_in);
  return grad_in;
}

}  // namespace detail

// Loss of one sample and its gradient, accumulated into `grads` with weight `scale`.
inline double accumulate_gradient(const GraphOperators& graph, const Matrix& h, std::span<const std::uint8_t> labels,
                                  const ModelParams& params, GradientSet& grads, double scale = 1.0) {
  ForwardTrace trace;
  const Vector logits = model_forward(graph, h, params, &trace);
  const double loss = bce_loss(logits, labels);

  GradientSet g = zeros_like(params);
  Vector grad_logits = bce_gradient(logits, labels);
  Matrix grad_out(1, grad_logits.size());
  std::copy(grad_logits.begin(), grad_logits.end(), grad_out.row(0).begin());

  // Head.
  axpy(1.0, matmul_tn(trace.head_hidden, grad_out), g.head.out_weight);
  detail::accumulate_bias(g.head.out_bias, grad_out);
  const Matrix grad_hidden = detail::relu_backward(matmul_nt(grad_out, params.head.out_weight), trace.head_pre);
  axpy(1.0, matmul_tn(trace.pooled, grad_hidden), g.head.hidden_weight);
  detail::accumulate_bias(g.head.hidden_bias, grad_hidden);
  const Matrix grad_pooled = matmul_nt(grad_hidden, params.head.hidden_weight);

  // Sum pooling: every node receives the pooled gradient.
  Matrix grad_z(trace.node_output.rows(), trace.node_output.cols());
  for (std::size_t i = 0; i < grad_z.rows(); ++i) {
    auto r = grad_z.row(i);
    std::copy(grad_pooled.row(0).begin(), grad_pooled.row(0).end(), r.begin());
  }

  for (std::size_t n = params.n_layers(); n-- > 0;) {
    if (params.variant == Variant::kCheb) {
      grad_z = detail::cheb_layer_backward(graph.lhat, params.cheb_layers[n], trace.basis[n], trace.mixed[n],
                                           trace.pre_activation[n], grad_z, g.cheb_layers[n]);
    } else {
      grad_z = detail::graphconv_layer_backward(graph.adjacency, params.graphconv_layers[n], trace.inputs[n],
                                                trace.mixed[n], trace.pre_activation[n], grad_z,
                                                g.graphconv_layers[n]);
    }
  }

  std::vector<std::span<double>> dst;
  visit_tensors(grads, [&](std::span<double> d, const Shape&) { dst.push_back(d); });
  std::size_t t = 0;
  visit_tensors(g, [&](std::span<double> src, const Shape&) {
    auto d = dst[t++];
    for (std::size_t i = 0; i < src.size(); ++i) d[i] += scale * src[i];
  });
  return loss;
}

// Exact gradient of the single-sample BCE loss with respect to every parameter.
inline LossAndGrad backward(const GraphOperators& graph, const Matrix& h, std::span<const std::uint8_t> labels,
                            const ModelParams& params) {
  LossAndGrad out{0.0, zeros_like(params)};
  out.loss = accumulate_gradient(graph, h, labels, params, out.grads);
  return out;
}

// Central differences, one scalar parameter at a time. Verification only.
inline GradientSet finite_diff_grad(const GraphOperators& graph, const Matrix& h, std::span<const std::uint8_t> labels,
                                    const ModelParams& params, double epsilon) {
  require(epsilon > 0.0, "finite_diff_grad: epsilon must be positive");
  ModelParams probe = params;
  GradientSet grads = zeros_like(params);
  std::vector<std::span<double>> probe_views, grad_views;
  visit_tensors(probe, [&](std::span<double> d, const Shape&) { probe_views.push_back(d); });
  visit_tensors(grads, [&](std::span<double> d, const Shape&) { grad_views.push_back(d); });

  auto loss_at = [&] { return bce_loss(model_forward(graph, h, probe), labels); };
  for (std::size_t t = 0; t < probe_views.size(); ++t) {
    for (std::size_t i = 0; i < probe_views[t].size(); ++i) {
      double& x = probe_views[t][i];
      const double saved = x;
      x = saved + epsilon;
      const double up = loss_at();
      x = saved - epsilon;
      const double down = loss_at();
      x = saved;
      grad_views[t][i] = (up - down) / (2.0 * epsilon);
    }
  }
  return grads;
}

inline constexpr double kGradientTolerance = 1e-5;

struct GradientCheck {
  double max_relative_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
};

// Per-scalar |a - b| / max(|a|, |b|, floor). The floor keeps components that
// are zero up to rounding from dominating the ratio.
inline GradientCheck compare_gradients(const GradientSet& exact, const GradientSet& numeric, double floor = 1e-6) {
  std::vector<std::span<const double>> a, b;
  visit_tensors(exact, [&](std::span<const double> d, const Shape&) { a.push_back(d); });
  visit_tensors(numeric, [&](std::span<const double> d, const Shape&) { b.push_back(d); });
  require(a.size() == b.size(), "compare_gradients: layout mismatch");
  GradientCheck out;
  for (std::size_t t = 0; t < a.size(); ++t) {
    require(a[t].size() == b[t].size(), "compare_gradients: tensor size mismatch");
    for (std::size_t i = 0; i < a[t].size(); ++i) {
      const double diff = std::abs(a[t][i] - b[t][i]);
      const double rel = diff / std::max({std::abs(a[t][i]), std::abs(b[t][i]), floor});
      out.max_abs_error = std::max(out.max_abs_error, diff);
      if (rel > out.max_relative_error) {
        out.max_relative_error = rel;
        out.worst_tensor = t;
        out.worst_index = i;
      }
    }
  }
  return out;
}

}  // namespace ctgraph
