#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ctgraph/eigen_sym.hpp"
#include "ctgraph/error.hpp"
#include "ctgraph/graph_builder.hpp"
#include "ctgraph/matrix.hpp"

namespace ctgraph {

// L = D - A. Symmetric positive semi-definite with L * 1 = 0.
struct Laplacian {
  Matrix values;
};

// (2 / lambda_max) L - I, spectrum in [-1, 1] when lambda_max is exact.
struct ScaledLaplacian {
  Matrix values;
  double lambda_max_used = 0.0;
};

// One d_in x d_out matrix per Chebyshev order k = 0..K-1.
struct ChebWeights {
  std::vector<Matrix> thetas;

  std::size_t order() const { return thetas.size(); }

  bool operator==(const ChebWeights&) const = default;
};

// Spectra whose largest eigenvalue is below this are treated as edgeless.
inline constexpr double kDegenerateSpectrum = 1e-12;

inline Laplacian laplacian(const Matrix& adjacency) {
  require(adjacency.rows() == adjacency.cols(), "laplacian: adjacency must be square");
  const Vector deg = degree_vector(adjacency);
  Laplacian l{(-1.0) * adjacency};
  for (std::size_t i = 0; i < deg.size(); ++i) l.values(i, i) = deg[i] - adjacency(i, i);
  return l;
}

inline double lambda_max(const Laplacian& l) {
  const SymEigen eig = jacobi_eigen(l.values);
  const double top = eig.values.empty() ? 0.0 : eig.values.back();
  if (!(top >= kDegenerateSpectrum)) throw NumericError("lambda_max: degenerate spectrum");
  return top;
}

inline ScaledLaplacian scale_laplacian(const Laplacian& l, double lmax) {
  require(lmax > 0.0 && std::isfinite(lmax), "scale_laplacian: lambda_max must be positive");
  ScaledLaplacian out{(2.0 / lmax) * l.values, lmax};
  for (std::size_t i = 0; i < out.values.rows(); ++i) out.values(i, i) -= 1.0;
  return out;
}

inline ScaledLaplacian scaled_laplacian(const Matrix& adjacency) {
  const Laplacian l = laplacian(adjacency);
  return scale_laplacian(l, lambda_max(l));
}

// T_k(Lhat) X for k = 0..order-1 via T_k = 2 Lhat T_{k-1} - T_{k-2}.
inline std::vector<Matrix> chebyshev_basis(const ScaledLaplacian& lhat, const Matrix& x, std::size_t order) {
  require(lhat.values.rows() == x.rows(), "chebyshev_basis: operator and features disagree on N");
  std::vector<Matrix> basis;
  basis.reserve(order);
  if (order >= 1) basis.push_back(x);
  if (order >= 2) basis.push_back(matmul(lhat.values, x));
  for (std::size_t k = 2; k < order; ++k) {
    Matrix next = 2.0 * matmul(lhat.values, basis[k - 1]);
    axpy(-1.0, basis[k - 2], next);
    basis.push_back(std::move(next));
  }
  return basis;
}

inline void check_cheb_weights(const ChebWeights& w, std::size_t d_in) {
  require(w.order() >= 1, "ChebWeights: need at least one order");
  for (const Matrix& t : w.thetas)
    require(t.rows() == d_in && t.cols() == w.thetas.front().cols(), "ChebWeights: inconsistent theta shapes");
}

// sum_k T_k(Lhat) X theta_k
inline Matrix cheb_apply(const ScaledLaplacian& lhat, const Matrix& x, const ChebWeights& w) {
  check_cheb_weights(w, x.cols());
  const std::vector<Matrix> basis = chebyshev_basis(lhat, x, w.order());
  Matrix out(x.rows(), w.thetas.front().cols());
  for (std::size_t k = 0; k < w.order(); ++k) axpy(1.0, matmul(basis[k], w.thetas[k]), out);
  return out;
}

// T_k(x) evaluated directly, cos(k acos x) inside [-1, 1].
inline double chebyshev_scalar(std::size_t k, double x) {
  const double kd = static_cast<double>(k);
  if (x >= -1.0 && x <= 1.0) return std::cos(kd * std::acos(x));
  if (x > 1.0) return std::cosh(kd * std::acosh(x));
  return (k % 2 == 0 ? 1.0 : -1.0) * std::cosh(kd * std::acosh(-x));
}

// Reference filter through the eigendecomposition of L. Verification only.
inline Matrix spectral_filter_oracle(const Laplacian& l, const Matrix& x, const ChebWeights& w) {
  require(l.values.rows() <= 64, "spectral_filter_oracle: N > 64");
  require(l.values.rows() == x.rows(), "spectral_filter_oracle: dimension mismatch");
  check_cheb_weights(w, x.cols());

  const SymEigen eig = jacobi_eigen(l.values);
  const double lmax = eig.values.back();
  if (!(lmax >= kDegenerateSpectrum)) throw NumericError("spectral_filter_oracle: degenerate spectrum");

  const std::size_t n = x.rows();
  const Matrix& u = eig.vectors;
  const Matrix spectral_x = matmul_tn(u, x);  // U^T X

  Matrix out(n, w.thetas.front().cols());
  for (std::size_t k = 0; k < w.order(); ++k) {
    Matrix filtered = spectral_x;
    for (std::size_t i = 0; i < n; ++i) {
      const double gain = chebyshev_scalar(k, 2.0 * eig.values[i] / lmax - 1.0);
      for (double& v : filtered.row(i)) v *= gain;
    }
    axpy(1.0, matmul(matmul(u, filtered), w.thetas[k]), out);
  }
  return out;
}

}  // namespace ctgraph
