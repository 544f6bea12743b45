#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "ctgraph/ctgraph.hpp"

namespace ctgraph::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = dist(rng);
  return m;
}

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Banded graph on n nodes with bandwidth in [1, n-1] and independent positive weights.
inline Matrix random_banded_adjacency(std::size_t n, std::mt19937_64& rng) {
  const std::size_t q = uniform_index(rng, 1, n - 1);
  std::uniform_real_distribution<double> weight(0.1, 3.0);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n && j - i <= q; ++j) a(i, j) = a(j, i) = weight(rng);
  return a;
}

inline GraphSpec random_spec(std::mt19937_64& rng, std::size_t max_nodes = 40) {
  GraphSpec spec;
  spec.n_nodes = uniform_index(rng, 2, max_nodes);
  spec.q = uniform_index(rng, 1, spec.n_nodes + 2);
  spec.spacing_z = mm_to_dm(std::uniform_real_distribution<double>(0.3, 5.0)(rng));
  spec.weight_fn = static_cast<WeightFn>(uniform_index(rng, 0, 2));
  return spec;
}

inline ChebWeights random_cheb(std::size_t order, std::size_t d_in, std::size_t d_out, std::mt19937_64& rng) {
  ChebWeights w;
  for (std::size_t k = 0; k < order; ++k) w.thetas.push_back(random_matrix(d_in, d_out, rng));
  return w;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

inline LabelVector random_labels(std::size_t n, std::mt19937_64& rng) {
  LabelVector y(n);
  for (auto& v : y) v = static_cast<std::uint8_t>(uniform_index(rng, 0, 1));
  return y;
}

// Shifts every parameter by N(0, sigma) so no bias sits exactly on a ReLU kink.
inline void jitter(ModelParams& p, std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  visit_tensors(p, [&](std::span<double> d, const Shape&) {
    for (double& v : d) v += n(rng);
  });
}

inline double relative_frobenius(const Matrix& a, const Matrix& reference) {
  return frobenius_norm(a - reference) / std::max(frobenius_norm(reference), 1e-300);
}

inline SynthTaskConfig small_task(std::uint64_t seed = 0) {
  SynthTaskConfig cfg;
  cfg.n_train = 40;
  cfg.n_val = 20;
  cfg.n_test = 20;
  cfg.seed = seed;
  return cfg;
}

}  // namespace ctgraph::testing
