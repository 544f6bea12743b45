#pragma once

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctgraph/error.hpp"
#include "ctgraph/matrix.hpp"

namespace ctgraph {

// Edge weighting as a function of the triplet gap |i - j|.
enum class WeightFn {
  kInverseDm,  // 1 + 1 / (1 + 3 |i-j| s_z)
  kExpDecay,   // exp(-3 |i-j| s_z)
  kConstant,   // 1
};

inline std::string_view to_string(WeightFn fn) {
  switch (fn) {
    case WeightFn::kInverseDm: return "inverse-dm";
    case WeightFn::kExpDecay: return "exp";
    case WeightFn::kConstant: return "const";
  }
  return "?";
}

inline WeightFn parse_weight_fn(std::string_view s) {
  if (s == "inverse-dm") return WeightFn::kInverseDm;
  if (s == "exp") return WeightFn::kExpDecay;
  if (s == "const") return WeightFn::kConstant;
  throw ConfigError("unknown weight function '" + std::string(s) + "'");
}

// CT metadata gives slice spacing in millimetres; the edge weights use decimetres.
constexpr double mm_to_dm(double mm) { return mm / 100.0; }

struct GraphSpec {
  std::size_t n_nodes = 80;
  std::size_t q = 16;          // max triplet gap joined by an edge
  double spacing_z = 0.015;    // decimetres
  WeightFn weight_fn = WeightFn::kInverseDm;

  bool fully_connected() const { return q + 1 >= n_nodes; }

  void validate() const {
    require(n_nodes >= 2, "GraphSpec: n_nodes must be >= 2");
    require(q >= 1, "GraphSpec: q must be >= 1");
    require(spacing_z > 0.0 && std::isfinite(spacing_z), "GraphSpec: spacing_z must be positive");
  }
};

// Unordered pairs (i, j) with i < j.
using EdgeSet = std::vector<std::pair<std::size_t, std::size_t>>;

inline EdgeSet build_edge_set(const GraphSpec& spec) {
  spec.validate();
  EdgeSet edges;
  for (std::size_t i = 0; i < spec.n_nodes; ++i)
    for (std::size_t j = i + 1; j < spec.n_nodes && j - i <= spec.q; ++j) edges.emplace_back(i, j);
  return edges;
}

inline double edge_weight(std::size_t i, std::size_t j, const GraphSpec& spec) {
  require(i != j, "edge_weight: self-loops are not part of the graph");
  const double gap = static_cast<double>(i > j ? i - j : j - i);
  switch (spec.weight_fn) {
    case WeightFn::kInverseDm: return 1.0 + 1.0 / (1.0 + 3.0 * gap * spec.spacing_z);
    case WeightFn::kExpDecay: return std::exp(-3.0 * gap * spec.spacing_z);
    case WeightFn::kConstant: return 1.0;
  }
  throw ConfigError("edge_weight: unknown weight function");
}

// Symmetric weighted adjacency with zero diagonal.
inline Matrix build_adjacency(const GraphSpec& spec) {
  Matrix a(spec.n_nodes, spec.n_nodes);
  for (auto [i, j] : build_edge_set(spec)) {
    const double w = edge_weight(i, j, spec);
    a(i, j) = w;
    a(j, i) = w;
  }
  return a;
}

inline Vector degree_vector(const Matrix& a) {
  require(a.rows() == a.cols(), "degree_vector: adjacency must be square");
  Vector deg(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (double w : a.row(i)) deg[i] += w;
  return deg;
}

}  // namespace ctgraph
