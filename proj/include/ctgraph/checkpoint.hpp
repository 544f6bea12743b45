#pragma once

#include <cstdint>
#include <string>

#include "ctgraph/binary_io.hpp"
#include "ctgraph/error.hpp"
#include "ctgraph/model.hpp"

namespace ctgraph {

// Checkpoint layout, little-endian:
//   "CTGC" | version u32 | n_labels u32 | d u32 | K u32 | n_layers u32
//   then every parameter tensor in visit_tensors order as
//   rank u32 | dims u32 x rank | values f64 x prod(dims)
// K = 0 marks the GraphConv variant, which has no Chebyshev weights.
inline constexpr std::string_view kCheckpointMagic = "CTGC";
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline io::ByteWriter encode_checkpoint(const ModelParams& p) {
  io::ByteWriter w;
  w.put_bytes(kCheckpointMagic);
  w.put_u32(kCheckpointVersion);
  w.put_u32(static_cast<std::uint32_t>(p.n_labels()));
  w.put_u32(static_cast<std::uint32_t>(p.feature_dim()));
  w.put_u32(static_cast<std::uint32_t>(p.cheb_order()));
  w.put_u32(static_cast<std::uint32_t>(p.n_layers()));
  visit_tensors(p, [&](std::span<const double> data, const Shape& shape) {
    w.put_u32(static_cast<std::uint32_t>(shape.size()));
    for (std::size_t dim : shape) w.put_u32(static_cast<std::uint32_t>(dim));
    for (double v : data) w.put_f64(v);
  });
  return w;
}

inline void write_checkpoint(const std::string& path, const ModelParams& p) {
  encode_checkpoint(p).save(path);
}

inline ModelParams decode_checkpoint(io::ByteReader& r) {
  if (r.get_bytes(4, FormatErrc::kTruncatedHeader) != kCheckpointMagic)
    throw FormatError(FormatErrc::kBadMagic, r.path());
  if (r.get_u32(FormatErrc::kTruncatedHeader) != kCheckpointVersion)
    throw FormatError(FormatErrc::kVersionMismatch, r.path());
  const std::uint32_t n_labels = r.get_u32(FormatErrc::kTruncatedHeader);
  const std::uint32_t d = r.get_u32(FormatErrc::kTruncatedHeader);
  const std::uint32_t k = r.get_u32(FormatErrc::kTruncatedHeader);
  const std::uint32_t n_layers = r.get_u32(FormatErrc::kTruncatedHeader);
  if (n_labels == 0 || d == 0 || n_layers == 0) throw FormatError(FormatErrc::kBadHeader, r.path());

  auto read_shape = [&](std::size_t rank_expected) {
    const std::uint32_t rank = r.get_u32(FormatErrc::kTruncatedPayload);
    if (rank != rank_expected) throw FormatError(FormatErrc::kBadHeader, r.path());
    Shape shape(rank);
    for (auto& dim : shape) dim = r.get_u32(FormatErrc::kTruncatedPayload);
    return shape;
  };
  auto read_matrix = [&](std::size_t rows, std::size_t cols) {
    const Shape s = read_shape(2);
    // rows or cols of 0 mean "take whatever the file says" (head hidden width).
    if ((rows && s[0] != rows) || (cols && s[1] != cols)) throw FormatError(FormatErrc::kBadHeader, r.path());
    r.need(s[0] * s[1] * 8, FormatErrc::kTruncatedPayload);
    Matrix m(s[0], s[1]);
    for (double& v : m.flat()) v = r.get_f64(FormatErrc::kTruncatedPayload);
    return m;
  };
  auto read_vector = [&](std::size_t len) {
    const Shape s = read_shape(1);
    if (len && s[0] != len) throw FormatError(FormatErrc::kBadHeader, r.path());
    r.need(s[0] * 8, FormatErrc::kTruncatedPayload);
    Vector v(s[0]);
    for (double& x : v) x = r.get_f64(FormatErrc::kTruncatedPayload);
    return v;
  };

  ModelParams p;
  p.variant = k == 0 ? Variant::kGraphConv : Variant::kCheb;
  for (std::uint32_t n = 0; n < n_layers; ++n) {
    if (p.variant == Variant::kCheb) {
      ChebLayer layer;
      for (std::uint32_t i = 0; i < k; ++i) layer.cheb.thetas.push_back(read_matrix(d, d));
      layer.ff_weight = read_matrix(d, d);
      layer.ff_bias = read_vector(d);
      p.cheb_layers.push_back(std::move(layer));
    } else {
      GraphConvLayer layer;
      layer.self_weight = read_matrix(d, d);
      layer.neighbor_weight = read_matrix(d, d);
      layer.bias = read_vector(d);
      p.graphconv_layers.push_back(std::move(layer));
    }
  }
  p.head.hidden_weight = read_matrix(d, 0);
  const std::size_t hidden = p.head.hidden_weight.cols();
  p.head.hidden_bias = read_vector(hidden);
  p.head.out_weight = read_matrix(hidden, n_labels);
  p.head.out_bias = read_vector(n_labels);
  return p;
}

inline ModelParams read_checkpoint(const std::string& path) {
  auto r = io::ByteReader::load(path);
  return decode_checkpoint(r);
}

}  // namespace ctgraph
