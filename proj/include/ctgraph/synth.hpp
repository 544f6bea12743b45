#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ctgraph/binary_io.hpp"
#include "ctgraph/error.hpp"
#include "ctgraph/matrix.hpp"
#include "ctgraph/model.hpp"

namespace ctgraph {

// One scan: N x d node features, binary labels, and the z spacing it was acquired with.
struct Sample {
  Matrix features;
  LabelVector labels;
  double spacing_z_mm = 1.5;

  bool operator==(const Sample&) const = default;
};

using Dataset = std::vector<Sample>;

struct SynthTaskConfig {
  std::size_t n_nodes = 20;
  std::size_t feature_dim = 16;
  std::size_t n_labels = 4;
  std::size_t n_train = 2000;
  std::size_t n_val = 500;
  std::size_t n_test = 500;
  std::vector<std::size_t> local_labels{0, 2};
  std::vector<std::size_t> diffuse_labels{1, 3};
  double noise_std = 0.4;
  double signal_scale = 1.0;
  double positive_rate = 0.3;
  double spacing_z_mm = 1.5;
  std::uint64_t seed = 0;

  std::size_t subspace_width() const { return feature_dim / n_labels; }
  std::size_t local_span() const { return std::max<std::size_t>(1, (n_nodes + 4) / 8); }
  std::size_t diffuse_count() const { return std::max<std::size_t>(1, n_nodes / 2); }

  void validate() const {
    require(n_nodes >= 2, "SynthTaskConfig: n_nodes must be >= 2");
    require(n_labels >= 1, "SynthTaskConfig: n_labels must be >= 1");
    require(feature_dim >= n_labels, "SynthTaskConfig: feature_dim must be >= n_labels");
    require(n_train >= 1 && n_val >= 1 && n_test >= 1, "SynthTaskConfig: split sizes must be positive");
    require(noise_std >= 0.0, "SynthTaskConfig: noise_std must be nonnegative");
    require(signal_scale > 0.0, "SynthTaskConfig: signal_scale must be positive");
    require(positive_rate > 0.0 && positive_rate < 1.0, "SynthTaskConfig: positive_rate must lie in (0, 1)");
    require(spacing_z_mm > 0.0, "SynthTaskConfig: spacing_z_mm must be positive");
    std::vector<int> seen(n_labels, 0);
    for (std::size_t l : local_labels) {
      require(l < n_labels, "SynthTaskConfig: local label out of range");
      ++seen[l];
    }
    for (std::size_t l : diffuse_labels) {
      require(l < n_labels, "SynthTaskConfig: diffuse label out of range");
      ++seen[l];
    }
    for (int s : seen) require(s == 1, "SynthTaskConfig: local and diffuse labels must partition the label set");
  }
};

struct SynthTask {
  Dataset train, val, test;
};

// SplitMix64 finalizer; derives independent per-sample streams from (seed, index).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Sample `index` of the task. Pure function of (cfg, index).
inline Sample generate_sample(const SynthTaskConfig& cfg, std::uint64_t index) {
  std::mt19937_64 rng(mix_seed(cfg.seed, index));
  std::bernoulli_distribution positive(cfg.positive_rate);
  std::normal_distribution<double> noise(0.0, cfg.noise_std > 0.0 ? cfg.noise_std : 1.0);

  Sample s;
  s.spacing_z_mm = cfg.spacing_z_mm;
  s.features = Matrix(cfg.n_nodes, cfg.feature_dim);
  s.labels.assign(cfg.n_labels, 0);
  for (auto& y : s.labels) y = positive(rng) ? 1 : 0;

  const std::size_t width = cfg.subspace_width();
  auto plant = [&](std::size_t label, std::size_t node, double amount) {
    for (std::size_t c = label * width; c < (label + 1) * width; ++c) s.features(node, c) += amount;
  };

  for (std::size_t label : cfg.local_labels) {
    if (!s.labels[label]) continue;
    const std::size_t span = cfg.local_span();
    std::uniform_int_distribution<std::size_t> start(0, cfg.n_nodes - span);
    const std::size_t first = start(rng);
    for (std::size_t node = first; node < first + span; ++node) plant(label, node, cfg.signal_scale);
  }
  for (std::size_t label : cfg.diffuse_labels) {
    if (!s.labels[label]) continue;
    std::vector<std::size_t> nodes(cfg.n_nodes);
    std::iota(nodes.begin(), nodes.end(), std::size_t{0});
    std::shuffle(nodes.begin(), nodes.end(), rng);
    for (std::size_t i = 0; i < cfg.diffuse_count(); ++i) plant(label, nodes[i], cfg.signal_scale / 4.0);
  }
  if (cfg.noise_std > 0.0)
    for (double& v : s.features.flat()) v += noise(rng);

  // Feature files store f32; keep samples exactly representable.
  for (double& v : s.features.flat()) v = static_cast<double>(static_cast<float>(v));
  return s;
}

inline SynthTask generate_task(const SynthTaskConfig& cfg) {
  cfg.validate();
  SynthTask task;
  std::uint64_t index = 0;
  auto fill = [&](Dataset& out, std::size_t count) {
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(generate_sample(cfg, index++));
  };
  fill(task.train, cfg.n_train);
  fill(task.val, cfg.n_val);
  fill(task.test, cfg.n_test);
  return task;
}

// Feature vector of a node carrying no planted signal and no noise.
inline Vector background_feature(const SynthTaskConfig& cfg) { return Vector(cfg.feature_dim, 0.0); }

enum class ShiftMode {
  kPad,   // vacated rows take the pad feature
  kWrap,  // cyclic rotation, nothing is lost
};

// Translates node rows by `shift` positions toward higher indices (negative: lower).
inline Sample apply_z_shift(const Sample& s, long shift, std::span<const double> pad_feature,
                            ShiftMode mode = ShiftMode::kPad) {
  const long n = static_cast<long>(s.features.rows());
  require(std::labs(shift) < n, "apply_z_shift: |shift| must be smaller than the node count");
  require(mode == ShiftMode::kWrap || pad_feature.size() == s.features.cols(),
          "apply_z_shift: pad feature has the wrong dimension");
  Sample out = s;
  for (long i = 0; i < n; ++i) {
    long src = i - shift;
    auto dst = out.features.row(static_cast<std::size_t>(i));
    if (mode == ShiftMode::kWrap) src = ((src % n) + n) % n;
    if (src < 0 || src >= n) {
      std::copy(pad_feature.begin(), pad_feature.end(), dst.begin());
    } else {
      auto row = s.features.row(static_cast<std::size_t>(src));
      std::copy(row.begin(), row.end(), dst.begin());
    }
  }
  return out;
}

// Feature file layout, little-endian:
//   "CTGF" | version u32 = 1 | N u32 | d u32 | n_labels u32 | spacing_z_mm f64
//   | labels u8 x n_labels | features f32 x N*d, row-major
inline constexpr std::string_view kFeatureMagic = "CTGF";
inline constexpr std::uint32_t kFeatureVersion = 1;

inline io::ByteWriter encode_features(const Sample& s) {
  io::ByteWriter w;
  w.put_bytes(kFeatureMagic);
  w.put_u32(kFeatureVersion);
  w.put_u32(static_cast<std::uint32_t>(s.features.rows()));
  w.put_u32(static_cast<std::uint32_t>(s.features.cols()));
  w.put_u32(static_cast<std::uint32_t>(s.labels.size()));
  w.put_f64(s.spacing_z_mm);
  for (std::uint8_t y : s.labels) {
    require(y <= 1, "write_features: labels must be binary");
    w.put_u8(y);
  }
  for (double v : s.features.flat()) w.put_f32(static_cast<float>(v));
  return w;
}

inline void write_features(const std::string& path, const Sample& s) { encode_features(s).save(path); }

inline Sample decode_features(io::ByteReader& r) {
  if (r.get_bytes(4, FormatErrc::kTruncatedHeader) != kFeatureMagic) throw FormatError(FormatErrc::kBadMagic, r.path());
  if (r.get_u32(FormatErrc::kTruncatedHeader) != kFeatureVersion)
    throw FormatError(FormatErrc::kVersionMismatch, r.path());
  const std::uint32_t n = r.get_u32(FormatErrc::kTruncatedHeader);
  const std::uint32_t d = r.get_u32(FormatErrc::kTruncatedHeader);
  const std::uint32_t n_labels = r.get_u32(FormatErrc::kTruncatedHeader);
  Sample s;
  s.spacing_z_mm = r.get_f64(FormatErrc::kTruncatedHeader);
  r.need(static_cast<std::size_t>(n_labels) + std::size_t{4} * n * d, FormatErrc::kTruncatedPayload);
  s.labels.resize(n_labels);
  for (auto& y : s.labels) {
    y = r.get_u8(FormatErrc::kTruncatedPayload);
    if (y > 1) throw FormatError(FormatErrc::kBadHeader, r.path());
  }
  s.features = Matrix(n, d);
  for (double& v : s.features.flat()) v = r.get_f32(FormatErrc::kTruncatedPayload);
  return s;
}

inline Sample read_features(const std::string& path) {
  auto r = io::ByteReader::load(path);
  return decode_features(r);
}

// A dataset on disk is a directory of *.ctgf files read in lexicographic order.
inline void write_dataset(const std::filesystem::path& dir, const Dataset& samples) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FormatError(FormatErrc::kOpenFailed, dir.string());
  char name[32];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::snprintf(name, sizeof(name), "sample_%06zu.ctgf", i);
    write_features((dir / name).string(), samples[i]);
  }
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw FormatError(FormatErrc::kOpenFailed, dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".ctgf") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  Dataset out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_features(f.string()));
  return out;
}

}  // namespace ctgraph
