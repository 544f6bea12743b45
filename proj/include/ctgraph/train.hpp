#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ctgraph/backward.hpp"
#include "ctgraph/checkpoint.hpp"
#include "ctgraph/graph_builder.hpp"
#include "ctgraph/metrics.hpp"
#include "ctgraph/model.hpp"
#include "ctgraph/optim.hpp"
#include "ctgraph/synth.hpp"

namespace ctgraph {

// How each sample's graph is built; N and the spacing come from the sample.
struct GraphConfig {
  std::size_t q = 16;  // values >= N-1 give the fully connected graph
  WeightFn weight_fn = WeightFn::kInverseDm;

  GraphSpec spec_for(const Sample& s) const {
    return {s.features.rows(), q, mm_to_dm(s.spacing_z_mm), weight_fn};
  }
};

using OperatorList = std::vector<std::shared_ptr<const GraphOperators>>;

// Operators for every sample. Samples sharing (N, spacing) share one instance.
inline OperatorList prepare_operators(const Dataset& data, const GraphConfig& graph) {
  std::map<std::pair<std::size_t, std::uint64_t>, std::shared_ptr<const GraphOperators>> cache;
  OperatorList out;
  out.reserve(data.size());
  for (const Sample& s : data) {
    const auto key = std::make_pair(s.features.rows(), std::bit_cast<std::uint64_t>(s.spacing_z_mm));
    auto& slot = cache[key];
    if (!slot) slot = std::make_shared<const GraphOperators>(build_operators(graph.spec_for(s)));
    out.push_back(slot);
  }
  return out;
}

// Mean weighted degree over all nodes of all sample graphs, at least 1.
inline double mean_degree(const OperatorList& ops) {
  double total = 0.0;
  std::size_t nodes = 0;
  for (const auto& g : ops) {
    for (double d : degree_vector(g->adjacency)) total += d;
    nodes += g->n_nodes();
  }
  return nodes == 0 ? 1.0 : std::max(1.0, total / static_cast<double>(nodes));
}

struct LossPoint {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;  // mean training batch loss since the previous point
};

struct TrainResult {
  ModelParams params;
  std::vector<LossPoint> curve;
  std::vector<std::pair<std::size_t, ModelParams>> checkpoints;  // (step, params)
  double initial_loss = 0.0;  // mean training loss before the first update
};

struct TrainOutputs {
  std::filesystem::path dir;  // empty: keep everything in memory
};

inline double dataset_loss(const ModelParams& params, const Dataset& data, const OperatorList& ops) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    total += bce_loss(model_forward(*ops[i], data[i].features, params), data[i].labels);
  return total / static_cast<double>(data.size());
}

inline PredictionSet predict(const ModelParams& params, const Dataset& data, const OperatorList& ops) {
  require(ops.size() == data.size(), "predict: operator list does not match dataset");
  PredictionSet out;
  out.scores = Matrix(data.size(), params.n_labels());
  out.labels.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vector logits = model_forward(*ops[i], data[i].features, params);
    for (std::size_t l = 0; l < logits.size(); ++l) out.scores(i, l) = sigmoid(logits[l]);
    out.labels.push_back(data[i].labels);
  }
  return out;
}

inline std::string checkpoint_name(std::size_t step) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "ckpt_step_%07zu.ctgc", step);
  return buf;
}

// Minibatch AdamW training. Deterministic in (data, configs, seed): a fixed
// init seed, an epoch-wise shuffle from the same seed, and gradients reduced
// in batch order. Checkpoints are taken at every quarter of total_steps.
inline TrainResult train(const Dataset& train_set, const Dataset& val_set, const ModelConfig& model_cfg,
                         const TrainConfig& cfg, const GraphConfig& graph, const TrainOutputs& outputs = {}) {
  cfg.validate();
  model_cfg.validate();
  require(!train_set.empty(), "train: empty training set");
  for (const Sample& s : train_set) {
    require(s.features.cols() == model_cfg.feature_dim, "train: sample feature_dim does not match model");
    require(s.labels.size() == model_cfg.n_labels, "train: sample label count does not match model");
  }

  const OperatorList ops = prepare_operators(train_set, graph);
  const OperatorList val_ops = prepare_operators(val_set, graph);

  TrainResult result;
  ModelConfig init_cfg = model_cfg;
  if (init_cfg.variant == Variant::kGraphConv) init_cfg.neighbor_degree = mean_degree(ops);
  result.params = init_params(init_cfg, cfg.seed);
  OptimState state = OptimState::for_params(result.params);
  result.initial_loss = dataset_loss(result.params, train_set, ops);

  std::ofstream metrics;
  if (!outputs.dir.empty()) {
    std::filesystem::create_directories(outputs.dir);
    metrics.open(outputs.dir / "metrics.jsonl", std::ios::trunc);
    if (!metrics) throw FormatError(FormatErrc::kOpenFailed, (outputs.dir / "metrics.jsonl").string());
  }
  auto emit = [&](const std::string& line) {
    if (metrics) metrics << line << '\n';
  };

  std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 0x5348554646ull));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  std::vector<std::size_t> checkpoint_steps;
  for (std::size_t quarter = 1; quarter <= 4; ++quarter) {
    const std::size_t s = std::max<std::size_t>(1, cfg.total_steps * quarter / 4);
    if (checkpoint_steps.empty() || checkpoint_steps.back() != s) checkpoint_steps.push_back(s);
  }

  double window_loss = 0.0;
  std::size_t window_n = 0;
  const std::size_t log_every = std::max<std::size_t>(1, cfg.log_every);

  for (std::size_t step = 1; step <= cfg.total_steps; ++step) {
    GradientSet grads = zeros_like(result.params);
    const double scale = 1.0 / static_cast<double>(cfg.batch_size);
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        cursor = 0;
      }
      const std::size_t i = order[cursor++];
      batch_loss += scale * accumulate_gradient(*ops[i], train_set[i].features, train_set[i].labels,
                                                result.params, grads, scale);
    }

    double grad_sq = 0.0;
    visit_tensors(grads, [&](std::span<const double> g, const Shape&) {
      for (double v : g) grad_sq += v * v;
    });
    const double lr = lr_at(step, cfg);
    if (!std::isfinite(batch_loss) || !std::isfinite(grad_sq)) {
      std::ostringstream msg;
      msg << "train: non-finite loss at step " << step << " (lr " << lr << ", loss " << batch_loss
          << ", grad norm " << std::sqrt(grad_sq) << ")";
      throw NumericError(msg.str());
    }
    adamw_step(result.params, grads, state, lr, cfg);

    window_loss += batch_loss;
    ++window_n;
    if (step % log_every == 0 || step == cfg.total_steps) {
      LossPoint pt{step, lr, window_loss / static_cast<double>(window_n)};
      result.curve.push_back(pt);
      std::ostringstream line;
      line.precision(17);
      line << "{\"step\":" << pt.step << ",\"lr\":" << pt.lr << ",\"loss\":" << pt.loss << "}";
      emit(line.str());
      window_loss = 0.0;
      window_n = 0;
    }

    if (std::find(checkpoint_steps.begin(), checkpoint_steps.end(), step) != checkpoint_steps.end()) {
      result.checkpoints.emplace_back(step, result.params);
      if (!outputs.dir.empty()) write_checkpoint((outputs.dir / checkpoint_name(step)).string(), result.params);
      if (!val_set.empty()) {
        std::ostringstream line;
        line.precision(17);
        line << "{\"step\":" << step << ",\"val_loss\":" << dataset_loss(result.params, val_set, val_ops) << "}";
        emit(line.str());
      }
    }
  }
  if (!outputs.dir.empty()) write_checkpoint((outputs.dir / "final.ctgc").string(), result.params);
  return result;
}

}  // namespace ctgraph
