#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ctgraph/config.hpp"
#include "ctgraph/metrics.hpp"
#include "ctgraph/synth.hpp"
#include "ctgraph/train.hpp"

namespace ctgraph {

struct RunOutcome {
  TrainResult training;
  std::vector<double> thresholds;  // chosen on validation
  MetricsReport test_report;
};

inline GraphConfig resolved_graph(const GraphConfig& g, std::size_t n_nodes) {
  return {resolve_q(g.q, n_nodes), g.weight_fn};
}

// Train, pick per-label thresholds on validation, report on test.
inline RunOutcome train_and_evaluate(const SynthTask& task, const ModelConfig& model, const TrainConfig& train_cfg,
                                     const GraphConfig& graph, const TrainOutputs& outputs = {}) {
  require(!task.val.empty() && !task.test.empty(), "train_and_evaluate: validation and test sets are required");
  const GraphConfig g = resolved_graph(graph, task.train.front().features.rows());
  RunOutcome out;
  out.training = train(task.train, task.val, model, train_cfg, g, outputs);
  out.thresholds = select_thresholds(predict(out.training.params, task.val, prepare_operators(task.val, g)));
  out.test_report = evaluate(predict(out.training.params, task.test, prepare_operators(task.test, g)), out.thresholds);
  return out;
}

struct ShiftPoint {
  long shift = 0;
  double macro_f1 = 0.0;
  std::vector<double> label_f1;
};

// Macro F1 of a trained model on z-shifted copies of `data` at fixed thresholds.
inline std::vector<ShiftPoint> robustness_sweep(const ModelParams& params, const Dataset& data,
                                                const GraphConfig& graph, std::span<const double> thresholds,
                                                std::span<const long> shifts, std::span<const double> pad_feature,
                                                ShiftMode mode = ShiftMode::kPad) {
  require(!data.empty(), "robustness_sweep: empty dataset");
  const OperatorList ops = prepare_operators(data, resolved_graph(graph, data.front().features.rows()));
  std::vector<ShiftPoint> curve;
  for (long shift : shifts) {
    Dataset shifted;
    shifted.reserve(data.size());
    for (const Sample& s : data) shifted.push_back(apply_z_shift(s, shift, pad_feature, mode));
    const MetricsReport r = evaluate(predict(params, shifted, ops), thresholds);
    ShiftPoint pt{shift, r.macro.f1, {}};
    for (const auto& lm : r.per_label) pt.label_f1.push_back(lm.rates.f1);
    curve.push_back(std::move(pt));
  }
  return curve;
}

struct RobustnessCurve {
  Variant variant = Variant::kCheb;
  std::string setting;  // "padded" or "wrap-control"
  GraphConfig graph;
  ShiftMode mode = ShiftMode::kPad;
  MetricsReport unshifted;  // standard test evaluation
  std::vector<ShiftPoint> points;
};

// Shift sweep for both variants on the configured graph with padding, plus a
// control on the fully connected constant-weight graph with cyclic shifts,
// where sum pooling makes every shift a pure relabelling of nodes.
inline std::vector<RobustnessCurve> run_robustness(const ExperimentConfig& cfg) {
  const SynthTask task = generate_task(cfg.data);
  const Vector pad = background_feature(cfg.data);
  std::vector<RobustnessCurve> out;
  struct Setting {
    const char* name;
    GraphConfig graph;
    ShiftMode mode;
  };
  const Setting settings[] = {
      {"padded", cfg.graph, ShiftMode::kPad},
      {"wrap-control", GraphConfig{0, WeightFn::kConstant}, ShiftMode::kWrap},
  };
  for (const Setting& setting : settings) {
    for (Variant v : {Variant::kCheb, Variant::kGraphConv}) {
      ModelConfig model = cfg.model;
      model.variant = v;
      const RunOutcome run = train_and_evaluate(task, model, cfg.train, setting.graph);
      RobustnessCurve c;
      c.variant = v;
      c.setting = setting.name;
      c.graph = resolved_graph(setting.graph, cfg.data.n_nodes);
      c.mode = setting.mode;
      c.unshifted = run.test_report;
      c.points = robustness_sweep(run.training.params, task.test, setting.graph, run.thresholds, cfg.shifts, pad,
                                  setting.mode);
      out.push_back(std::move(c));
    }
  }
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 for a single run
};

inline MeanStd mean_std(std::span<const double> xs) {
  MeanStd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return r;
}

struct AblationCell {
  Variant variant = Variant::kCheb;
  std::size_t q = 0;  // resolved
  bool fully_connected = false;
  WeightFn weight_fn = WeightFn::kInverseDm;
  std::vector<MetricsReport> runs;
  std::optional<std::string> error;

  MeanStd summarize(double (*metric)(const MetricsReport&)) const {
    std::vector<double> xs;
    for (const auto& r : runs) xs.push_back(metric(r));
    return mean_std(xs);
  }
};

namespace metric {
inline double f1(const MetricsReport& r) { return r.macro.f1; }
inline double recall(const MetricsReport& r) { return r.macro.recall; }
inline double precision(const MetricsReport& r) { return r.macro.precision; }
inline double accuracy(const MetricsReport& r) { return r.macro.accuracy; }
inline double auroc(const MetricsReport& r) { return r.macro_auroc.value_or(std::nan("")); }
}  // namespace metric

// Every (variant, q, weight_fn) cell trained `seeds` times on one synthetic
// task. Run r of every cell uses train seed cfg.train.seed + r. A failing
// cell records its error and the grid moves on.
inline std::vector<AblationCell> run_ablation(const ExperimentConfig& cfg) {
  const SynthTask task = generate_task(cfg.data);
  std::vector<AblationCell> cells;
  for (Variant v : cfg.ablation.variants) {
    for (std::size_t q_raw : cfg.ablation.q_values) {
      for (WeightFn fn : cfg.ablation.weight_fns) {
        AblationCell cell;
        cell.variant = v;
        cell.q = resolve_q(q_raw, cfg.data.n_nodes);
        cell.fully_connected = cell.q + 1 >= cfg.data.n_nodes;
        cell.weight_fn = fn;
        try {
          for (std::size_t r = 0; r < cfg.ablation.seeds; ++r) {
            ModelConfig model = cfg.model;
            model.variant = v;
            TrainConfig train_cfg = cfg.train;
            train_cfg.seed = cfg.train.seed + r;
            cell.runs.push_back(train_and_evaluate(task, model, train_cfg, GraphConfig{cell.q, fn}).test_report);
          }
        } catch (const Error& e) {
          cell.error = e.what();
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

}  // namespace ctgraph
