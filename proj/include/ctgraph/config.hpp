#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctgraph/error.hpp"
#include "ctgraph/graph_builder.hpp"
#include "ctgraph/model.hpp"
#include "ctgraph/optim.hpp"
#include "ctgraph/synth.hpp"
#include "ctgraph/train.hpp"

namespace ctgraph {

struct AblationGrid {
  std::vector<Variant> variants{Variant::kCheb, Variant::kGraphConv};
  std::vector<std::size_t> q_values{4, 16, 0};  // 0 = fully connected
  std::vector<WeightFn> weight_fns{WeightFn::kInverseDm, WeightFn::kExpDecay, WeightFn::kConstant};
  std::size_t seeds = 3;
};

// Everything one experiment needs. Defaults are the desk-scale setup:
// N = 20, d = 16, 4 labels, 2000 steps at batch 4 with 10% warmup. The head
// hidden layer is as wide as the features; at d = 16 a d/2 head loses too many
// units to dead ReLUs.
struct ExperimentConfig {
  SynthTaskConfig data;
  ModelConfig model;
  TrainConfig train;
  GraphConfig graph;
  AblationGrid ablation;
  std::vector<long> shifts{0, 2, 4, 8, 16};

  ExperimentConfig() {
    sync_model_shape();
    train.total_steps = 2000;
    train.warmup_steps = 200;
    train.max_lr = 3e-3;
    train.batch_size = 4;
    train.log_every = 50;
  }

  // Keeps the model shape in step with the data it will see.
  void sync_model_shape() {
    model.feature_dim = data.feature_dim;
    model.n_labels = data.n_labels;
    model.head_hidden = data.feature_dim;
  }

  void validate() const {
    data.validate();
    model.validate();
    train.validate();
    require(graph.q >= 1, "graph.q must be >= 1");
    require(ablation.seeds >= 1, "ablation.seeds must be >= 1");
  }
};

// Fully connected for a graph of n nodes when q is 0 or reaches n-1.
inline std::size_t resolve_q(std::size_t q, std::size_t n_nodes) { return q == 0 ? n_nodes - 1 : q; }

namespace detail {

using nlohmann::json;

template <typename T>
void read_key(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + where + "." + key + "'");
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::read_key;
  using detail::reject_unknown;
  ExperimentConfig cfg;
  reject_unknown(j, {"data", "model", "train", "graph", "ablation", "robustness"}, "root");

  if (j.contains("data")) {
    const auto& d = j["data"];
    reject_unknown(d,
                   {"n_nodes", "feature_dim", "n_labels", "n_train", "n_val", "n_test", "local_labels",
                    "diffuse_labels", "noise_std", "signal_scale", "positive_rate", "spacing_z_mm", "seed"},
                   "data");
    read_key(d, "n_nodes", cfg.data.n_nodes);
    read_key(d, "feature_dim", cfg.data.feature_dim);
    read_key(d, "n_labels", cfg.data.n_labels);
    read_key(d, "n_train", cfg.data.n_train);
    read_key(d, "n_val", cfg.data.n_val);
    read_key(d, "n_test", cfg.data.n_test);
    read_key(d, "local_labels", cfg.data.local_labels);
    read_key(d, "diffuse_labels", cfg.data.diffuse_labels);
    read_key(d, "noise_std", cfg.data.noise_std);
    read_key(d, "signal_scale", cfg.data.signal_scale);
    read_key(d, "positive_rate", cfg.data.positive_rate);
    read_key(d, "spacing_z_mm", cfg.data.spacing_z_mm);
    read_key(d, "seed", cfg.data.seed);
  }
  cfg.sync_model_shape();

  if (j.contains("model")) {
    const auto& m = j["model"];
    reject_unknown(m, {"variant", "cheb_order", "n_layers", "head_hidden"}, "model");
    std::string variant = std::string(to_string(cfg.model.variant));
    read_key(m, "variant", variant);
    cfg.model.variant = parse_variant(variant);
    read_key(m, "cheb_order", cfg.model.cheb_order);
    read_key(m, "n_layers", cfg.model.n_layers);
    read_key(m, "head_hidden", cfg.model.head_hidden);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    reject_unknown(t,
                   {"batch_size", "max_lr", "warmup_steps", "total_steps", "weight_decay", "beta1", "beta2",
                    "adam_eps", "seed", "log_every"},
                   "train");
    read_key(t, "batch_size", cfg.train.batch_size);
    read_key(t, "max_lr", cfg.train.max_lr);
    read_key(t, "warmup_steps", cfg.train.warmup_steps);
    read_key(t, "total_steps", cfg.train.total_steps);
    read_key(t, "weight_decay", cfg.train.weight_decay);
    read_key(t, "beta1", cfg.train.beta1);
    read_key(t, "beta2", cfg.train.beta2);
    read_key(t, "adam_eps", cfg.train.adam_eps);
    read_key(t, "seed", cfg.train.seed);
    read_key(t, "log_every", cfg.train.log_every);
  }
  if (j.contains("graph")) {
    const auto& g = j["graph"];
    reject_unknown(g, {"q", "weight_fn"}, "graph");
    read_key(g, "q", cfg.graph.q);
    std::string fn = std::string(to_string(cfg.graph.weight_fn));
    read_key(g, "weight_fn", fn);
    cfg.graph.weight_fn = parse_weight_fn(fn);
  }
  if (j.contains("ablation")) {
    const auto& a = j["ablation"];
    reject_unknown(a, {"variants", "q_values", "weight_fns", "seeds"}, "ablation");
    if (a.contains("variants")) {
      std::vector<std::string> names;
      read_key(a, "variants", names);
      cfg.ablation.variants.clear();
      for (const auto& n : names) cfg.ablation.variants.push_back(parse_variant(n));
    }
    read_key(a, "q_values", cfg.ablation.q_values);
    if (a.contains("weight_fns")) {
      std::vector<std::string> names;
      read_key(a, "weight_fns", names);
      cfg.ablation.weight_fns.clear();
      for (const auto& n : names) cfg.ablation.weight_fns.push_back(parse_weight_fn(n));
    }
    read_key(a, "seeds", cfg.ablation.seeds);
  }
  if (j.contains("robustness")) {
    const auto& r = j["robustness"];
    reject_unknown(r, {"shifts"}, "robustness");
    read_key(r, "shifts", cfg.shifts);
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatErrc::kOpenFailed, path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

}  // namespace ctgraph
