#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctgraph/experiments.hpp"
#include "ctgraph/metrics.hpp"

namespace ctgraph {

using nlohmann::json;

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const Rates& r) {
  return {{"f1", r.f1}, {"recall", r.recall}, {"precision", r.precision}, {"accuracy", r.accuracy}};
}

inline json to_json(const MetricsReport& r) {
  json labels = json::array();
  for (std::size_t l = 0; l < r.per_label.size(); ++l) {
    const auto& lm = r.per_label[l];
    json entry = to_json(lm.rates);
    entry["label"] = l;
    entry["threshold"] = lm.threshold;
    entry["auroc"] = optional_json(lm.auroc);
    entry["counts"] = {{"tp", lm.counts.tp}, {"fp", lm.counts.fp}, {"tn", lm.counts.tn}, {"fn", lm.counts.fn}};
    labels.push_back(std::move(entry));
  }
  json macro = to_json(r.macro);
  macro["auroc"] = optional_json(r.macro_auroc);
  json micro = to_json(r.micro);
  micro["auroc"] = optional_json(r.micro_auroc);
  return {{"per_label", labels},
          {"macro", macro},
          {"micro", micro},
          {"auroc_excluded_labels", r.excluded_auroc_labels}};
}

inline json to_json(const std::vector<ShiftPoint>& curve) {
  json out = json::array();
  for (const auto& p : curve) out.push_back({{"shift", p.shift}, {"macro_f1", p.macro_f1}, {"label_f1", p.label_f1}});
  return out;
}

inline json to_json(const std::vector<RobustnessCurve>& curves) {
  json out = json::array();
  for (const auto& c : curves) {
    out.push_back({{"variant", to_string(c.variant)},
                   {"setting", c.setting},
                   {"q", c.graph.q},
                   {"weight_fn", to_string(c.graph.weight_fn)},
                   {"shift_mode", c.mode == ShiftMode::kPad ? "pad" : "wrap"},
                   {"unshifted", to_json(c.unshifted)},
                   {"curve", to_json(c.points)}});
  }
  return out;
}

inline json to_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

inline json to_json(const std::vector<AblationCell>& cells) {
  json out = json::array();
  for (const auto& c : cells) {
    json cell = {{"variant", to_string(c.variant)},
                 {"q", c.q},
                 {"fully_connected", c.fully_connected},
                 {"weight_fn", to_string(c.weight_fn)},
                 {"n_runs", c.runs.size()}};
    if (c.error) {
      cell["error"] = *c.error;
    } else {
      cell["f1"] = to_json(c.summarize(metric::f1));
      cell["recall"] = to_json(c.summarize(metric::recall));
      cell["precision"] = to_json(c.summarize(metric::precision));
      cell["auroc"] = to_json(c.summarize(metric::auroc));
      cell["accuracy"] = to_json(c.summarize(metric::accuracy));
      json runs = json::array();
      for (const auto& r : c.runs) runs.push_back(to_json(r));
      cell["runs"] = runs;
    }
    out.push_back(std::move(cell));
  }
  return out;
}

namespace detail {

inline std::string pm(const MeanStd& m) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%6.2f +- %5.2f", 100.0 * m.mean, 100.0 * m.std);
  return buf;
}

inline std::string connectivity_name(const AblationCell& c) {
  return c.fully_connected ? "fully connected (q=" + std::to_string(c.q) + ")" : "q=" + std::to_string(c.q);
}

inline void table_row(std::ostringstream& os, const AblationCell& c, const std::string& lead) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%-28s %-10s %-11s", lead.c_str(), std::string(to_string(c.variant)).c_str(),
                std::string(to_string(c.weight_fn)).c_str());
  os << buf;
  if (c.error) {
    os << "  failed: " << *c.error << '\n';
    return;
  }
  for (auto fn : {metric::f1, metric::recall, metric::precision, metric::auroc, metric::accuracy})
    os << "  " << pm(c.summarize(fn));
  os << '\n';
}

inline void table_header(std::ostringstream& os) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-28s %-10s %-11s  %-15s  %-15s  %-15s  %-15s  %-15s\n", "connectivity", "module",
                "weight", "F1", "Recall", "Precision", "AUROC", "Accuracy");
  os << buf;
}

}  // namespace detail

// Aligned plain-text tables: connectivity x module, neighbourhood size, and
// edge weighting, followed by the full grid. Metrics in percent, mean +- std.
inline std::string ablation_table(const std::vector<AblationCell>& cells) {
  std::ostringstream os;
  auto section = [&](const std::string& title, auto&& keep) {
    os << "== " << title << " ==\n";
    detail::table_header(os);
    for (const auto& c : cells)
      if (keep(c)) detail::table_row(os, c, detail::connectivity_name(c));
    os << '\n';
  };

  section("Connectivity x module (inverse-dm weights)",
          [](const AblationCell& c) { return c.weight_fn == WeightFn::kInverseDm; });
  section("Neighbourhood size (graphconv, inverse-dm weights)", [](const AblationCell& c) {
    return c.variant == Variant::kGraphConv && c.weight_fn == WeightFn::kInverseDm;
  });
  section("Edge weighting (graphconv, fully connected)",
          [](const AblationCell& c) { return c.variant == Variant::kGraphConv && c.fully_connected; });
  section("Full grid", [](const AblationCell&) { return true; });
  return os.str();
}

}  // namespace ctgraph
