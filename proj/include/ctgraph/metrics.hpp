#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "ctgraph/error.hpp"
#include "ctgraph/matrix.hpp"

namespace ctgraph {

// Post-sigmoid scores and binary targets, one row per sample.
struct PredictionSet {
  Matrix scores;                         // M x n_labels, in [0, 1]
  std::vector<std::vector<std::uint8_t>> labels;  // M rows of n_labels

  std::size_t n_samples() const { return scores.rows(); }
  std::size_t n_labels() const { return scores.cols(); }

  std::vector<double> score_column(std::size_t label) const {
    std::vector<double> c(n_samples());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = scores(i, label);
    return c;
  }
  std::vector<std::uint8_t> label_column(std::size_t label) const {
    std::vector<std::uint8_t> c(n_samples());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = labels[i][label];
    return c;
  }

  void validate() const {
    require(labels.size() == scores.rows(), "PredictionSet: row count mismatch");
    for (const auto& row : labels) require(row.size() == scores.cols(), "PredictionSet: label width mismatch");
  }
};

struct Counts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

// A sample is predicted positive iff score >= threshold.
inline Counts binary_counts(std::span<const double> scores, std::span<const std::uint8_t> labels, double threshold) {
  require(scores.size() == labels.size(), "binary_counts: length mismatch");
  Counts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

struct Rates {
  double f1 = 0.0, recall = 0.0, precision = 0.0, accuracy = 0.0;
};

// Zero-denominator conventions: precision 0 when nothing is predicted,
// recall 0 when nothing is positive, F1 0 when both are 0.
inline Rates f1_recall_precision_accuracy(const Counts& c) {
  Rates r;
  const double tp = static_cast<double>(c.tp);
  if (c.tp + c.fp > 0) r.precision = tp / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) r.recall = tp / static_cast<double>(c.tp + c.fn);
  if (r.precision + r.recall > 0.0) r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  const std::size_t total = c.tp + c.fp + c.tn + c.fn;
  if (total > 0) r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
  return r;
}

// Mann-Whitney AUROC from mid-ranks. Empty when the column has a single class.
inline std::optional<double> auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  require(scores.size() == labels.size(), "auroc: length mismatch");
  const std::size_t m = scores.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Ranks are doubled (2 * mid-rank) so tied groups stay integral.
  std::uint64_t positives = 0;
  std::uint64_t doubled_rank_sum = 0;
  for (std::size_t start = 0; start < m;) {
    std::size_t end = start;
    while (end < m && scores[order[end]] == scores[order[start]]) ++end;
    const std::uint64_t doubled_mid = start + end + 1;  // (start+1) + end, both 1-based
    for (std::size_t k = start; k < end; ++k) {
      if (labels[order[k]]) {
        ++positives;
        doubled_rank_sum += doubled_mid;
      }
    }
    start = end;
  }
  const std::uint64_t negatives = m - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  // 2U = 2 R_pos - n_pos (n_pos + 1)
  const std::uint64_t doubled_u = doubled_rank_sum - positives * (positives + 1);
  return static_cast<double>(doubled_u) / (2.0 * static_cast<double>(positives * negatives));
}

// Candidate thresholds: 0, 1, and midpoints between consecutive distinct scores.
inline std::vector<double> threshold_candidates(std::span<const double> scores) {
  std::vector<double> unique(scores.begin(), scores.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<double> out{0.0};
  for (std::size_t i = 0; i + 1 < unique.size(); ++i) {
    double mid = 0.5 * (unique[i] + unique[i + 1]);
    if (!(mid > unique[i])) mid = unique[i + 1];
    out.push_back(mid);
  }
  out.push_back(1.0);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Threshold with the highest F1; ties go to the smallest threshold.
inline double select_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  double best_t = 0.0;
  double best_f1 = -1.0;
  for (double t : threshold_candidates(scores)) {
    const double f1 = f1_recall_precision_accuracy(binary_counts(scores, labels, t)).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = t;
    }
  }
  return best_t;
}

inline std::vector<double> select_thresholds(const PredictionSet& val) {
  val.validate();
  require(val.n_samples() > 0, "select_thresholds: empty validation set");
  std::vector<double> out(val.n_labels());
  for (std::size_t l = 0; l < val.n_labels(); ++l) out[l] = select_threshold(val.score_column(l), val.label_column(l));
  return out;
}

struct LabelMetrics {
  double threshold = 0.5;
  Counts counts;
  Rates rates;
  std::optional<double> auroc;
};

struct MetricsReport {
  std::vector<LabelMetrics> per_label;
  Rates macro;                       // unweighted mean over labels
  std::optional<double> macro_auroc;  // mean over labels with both classes
  Rates micro;                       // from pooled counts
  std::optional<double> micro_auroc;  // from pooled (score, label) pairs
  std::size_t excluded_auroc_labels = 0;
};

inline MetricsReport evaluate(const PredictionSet& test, std::span<const double> thresholds) {
  test.validate();
  require(thresholds.size() == test.n_labels(), "evaluate: one threshold per label required");
  MetricsReport report;
  Counts pooled;
  std::vector<double> all_scores;
  std::vector<std::uint8_t> all_labels;
  double auroc_sum = 0.0;
  std::size_t auroc_n = 0;

  for (std::size_t l = 0; l < test.n_labels(); ++l) {
    const auto scores = test.score_column(l);
    const auto labels = test.label_column(l);
    LabelMetrics lm;
    lm.threshold = thresholds[l];
    lm.counts = binary_counts(scores, labels, thresholds[l]);
    lm.rates = f1_recall_precision_accuracy(lm.counts);
    lm.auroc = auroc(scores, labels);
    if (lm.auroc) {
      auroc_sum += *lm.auroc;
      ++auroc_n;
    } else {
      ++report.excluded_auroc_labels;
    }
    report.macro.f1 += lm.rates.f1;
    report.macro.recall += lm.rates.recall;
    report.macro.precision += lm.rates.precision;
    report.macro.accuracy += lm.rates.accuracy;
    pooled += lm.counts;
    all_scores.insert(all_scores.end(), scores.begin(), scores.end());
    all_labels.insert(all_labels.end(), labels.begin(), labels.end());
    report.per_label.push_back(lm);
  }
  const double n = static_cast<double>(test.n_labels());
  report.macro.f1 /= n;
  report.macro.recall /= n;
  report.macro.precision /= n;
  report.macro.accuracy /= n;
  if (auroc_n > 0) report.macro_auroc = auroc_sum / static_cast<double>(auroc_n);
  report.micro = f1_recall_precision_accuracy(pooled);
  report.micro_auroc = auroc(all_scores, all_labels);
  return report;
}

}  // namespace ctgraph
