#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "btcdir/core/error.hpp"

namespace btcdir {

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;  // undefined for single-class labels
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t count() const { return tp + fp + tn + fn; }
  double positive_rate() const { return count() ? static_cast<double>(tp + fn) / static_cast<double>(count()) : 0.0; }
  double predicted_positive_rate() const {
    return count() ? static_cast<double>(tp + fp) / static_cast<double>(count()) : 0.0;
  }
  /// Every row predicted class 1 (the "always long" pattern).
  bool all_positive() const { return count() > 0 && fn + tn == 0; }
  bool all_negative() const { return count() > 0 && tp + fp == 0; }
};

/// Area under the ROC curve as the Mann-Whitney statistic with mid-ranks for
/// tied scores. nullopt when a class is absent.
inline std::optional<double> rank_auc(std::span<const double> probs, std::span<const int> labels) {
  const std::size_t n = probs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });
  double pos = 0, rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && probs[order[j]] == probs[order[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] == 1) rank_sum += mid;
    i = j;
  }
  for (int l : labels) pos += l == 1;
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

/// Confusion-matrix metrics at `threshold` (predict 1 iff p >= threshold) and
/// the rank AUC.
inline Metrics evaluate(std::span<const double> probs, std::span<const int> labels, double threshold = 0.5) {
  if (probs.size() != labels.size()) throw DimensionError("evaluate: probabilities and labels differ in length");
  Metrics m;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred = probs[i] >= threshold, actual = labels[i] == 1;
    if (pred && actual) ++m.tp;
    else if (pred) ++m.fp;
    else if (actual) ++m.fn;
    else ++m.tn;
  }
  const auto d = [](std::size_t a) { return static_cast<double>(a); };
  if (m.count()) m.accuracy = d(m.tp + m.tn) / d(m.count());
  if (m.tp + m.fp) m.precision = d(m.tp) / d(m.tp + m.fp);
  if (m.tp + m.fn) m.recall = d(m.tp) / d(m.tp + m.fn);
  if (m.precision + m.recall > 0) m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
  m.auc = rank_auc(probs, labels);
  return m;
}

/// Component-wise mean. AUC is averaged over the folds that define it.
inline Metrics mean_metrics(std::span<const Metrics> ms) {
  Metrics out;
  if (ms.empty()) return out;
  double auc = 0;
  std::size_t auc_n = 0;
  for (const auto& m : ms) {
    out.accuracy += m.accuracy;
    out.precision += m.precision;
    out.recall += m.recall;
    out.f1 += m.f1;
    out.tp += m.tp;
    out.fp += m.fp;
    out.tn += m.tn;
    out.fn += m.fn;
    if (m.auc) {
      auc += *m.auc;
      ++auc_n;
    }
  }
  const double n = static_cast<double>(ms.size());
  out.accuracy /= n;
  out.precision /= n;
  out.recall /= n;
  out.f1 /= n;
  if (auc_n) out.auc = auc / static_cast<double>(auc_n);
  return out;
}

struct RocPoint {
  double threshold;  // predict 1 iff p >= threshold
  double fpr;
  double tpr;
};

/// ROC operating points, one per distinct score in decreasing order, preceded
/// by the empty-prediction point (threshold +inf). Both classes required.
inline std::vector<RocPoint> roc_curve(std::span<const double> probs, std::span<const int> labels) {
  if (probs.size() != labels.size()) throw DimensionError("roc_curve: probabilities and labels differ in length");
  double pos = 0;
  for (int l : labels) pos += l == 1;
  const double neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0 || neg == 0) throw DegenerateLabelError("ROC curve needs both classes");
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  std::vector<RocPoint> out{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = probs[order[i]];
    while (i < order.size() && probs[order[i]] == t) {
      (labels[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    out.push_back({t, fp / neg, tp / pos});
  }
  return out;
}

inline double trapezoid_auc(std::span<const RocPoint> roc) {
  double area = 0;
  for (std::size_t i = 1; i < roc.size(); ++i) area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
  return area;
}

inline nlohmann::json to_json(const Metrics& m) {
  nlohmann::json j{{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
                   {"tp", m.tp},             {"fp", m.fp},               {"tn", m.tn},         {"fn", m.fn}};
  j["auc"] = m.auc ? nlohmann::json(*m.auc) : nlohmann::json(nullptr);
  return j;
}

inline Metrics metrics_from_json(const nlohmann::json& j) {
  Metrics m;
  m.accuracy = j.at("accuracy").get<double>();
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.tp = j.at("tp").get<std::size_t>();
  m.fp = j.at("fp").get<std::size_t>();
  m.tn = j.at("tn").get<std::size_t>();
  m.fn = j.at("fn").get<std::size_t>();
  if (!j.at("auc").is_null()) m.auc = j["auc"].get<double>();
  return m;
}

}  // namespace btcdir
