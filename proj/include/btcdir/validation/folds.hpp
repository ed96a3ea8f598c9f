#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "btcdir/core/error.hpp"
#include "btcdir/core/fingerprint.hpp"

namespace btcdir {

struct Fold {
  IndexRange train;  // always starts at the first row (expanding window)
  IndexRange test;
};

struct FoldPlan {
  std::vector<Fold> folds;

  std::size_t size() const { return folds.size(); }

  /// Throws IntegrityError unless the plan is walk-forward: each test block
  /// follows its train window, blocks are disjoint and ordered, and train
  /// windows are nested.
  void validate() const {
    for (std::size_t i = 0; i < folds.size(); ++i) {
      const auto& f = folds[i];
      if (f.train.size() == 0 || f.test.size() == 0) throw IntegrityError("fold " + std::to_string(i) + " is empty");
      if (f.train.end > f.test.begin) throw IntegrityError("fold " + std::to_string(i) + " tests before it trains");
      if (i > 0) {
        const auto& p = folds[i - 1];
        if (f.test.begin < p.test.end) throw IntegrityError("test blocks overlap or are out of order");
        if (f.train.begin != p.train.begin || f.train.end < p.train.end) throw IntegrityError("train windows are not nested");
      }
    }
  }

  /// Same plan with every index shifted by `offset`.
  FoldPlan shifted(std::size_t offset) const {
    FoldPlan p = *this;
    for (auto& f : p.folds) {
      f.train = {f.train.begin + offset, f.train.end + offset};
      f.test = {f.test.begin + offset, f.test.end + offset};
    }
    return p;
  }
};

/// k expanding-window folds. Equal test blocks of floor((n - ceil(m n)) / k)
/// rows tile the tail of the series; fold i trains on every row before its
/// block. Rows left over by the rounding join the first training window.
inline FoldPlan time_series_folds(std::size_t n_rows, std::size_t k, double min_train_fraction) {
  if (k < 2) throw ConfigError("time_series_folds: k must be at least 2");
  if (!(min_train_fraction > 0.0 && min_train_fraction < 1.0))
    throw ConfigError("time_series_folds: min_train_fraction must lie in (0, 1)");
  const auto min_train = static_cast<std::size_t>(std::ceil(min_train_fraction * static_cast<double>(n_rows) - 1e-9));
  if (min_train < 1 || min_train >= n_rows)
    throw ConfigError("time_series_folds: " + std::to_string(n_rows) + " rows leave no room for a training prefix");
  const std::size_t block = (n_rows - min_train) / k;
  if (block < 1)
    throw ConfigError("time_series_folds: " + std::to_string(n_rows) + " rows cannot hold " + std::to_string(k) +
                      " test blocks");
  const std::size_t start = n_rows - k * block;
  FoldPlan plan;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t s = start + i * block;
    plan.folds.push_back({{0, s}, {s, s + block}});
  }
  return plan;
}

inline nlohmann::json to_json(const FoldPlan& p) {
  auto arr = nlohmann::json::array();
  for (const auto& f : p.folds) arr.push_back({{"train", {f.train.begin, f.train.end}}, {"test", {f.test.begin, f.test.end}}});
  return arr;
}

}  // namespace btcdir
