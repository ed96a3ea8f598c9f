#pragma once

// Synthetic datasets and small search spaces shared by the tests.

#include <string>

#include <json.hpp>

#include "btcdir/core/rng.hpp"
#include "btcdir/validation.hpp"

namespace btcdir::fixtures {

/// Uniform features in [-1, 1]; y = [x0 > 0], each label flipped with
/// probability `noise`.
inline LabeledDataset synthetic(std::size_t n, Eigen::Index d, double noise, std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset ds;
  ds.x.resize(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) ds.x(static_cast<Eigen::Index>(i), j) = rng.uniform(-1, 1);
    int label = ds.x(static_cast<Eigen::Index>(i), 0) > 0;
    if (rng.uniform() < noise) label = 1 - label;
    ds.y.push_back(label);
    ds.dates.push_back(Date(2015, 1, 1) + static_cast<int>(i));
  }
  for (Eigen::Index j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j));
  return ds;
}

/// Small per-model spaces that keep nested CV fast.
inline SearchSpace default_space(ModelKind kind) {
  switch (kind) {
    case ModelKind::svm:
      return SearchSpace::from_json(nlohmann::json::parse(
          R"({"C": {"low": 0.1, "high": 100, "scale": "log"}, "kernel": ["linear"], "gamma": {"low": 1e-3, "high": 1, "scale": "log"}})"));
    case ModelKind::xgb_like:
      return SearchSpace::from_json(nlohmann::json::parse(
          R"({"n_rounds": {"low": 10, "high": 60, "type": "integer"}, "learning_rate": {"low": 0.05, "high": 0.5, "scale": "log"}})"));
    case ModelKind::random_forest:
      return SearchSpace::from_json(nlohmann::json::parse(
          R"({"n_trees": [30], "max_depth": {"low": 2, "high": 8, "type": "integer"}})"));
    case ModelKind::bernoulli_nb:
      return SearchSpace::from_json(nlohmann::json::parse(R"({"alpha": {"low": 0.01, "high": 10, "scale": "log"}})"));
  }
  return {};
}

}  // namespace btcdir::fixtures
