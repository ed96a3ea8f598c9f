#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "btcdir/core/error.hpp"
#include "btcdir/core/fingerprint.hpp"
#include "btcdir/core/json_io.hpp"
#include "btcdir/core/matrix.hpp"

namespace btcdir {

/// Per-feature mean and sample standard deviation over the fitted rows.
/// Constant columns get std 1 and therefore standardize to 0.
struct Standardizer {
  Vector means;
  Vector stds;
  FitFingerprint fingerprint;

  Eigen::Index features() const { return means.size(); }

  Matrix apply(const Matrix& x) const {
    if (x.cols() != means.size())
      throw DimensionError("standardizer fitted on " + std::to_string(means.size()) + " features, got " +
                           std::to_string(x.cols()));
    Matrix z = x.rowwise() - means.transpose();
    return z.array().rowwise() / stds.transpose().array();
  }
};

inline Standardizer fit_standardizer(const Matrix& x, std::span<const std::size_t> row_scope,
                                     std::string artifact_id = "standardizer") {
  if (row_scope.empty()) throw ConfigError("fit_standardizer: empty row scope");
  Matrix rows = take_rows(x, row_scope);
  if (!rows.allFinite()) throw IntegrityError("fit_standardizer: non-finite values in scope");
  Standardizer s;
  const double n = static_cast<double>(rows.rows());
  s.means = rows.colwise().mean().transpose();
  s.stds.resize(rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    const double ss = (rows.col(j).array() - s.means(j)).square().sum();
    const double sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    // Relative test so that float noise on a constant column counts as constant.
    s.stds(j) = sd > 1e-12 * std::max(1.0, std::abs(s.means(j))) ? sd : 1.0;
  }
  s.fingerprint = {std::move(artifact_id), IndexSet::from_indices(row_scope)};
  return s;
}

/// Principal axes of the standardized features. Components are the rows of
/// `components` (k x d), orthonormal, ordered by decreasing variance, with
/// the largest-magnitude loading of each made positive.
struct PcaModel {
  Vector mean;              // d
  Matrix components;        // k x d
  std::vector<double> evr;  // k leading explained-variance ratios
  std::vector<double> spectrum;  // ratios of every component (sums to 1)
  double target = 1.0;
  FitFingerprint fingerprint;

  std::size_t k() const { return static_cast<std::size_t>(components.rows()); }
  Eigen::Index features() const { return mean.size(); }

  double cumulative_evr() const {
    double s = 0.0;
    for (double v : evr) s += v;
    return s;
  }

  /// Scores of already-standardized rows.
  Matrix project(const Matrix& z) const {
    if (z.cols() != mean.size())
      throw DimensionError("PCA fitted on " + std::to_string(mean.size()) + " features, got " + std::to_string(z.cols()));
    return (z.rowwise() - mean.transpose()) * components.transpose();
  }

  Matrix reconstruct(const Matrix& scores) const {
    if (scores.cols() != components.rows()) throw DimensionError("reconstruct: score width differs from k");
    return (scores * components).rowwise() + mean.transpose();
  }
};

/// Smallest k whose cumulative ratio reaches target (1e-12 slack for rounding).
inline std::size_t components_for_target(std::span<const double> ratios, double target) {
  double cum = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    cum += ratios[i];
    if (cum >= target - 1e-12) return i + 1;
  }
  return ratios.size();
}

inline PcaModel fit_pca(const Matrix& x_std, double target, std::span<const std::size_t> row_scope,
                        std::string artifact_id = "pca") {
  if (!(target > 0.0 && target <= 1.0)) throw ConfigError("fit_pca: target must lie in (0, 1]");
  if (row_scope.size() < 2) throw ConfigError("fit_pca: need at least two rows");
  Matrix rows = take_rows(x_std, row_scope);
  PcaModel m;
  m.target = target;
  m.mean = rows.colwise().mean().transpose();
  Matrix centered = rows.rowwise() - m.mean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(centered), Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  const Eigen::MatrixXd v = svd.matrixV();

  const double total = sv.squaredNorm();
  if (!(total > 0.0)) throw ConfigError("fit_pca: data has zero variance");
  const double tol = sv(0) * 1e-12 * static_cast<double>(std::max(rows.rows(), rows.cols()));
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > tol;

  m.spectrum.resize(static_cast<std::size_t>(sv.size()));
  for (Eigen::Index i = 0; i < sv.size(); ++i) m.spectrum[static_cast<std::size_t>(i)] = sv(i) * sv(i) / total;

  const std::size_t k = std::min(components_for_target(m.spectrum, target), std::max<std::size_t>(rank, 1));
  m.components.resize(static_cast<Eigen::Index>(k), rows.cols());
  for (std::size_t c = 0; c < k; ++c) {
    Eigen::VectorXd axis = v.col(static_cast<Eigen::Index>(c));
    Eigen::Index pivot = 0;
    axis.cwiseAbs().maxCoeff(&pivot);
    if (axis(pivot) < 0) axis = -axis;
    m.components.row(static_cast<Eigen::Index>(c)) = axis.transpose();
    m.evr.push_back(m.spectrum[c]);
  }
  m.fingerprint = {std::move(artifact_id), IndexSet::from_indices(row_scope)};
  return m;
}

/// Standardize, center, and project onto the stored components. Output has
/// one row per input row and k columns.
inline Matrix transform(const PcaModel& model, const Standardizer& standardizer, const Matrix& x) {
  if (x.cols() != standardizer.features() || standardizer.features() != model.features())
    throw DimensionError("transform: input has " + std::to_string(x.cols()) + " features, model expects " +
                         std::to_string(model.features()));
  return model.project(standardizer.apply(x));
}

/// Scaler + PCA fitted on the same rows.
struct Reduction {
  Standardizer scaler;
  PcaModel pca;

  Matrix apply(const Matrix& x) const { return transform(pca, scaler, x); }
};

inline Reduction fit_reduction(const Matrix& x, double target, std::span<const std::size_t> row_scope) {
  Reduction r;
  r.scaler = fit_standardizer(x, row_scope);
  r.pca = fit_pca(r.scaler.apply(x), target, row_scope);
  return r;
}

inline nlohmann::json to_json(const Standardizer& s) {
  return {{"means", to_std(s.means)}, {"stds", to_std(s.stds)}, {"fingerprint", to_json(s.fingerprint)}};
}

inline Standardizer standardizer_from_json(const nlohmann::json& j) {
  Standardizer s;
  s.means = vector_from_json(j.at("means"));
  s.stds = vector_from_json(j.at("stds"));
  s.fingerprint = fingerprint_from_json(j.at("fingerprint"));
  if (s.means.size() != s.stds.size()) throw SchemaError("standardizer: means/stds length differ");
  return s;
}

inline nlohmann::json to_json(const PcaModel& m) {
  return {{"format", "btcdir.pca"}, {"version", 1},           {"mean", to_std(m.mean)},
          {"components", to_json(m.components)}, {"evr", m.evr}, {"spectrum", m.spectrum},
          {"target", m.target}, {"fingerprint", to_json(m.fingerprint)}};
}

inline PcaModel pca_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "btcdir.pca" || j.value("version", 0) != 1) throw SchemaError("not a btcdir.pca v1 document");
  PcaModel m;
  m.mean = vector_from_json(j.at("mean"));
  m.components = matrix_from_json(j.at("components"), m.mean.size());
  m.evr = j.at("evr").get<std::vector<double>>();
  m.spectrum = j.at("spectrum").get<std::vector<double>>();
  m.target = j.at("target").get<double>();
  m.fingerprint = fingerprint_from_json(j.at("fingerprint"));
  if (m.components.cols() != m.mean.size() || m.evr.size() != m.k()) throw SchemaError("pca: inconsistent shapes");
  return m;
}

inline nlohmann::json to_json(const Reduction& r) { return {{"scaler", to_json(r.scaler)}, {"pca", to_json(r.pca)}}; }

inline Reduction reduction_from_json(const nlohmann::json& j) {
  return {standardizer_from_json(j.at("scaler")), pca_from_json(j.at("pca"))};
}

}  // namespace btcdir
