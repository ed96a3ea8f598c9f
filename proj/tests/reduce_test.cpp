#include <gtest/gtest.h>

#include <cmath>

#include "btcdir/core/rng.hpp"
#include "btcdir/reduce.hpp"
#include "oracles/jacobi.hpp"

namespace btcdir {
namespace {

Matrix random_matrix(Rng& rng, Eigen::Index n, Eigen::Index d) {
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rng.uniform(-1, 1);
  return m;
}

// Correlated features with a decaying spectrum.
Matrix correlated(Rng& rng, Eigen::Index n, Eigen::Index d) {
  Matrix latent = random_matrix(rng, n, d);
  Matrix mix = random_matrix(rng, d, d);
  for (Eigen::Index j = 0; j < d; ++j) latent.col(j) *= std::pow(0.6, static_cast<double>(j));
  return latent * mix;
}

std::vector<std::vector<double>> rows_of(const Matrix& m) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)].push_back(m(i, j));
  return out;
}

TEST(Standardizer, SampleStatistics) {
  Matrix x(2, 1);
  x << 1, 3;
  auto all = iota_rows(0, 2);
  auto s = fit_standardizer(x, all);
  EXPECT_DOUBLE_EQ(s.means(0), 2.0);
  EXPECT_DOUBLE_EQ(s.stds(0), std::sqrt(2.0));
}

TEST(Standardizer, TrainingColumnsHaveZeroMeanUnitStd) {
  Rng rng(1);
  Matrix x = random_matrix(rng, 50, 4) * 30.0;
  auto rows = iota_rows(0, 50);
  auto s = fit_standardizer(x, rows);
  Matrix z = s.apply(x);
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    EXPECT_NEAR(z.col(j).mean(), 0.0, 1e-12);
    EXPECT_NEAR(std::sqrt((z.col(j).array() - z.col(j).mean()).square().sum() / 49.0), 1.0, 1e-12);
  }
}

TEST(Standardizer, ConstantColumnMapsToZero) {
  Matrix x(3, 2);
  x << 5, 1, 5, 2, 5, 3;
  auto rows = iota_rows(0, 3);
  auto s = fit_standardizer(x, rows);
  EXPECT_EQ(s.stds(0), 1.0);
  EXPECT_TRUE((s.apply(x).col(0).array() == 0.0).all());
}

TEST(Standardizer, ScopeAndErrors) {
  Matrix x(4, 1);
  x << 0, 2, 100, 200;
  std::vector<std::size_t> scope{0, 1};
  auto s = fit_standardizer(x, scope);
  EXPECT_DOUBLE_EQ(s.means(0), 1.0);
  EXPECT_EQ(s.fingerprint.rows, IndexSet::from_range(0, 2));
  EXPECT_THROW(fit_standardizer(x, std::vector<std::size_t>{}), ConfigError);
  EXPECT_THROW(s.apply(Matrix(2, 3)), DimensionError);
}

TEST(Pca, CollinearPointsNeedOneComponent) {
  Matrix x(5, 2);
  for (int i = 0; i < 5; ++i) x.row(i) << i, 2.0 * i + 1.0;
  auto rows = iota_rows(0, 5);
  auto m = fit_pca(x, 0.95, rows);
  ASSERT_EQ(m.k(), 1u);
  EXPECT_NEAR(m.evr[0], 1.0, 1e-12);
  auto full = fit_pca(x, 1.0, rows);
  EXPECT_EQ(full.k(), 1u);  // rank-deficient: k = rank
  EXPECT_GT(m.components(0, 1), 0.0);
}

TEST(Pca, NestedTargetsAndOrthonormality) {
  Rng rng(3);
  Matrix x = correlated(rng, 120, 12);
  auto rows = iota_rows(0, 120);
  auto s = fit_standardizer(x, rows);
  Matrix z = s.apply(x);
  auto m80 = fit_pca(z, 0.80, rows), m90 = fit_pca(z, 0.90, rows), m95 = fit_pca(z, 0.95, rows);
  EXPECT_LE(m80.k(), m90.k());
  EXPECT_LE(m90.k(), m95.k());
  for (const auto* m : {&m80, &m90, &m95}) {
    Matrix gram = m->components * m->components.transpose();
    EXPECT_LE((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-8);
    for (std::size_t i = 1; i < m->evr.size(); ++i) EXPECT_LE(m->evr[i], m->evr[i - 1] + 1e-15);
    double total = 0.0;
    for (double v : m->spectrum) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_GE(m->cumulative_evr(), m->target - 1e-12);
    // k is minimal.
    if (m->k() > 1) {
      EXPECT_LT(m->cumulative_evr() - m->evr.back(), m->target);
    }
    for (std::size_t c = 0; c < m->k(); ++c) {
      Eigen::Index idx = 0;
      m->components.row(static_cast<Eigen::Index>(c)).cwiseAbs().maxCoeff(&idx);
      EXPECT_GT(m->components(static_cast<Eigen::Index>(c), idx), 0.0);
    }
  }
}

TEST(Pca, EvrMatchesCovarianceEigenOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix x = random_matrix(rng, 20, 6);
    auto rows = iota_rows(0, 20);
    auto m = fit_pca(x, 1.0, rows);
    auto want = oracle::evr_oracle(rows_of(x));
    ASSERT_EQ(m.spectrum.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(m.spectrum[i], want[i], 1e-10);
  }
}

TEST(Pca, ReconstructionCapturesTargetVariance) {
  Rng rng(5);
  Matrix x = correlated(rng, 200, 10);
  auto rows = iota_rows(0, 200);
  auto r = fit_reduction(x, 0.95, rows);
  Matrix z = r.scaler.apply(x);
  Matrix scores = r.apply(x);
  EXPECT_EQ(scores.rows(), x.rows());  // projection, not substitution
  EXPECT_EQ(static_cast<std::size_t>(scores.cols()), r.pca.k());
  Matrix centered = z.rowwise() - r.pca.mean.transpose();
  Matrix resid = z - r.pca.reconstruct(scores);
  const double captured = 1.0 - resid.squaredNorm() / centered.squaredNorm();
  EXPECT_GE(captured, 0.95 - 1e-9);
  EXPECT_NEAR(captured, r.pca.cumulative_evr(), 1e-9);
}

TEST(Pca, SpanBasisHasZeroResidual) {
  Rng rng(6);
  Matrix x = correlated(rng, 60, 5);
  auto rows = iota_rows(0, 60);
  auto m = fit_pca(x, 0.9, rows);
  Matrix pts = m.components.rowwise() + m.mean.transpose();  // mean + each axis
  Matrix coords = m.project(pts);
  EXPECT_LE((coords - Matrix::Identity(coords.rows(), coords.cols())).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((m.reconstruct(coords) - pts).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Pca, UnseenRowsEqualDirectDotProducts) {
  Rng rng(7);
  Matrix x = correlated(rng, 80, 6);
  std::vector<std::size_t> train = iota_rows(0, 60);
  auto r = fit_reduction(x, 0.9, train);
  Matrix got = r.apply(x);
  for (Eigen::Index i = 60; i < 80; ++i)
    for (Eigen::Index c = 0; c < got.cols(); ++c) {
      double dot = 0.0;
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        dot += ((x(i, j) - r.scaler.means(j)) / r.scaler.stds(j) - r.pca.mean(j)) * r.pca.components(c, j);
      EXPECT_NEAR(got(i, c), dot, 1e-12);
    }
  EXPECT_EQ(r.pca.fingerprint.rows, IndexSet::from_range(0, 60));
  EXPECT_THROW(r.apply(Matrix(3, 2)), DimensionError);
  EXPECT_THROW(fit_pca(x, 0.0, train), ConfigError);
  EXPECT_THROW(fit_pca(x, 1.5, train), ConfigError);
}

TEST(Pca, JsonRoundTripPreservesProjection) {
  Rng rng(8);
  Matrix x = correlated(rng, 40, 5);
  auto rows = iota_rows(0, 40);
  auto r = fit_reduction(x, 0.8, rows);
  auto back = reduction_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(back.apply(x), r.apply(x));
  EXPECT_EQ(back.pca.fingerprint.digest_hex(), r.pca.fingerprint.digest_hex());
}

}  // namespace
}  // namespace btcdir
