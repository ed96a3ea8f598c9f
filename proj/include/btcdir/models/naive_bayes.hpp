#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <json.hpp>

#include "btcdir/core/matrix.hpp"

namespace btcdir {

/// Bernoulli naive Bayes over features binarized at `threshold` (x > threshold
/// is 1), with additive (Laplace) smoothing `alpha` on the per-class feature
/// frequencies. Class priors are the empirical frequencies.
class BernoulliNB {
 public:
  BernoulliNB() = default;
  BernoulliNB(double alpha, double threshold) : alpha_(alpha), threshold_(threshold) {}

  void fit(const Matrix& x, std::span<const int> y) {
    const auto d = static_cast<std::size_t>(x.cols());
    double count[2] = {0, 0};
    std::vector<double> ones[2] = {std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const int c = y[static_cast<std::size_t>(i)];
      count[c] += 1;
      for (std::size_t j = 0; j < d; ++j) ones[c][j] += x(i, static_cast<Eigen::Index>(j)) > threshold_ ? 1.0 : 0.0;
    }
    const double n = count[0] + count[1];
    for (int c = 0; c < 2; ++c) {
      log_prior_[c] = std::log(count[c] / n);
      log_p_[c].resize(d);
      log_q_[c].resize(d);
      for (std::size_t j = 0; j < d; ++j) {
        const double p = (ones[c][j] + alpha_) / (count[c] + 2.0 * alpha_);
        log_p_[c][j] = std::log(p);
        log_q_[c][j] = std::log1p(-p);
      }
    }
  }

  /// Exact posterior P(y = 1 | binarized x).
  Vector predict_proba(const Matrix& x) const {
    Vector out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double joint[2];
      for (int c = 0; c < 2; ++c) {
        double s = log_prior_[c];
        for (std::size_t j = 0; j < log_p_[c].size(); ++j)
          s += x(i, static_cast<Eigen::Index>(j)) > threshold_ ? log_p_[c][j] : log_q_[c][j];
        joint[c] = s;
      }
      // Logistic of the log-odds; stable for either sign.
      const double z = joint[1] - joint[0];
      out(i) = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    }
    return out;
  }

  double alpha() const { return alpha_; }
  double threshold() const { return threshold_; }

  nlohmann::json to_json() const {
    return {{"alpha", alpha_},         {"threshold", threshold_}, {"log_prior", {log_prior_[0], log_prior_[1]}},
            {"log_p0", log_p_[0]},     {"log_p1", log_p_[1]},     {"log_q0", log_q_[0]},
            {"log_q1", log_q_[1]}};
  }

  static BernoulliNB from_json(const nlohmann::json& j) {
    BernoulliNB m(j.at("alpha").get<double>(), j.at("threshold").get<double>());
    m.log_prior_[0] = j.at("log_prior").at(0).get<double>();
    m.log_prior_[1] = j.at("log_prior").at(1).get<double>();
    m.log_p_[0] = j.at("log_p0").get<std::vector<double>>();
    m.log_p_[1] = j.at("log_p1").get<std::vector<double>>();
    m.log_q_[0] = j.at("log_q0").get<std::vector<double>>();
    m.log_q_[1] = j.at("log_q1").get<std::vector<double>>();
    return m;
  }

 private:
  double alpha_ = 1.0;
  double threshold_ = 0.0;
  double log_prior_[2] = {0, 0};
  std::vector<double> log_p_[2];  // log P(x_j = 1 | c)
  std::vector<double> log_q_[2];  // log P(x_j = 0 | c)
};

}  // namespace btcdir
