#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "btcdir/core/error.hpp"
#include "btcdir/core/json_io.hpp"
#include "btcdir/core/matrix.hpp"

namespace btcdir {

enum class KernelType { linear, rbf };

inline KernelType parse_kernel(const std::string& s) {
  if (s == "linear") return KernelType::linear;
  if (s == "rbf") return KernelType::rbf;
  throw ConfigError("unknown kernel '" + s + "'");
}

inline std::string to_string(KernelType k) { return k == KernelType::linear ? "linear" : "rbf"; }

struct Kernel {
  KernelType type = KernelType::rbf;
  double gamma = 0.1;

  /// Gram matrix K(a_i, b_j).
  Eigen::MatrixXd gram(const Matrix& a, const Matrix& b) const {
    Eigen::MatrixXd dot = a * b.transpose();
    if (type == KernelType::linear) return dot;
    const Eigen::VectorXd na = a.rowwise().squaredNorm(), nb = b.rowwise().squaredNorm();
    for (Eigen::Index i = 0; i < dot.rows(); ++i)
      for (Eigen::Index j = 0; j < dot.cols(); ++j)
        dot(i, j) = std::exp(-gamma * std::max(0.0, na(i) + nb(j) - 2.0 * dot(i, j)));
    return dot;
  }
};

struct SmoOptions {
  double tolerance = 1e-3;
  std::size_t max_iter = 0;  // 0: max(50000, 100 n)
  bool record_objective = false;
};

/// Solution of the C-SVC dual  min 1/2 a'Qa - e'a,  0 <= a <= C,  y'a = 0,
/// with Q_ij = y_i y_j K_ij.
struct SmoResult {
  Eigen::VectorXd alpha;
  double rho = 0.0;      // decision f(x) = sum a_i y_i K(x_i, x) - rho
  double kkt_gap = 0.0;  // max violation m(a) - M(a) at exit
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> objective;  // dual objective e'a - 1/2 a'Qa after each step
};

/// Sequential minimal optimization with second-order working-set selection
/// (Fan, Chen & Lin style). `y` holds +1/-1.
inline SmoResult smo_solve(const Eigen::MatrixXd& k, std::span<const int> y, double c, const SmoOptions& opt = {}) {
  const auto n = static_cast<Eigen::Index>(y.size());
  constexpr double kTau = 1e-12;
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd q(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) q(i, j) = y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] * k(i, j);

  SmoResult r;
  r.alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);
  auto& a = r.alpha;
  auto yi = [&](Eigen::Index i) { return y[static_cast<std::size_t>(i)]; };
  const std::size_t max_iter = opt.max_iter ? opt.max_iter : std::max<std::size_t>(50000, 100 * static_cast<std::size_t>(n));

  while (true) {
    double gmax = -inf, gmax2 = -inf, best_obj = inf;
    Eigen::Index i = -1, j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (yi(t) == 1) {
        if (a(t) < c && -grad(t) >= gmax) {
          gmax = -grad(t);
          i = t;
        }
      } else if (a(t) > 0 && grad(t) >= gmax) {
        gmax = grad(t);
        i = t;
      }
    }
    if (i >= 0) {
      for (Eigen::Index t = 0; t < n; ++t) {
        double grad_diff;
        double quad;
        if (yi(t) == 1) {
          if (!(a(t) > 0)) continue;
          gmax2 = std::max(gmax2, grad(t));
          grad_diff = gmax + grad(t);
          quad = q(i, i) + q(t, t) - 2.0 * yi(i) * q(i, t);
        } else {
          if (!(a(t) < c)) continue;
          gmax2 = std::max(gmax2, -grad(t));
          grad_diff = gmax - grad(t);
          quad = q(i, i) + q(t, t) + 2.0 * yi(i) * q(i, t);
        }
        if (grad_diff > 0) {
          const double obj = -(grad_diff * grad_diff) / (quad > 0 ? quad : kTau);
          if (obj <= best_obj) {
            best_obj = obj;
            j = t;
          }
        }
      }
    }
    r.kkt_gap = (i >= 0 && gmax2 > -inf) ? gmax + gmax2 : 0.0;
    if (r.kkt_gap < opt.tolerance || j < 0) {
      r.converged = true;
      break;
    }
    if (r.iterations >= max_iter) break;
    ++r.iterations;

    const double ai_old = a(i), aj_old = a(j);
    if (yi(i) != yi(j)) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = a(i) - a(j);
      a(i) += delta;
      a(j) += delta;
      if (diff > 0) {
        if (a(j) < 0) {
          a(j) = 0;
          a(i) = diff;
        }
      } else if (a(i) < 0) {
        a(i) = 0;
        a(j) = -diff;
      }
      if (diff > 0) {
        if (a(i) > c) {
          a(i) = c;
          a(j) = c - diff;
        }
      } else if (a(j) > c) {
        a(j) = c;
        a(i) = c + diff;
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = a(i) + a(j);
      a(i) -= delta;
      a(j) += delta;
      if (sum > c) {
        if (a(i) > c) {
          a(i) = c;
          a(j) = sum - c;
        }
      } else if (a(j) < 0) {
        a(j) = 0;
        a(i) = sum;
      }
      if (sum > c) {
        if (a(j) > c) {
          a(j) = c;
          a(i) = sum - c;
        }
      } else if (a(i) < 0) {
        a(i) = 0;
        a(j) = sum;
      }
    }
    const double di = a(i) - ai_old, dj = a(j) - aj_old;
    grad += q.col(i) * di + q.col(j) * dj;
    if (opt.record_objective) r.objective.push_back(-0.5 * a.dot(grad - Eigen::VectorXd::Ones(n)));
  }

  double ub = inf, lb = -inf, sum_free = 0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = yi(t) * grad(t);
    if (a(t) >= c) {
      if (yi(t) == -1)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    } else if (a(t) <= 0) {
      if (yi(t) == 1)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  r.rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2.0;
  return r;
}

/// Sigmoid P(y = 1 | f) = 1 / (1 + exp(A f + B)) fitted by Newton's method with
/// backtracking on smoothed targets (Platt; Lin, Lin & Weng).
struct PlattSigmoid {
  double a = -1.0;
  double b = 0.0;

  double operator()(double f) const {
    const double z = a * f + b;
    return z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
  }

  static PlattSigmoid fit(std::span<const double> dec, std::span<const int> labels) {
    double prior1 = 0, prior0 = 0;
    for (int l : labels) (l == 1 ? prior1 : prior0) += 1;
    const double hi = (prior1 + 1.0) / (prior1 + 2.0), lo = 1.0 / (prior0 + 2.0);
    std::vector<double> t(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) t[i] = labels[i] == 1 ? hi : lo;

    PlattSigmoid s{0.0, std::log((prior0 + 1.0) / (prior1 + 1.0))};
    auto nll = [&](double a, double b) {
      double f = 0;
      for (std::size_t i = 0; i < dec.size(); ++i) {
        const double z = dec[i] * a + b;
        f += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
      }
      return f;
    };
    double fval = nll(s.a, s.b);
    for (int iter = 0; iter < 100; ++iter) {
      double h11 = 1e-12, h22 = 1e-12, h21 = 0, g1 = 0, g2 = 0;
      for (std::size_t i = 0; i < dec.size(); ++i) {
        const double z = dec[i] * s.a + s.b;
        double p, q;
        if (z >= 0) {
          p = std::exp(-z) / (1.0 + std::exp(-z));
          q = 1.0 / (1.0 + std::exp(-z));
        } else {
          p = 1.0 / (1.0 + std::exp(z));
          q = std::exp(z) / (1.0 + std::exp(z));
        }
        const double d2 = p * q;
        h11 += dec[i] * dec[i] * d2;
        h22 += d2;
        h21 += dec[i] * d2;
        const double d1 = t[i] - p;
        g1 += dec[i] * d1;
        g2 += d1;
      }
      if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
      const double det = h11 * h22 - h21 * h21;
      const double da = -(h22 * g1 - h21 * g2) / det, db = -(-h21 * g1 + h11 * g2) / det;
      const double gd = g1 * da + g2 * db;
      double step = 1.0;
      while (step >= 1e-10) {
        const double na = s.a + step * da, nb = s.b + step * db;
        const double nf = nll(na, nb);
        if (nf < fval + 1e-4 * step * gd) {
          s = {na, nb};
          fval = nf;
          break;
        }
        step /= 2.0;
      }
      if (step < 1e-10) break;
    }
    return s;
  }
};

struct SvmParams {
  double c = 1.0;
  Kernel kernel;
  SmoOptions smo;
  double calibration_fraction = 0.2;
};

/// Soft-margin kernel SVM. Probabilities come from a Platt sigmoid fitted on
/// the decision values of the last `calibration_fraction` of the training rows
/// (in the order given) by a machine trained on the rows before them; the
/// returned machine itself is trained on every row.
class SvmClassifier {
 public:
  void fit(const Matrix& x, std::span<const int> y, const SvmParams& params) {
    kernel_ = params.kernel;
    const auto n = static_cast<std::size_t>(x.rows());
    train(x, y, params);

    const auto split = static_cast<std::size_t>(std::floor((1.0 - params.calibration_fraction) * static_cast<double>(n)));
    bool calibrated = false;
    if (split >= 2 && split < n) {
      const std::span<const int> head = y.subspan(0, split);
      const bool both = std::find(head.begin(), head.end(), 0) != head.end() && std::find(head.begin(), head.end(), 1) != head.end();
      if (both) {
        SvmClassifier early;
        early.kernel_ = kernel_;
        early.train(x.topRows(static_cast<Eigen::Index>(split)), head, params);
        Vector dec = early.decision_function(x.bottomRows(static_cast<Eigen::Index>(n - split)));
        std::vector<double> d(dec.data(), dec.data() + dec.size());
        platt_ = PlattSigmoid::fit(d, y.subspan(split));
        calibrated = true;
      }
    }
    if (!calibrated) {
      Vector dec = decision_function(x);
      std::vector<double> d(dec.data(), dec.data() + dec.size());
      platt_ = PlattSigmoid::fit(d, y);
    }
  }

  Vector decision_function(const Matrix& x) const {
    if (support_.rows() == 0) return Vector::Constant(x.rows(), -rho_);
    return kernel_.gram(x, support_) * coef_ - Vector::Constant(x.rows(), rho_);
  }

  Vector predict_proba(const Matrix& x) const {
    return decision_function(x).unaryExpr([this](double f) { return platt_(f); });
  }

  const SmoResult& solver_result() const { return solver_; }
  std::size_t support_count() const { return static_cast<std::size_t>(support_.rows()); }
  const PlattSigmoid& platt() const { return platt_; }

  nlohmann::json to_json() const {
    return {{"kernel", to_string(kernel_.type)}, {"gamma", kernel_.gamma}, {"rho", rho_},
            {"support", btcdir::to_json(support_)}, {"coef", to_std(coef_)}, {"platt_a", platt_.a},
            {"platt_b", platt_.b}, {"kkt_gap", solver_.kkt_gap}, {"iterations", solver_.iterations}};
  }

  static SvmClassifier from_json(const nlohmann::json& j) {
    SvmClassifier s;
    s.kernel_ = {parse_kernel(j.at("kernel").get<std::string>()), j.at("gamma").get<double>()};
    s.rho_ = j.at("rho").get<double>();
    s.coef_ = vector_from_json(j.at("coef"));
    s.support_ = matrix_from_json(j.at("support"));
    s.platt_ = {j.at("platt_a").get<double>(), j.at("platt_b").get<double>()};
    s.solver_.kkt_gap = j.value("kkt_gap", 0.0);
    s.solver_.iterations = j.value("iterations", std::size_t{0});
    return s;
  }

 private:
  void train(const Matrix& x, std::span<const int> y01, const SvmParams& params) {
    std::vector<int> ypm(y01.size());
    for (std::size_t i = 0; i < y01.size(); ++i) ypm[i] = y01[i] == 1 ? 1 : -1;
    solver_ = smo_solve(kernel_.gram(x, x), ypm, params.c, params.smo);
    rho_ = solver_.rho;
    std::vector<std::size_t> sv;
    for (Eigen::Index i = 0; i < solver_.alpha.size(); ++i)
      if (solver_.alpha(i) > 0) sv.push_back(static_cast<std::size_t>(i));
    support_ = take_rows(x, sv);
    coef_.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t k = 0; k < sv.size(); ++k)
      coef_(static_cast<Eigen::Index>(k)) = solver_.alpha(static_cast<Eigen::Index>(sv[k])) * ypm[sv[k]];
  }

  Kernel kernel_;
  Matrix support_;
  Vector coef_;
  double rho_ = 0.0;
  PlattSigmoid platt_;
  SmoResult solver_;
};

}  // namespace btcdir
