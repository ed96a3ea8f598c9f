#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "btcdir/core/error.hpp"
#include "btcdir/core/rng.hpp"
#include "btcdir/models/hyperparams.hpp"

namespace btcdir {

/// One searchable hyperparameter: a categorical list, or a numeric interval
/// searched on a linear or log scale.
struct SearchDim {
  enum class Type { categorical, real, integer };
  std::string name;
  Type type = Type::real;
  std::vector<HpValue> choices;
  double lo = 0.0, hi = 1.0;
  bool log_scale = false;

  bool numeric() const { return type != Type::categorical; }

  /// Map u in [0, 1] to a value inside [lo, hi].
  HpValue decode(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    double v = log_scale ? std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo))) : lo + u * (hi - lo);
    v = std::clamp(v, lo, hi);
    if (type == Type::integer) return static_cast<std::int64_t>(std::clamp(std::round(v), std::ceil(lo), std::floor(hi)));
    return v;
  }
};

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<SearchDim> dims) : dims_(std::move(dims)) { validate(); }

  const std::vector<SearchDim>& dims() const { return dims_; }
  bool empty() const { return dims_.empty(); }

  std::vector<SearchDim> numeric_dims() const {
    std::vector<SearchDim> out;
    for (const auto& d : dims_)
      if (d.numeric()) out.push_back(d);
    return out;
  }

  /// Cartesian product of the categorical choices, first dimension slowest.
  /// A space without categoricals has one empty grid point.
  std::vector<Hyperparams> grid() const {
    std::vector<Hyperparams> out{Hyperparams{}};
    for (const auto& d : dims_) {
      if (d.numeric()) continue;
      std::vector<Hyperparams> next;
      for (const auto& base : out)
        for (const auto& c : d.choices) {
          Hyperparams h = base;
          h.set(d.name, c);
          next.push_back(std::move(h));
        }
      out = std::move(next);
    }
    return out;
  }

  void validate() const {
    for (const auto& d : dims_) {
      if (d.type == SearchDim::Type::categorical) {
        if (d.choices.empty()) throw ConfigError("search dimension '" + d.name + "' has no choices");
        continue;
      }
      if (!std::isfinite(d.lo) || !std::isfinite(d.hi) || !(d.lo < d.hi))
        throw ConfigError("search dimension '" + d.name + "' needs finite bounds with low < high");
      if (d.log_scale && d.lo <= 0) throw ConfigError("search dimension '" + d.name + "' is log-scaled but low <= 0");
    }
  }

  /// Check every point the space can produce against the model's declared
  /// hyperparameter bounds.
  void validate_for(ModelKind kind) const {
    for (const auto& d : dims_) {
      if (d.numeric()) {
        resolve_hyperparams(kind, {{d.name, d.lo}});
        resolve_hyperparams(kind, {{d.name, d.hi}});
      } else {
        for (const auto& c : d.choices) resolve_hyperparams(kind, {{d.name, c}});
      }
    }
  }

  /// JSON object: name -> [choices...] for categoricals, or
  /// {"low", "high", "scale": "linear"|"log", "type": "real"|"integer"}.
  static SearchSpace from_json(const nlohmann::json& j) {
    std::vector<SearchDim> dims;
    for (const auto& [name, v] : j.items()) {
      SearchDim d;
      d.name = name;
      if (v.is_array()) {
        d.type = SearchDim::Type::categorical;
        for (const auto& c : v) d.choices.push_back(hp_value_from_json(c));
      } else if (v.is_object()) {
        if (!v.contains("low") || !v.contains("high")) throw ConfigError("search dimension '" + name + "' needs low and high");
        d.lo = v.at("low").get<double>();
        d.hi = v.at("high").get<double>();
        const auto scale = v.value("scale", "linear");
        if (scale != "linear" && scale != "log") throw ConfigError("search dimension '" + name + "': unknown scale " + scale);
        d.log_scale = scale == "log";
        const auto type = v.value("type", "real");
        if (type != "real" && type != "integer") throw ConfigError("search dimension '" + name + "': unknown type " + type);
        d.type = type == "integer" ? SearchDim::Type::integer : SearchDim::Type::real;
      } else {
        throw ConfigError("search dimension '" + name + "' must be a list or an interval object");
      }
      dims.push_back(std::move(d));
    }
    return SearchSpace(std::move(dims));
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& d : dims_) {
      if (!d.numeric()) {
        auto arr = nlohmann::json::array();
        for (const auto& c : d.choices) arr.push_back(btcdir::to_json(c));
        j[d.name] = arr;
      } else {
        j[d.name] = {{"low", d.lo}, {"high", d.hi}, {"scale", d.log_scale ? "log" : "linear"},
                     {"type", d.type == SearchDim::Type::integer ? "integer" : "real"}};
      }
    }
    return j;
  }

 private:
  std::vector<SearchDim> dims_;
};

struct Evaluation {
  Hyperparams point;
  double value = 0.0;  // NaN when the objective failed
  bool finite = true;
};

struct BayesOptions {
  int init_points = 5;
  double noise = 1e-6;
  double xi = 0.01;
  int random_candidates = 512;
  int local_starts = 5;
};

struct BayesResult {
  Hyperparams best;
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<Evaluation> log;
  std::vector<std::string> warnings;
};

namespace detail {

inline double halton(std::size_t index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % static_cast<std::size_t>(base));
    index /= static_cast<std::size_t>(base);
  }
  return r;
}

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Zero-mean GP with unit-variance squared-exponential kernel on normalized
/// targets. The length-scale maximizes the marginal likelihood over a fixed
/// log grid.
class GaussianProcess {
 public:
  GaussianProcess(const std::vector<Eigen::VectorXd>& xs, const std::vector<double>& ys, double noise) : xs_(xs) {
    const auto n = static_cast<Eigen::Index>(ys.size());
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ys.data(), n);
    mean_ = y.mean();
    const double sd = n > 1 ? std::sqrt((y.array() - mean_).square().sum() / static_cast<double>(n - 1)) : 0.0;
    scale_ = sd > 1e-12 ? sd : 1.0;
    y_ = (y.array() - mean_) / scale_;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int g = 0; g < 15; ++g) {
      const double ell = 0.02 * std::pow(100.0, g / 14.0);  // 0.02 .. 2
      Eigen::MatrixXd k = gram(ell);
      k.diagonal().array() += noise;
      Eigen::LLT<Eigen::MatrixXd> llt(k);
      if (llt.info() != Eigen::Success) continue;
      Eigen::VectorXd alpha = llt.solve(y_);
      const Eigen::MatrixXd l = llt.matrixL();
      const double ll = -0.5 * y_.dot(alpha) - l.diagonal().array().log().sum();
      if (ll > best_ll) {
        best_ll = ll;
        ell_ = ell;
        llt_ = llt;
        alpha_ = alpha;
      }
    }
  }

  /// Posterior mean and standard deviation in the original target units.
  std::pair<double, double> predict(const Eigen::VectorXd& x) const {
    Eigen::VectorXd ks(static_cast<Eigen::Index>(xs_.size()));
    for (std::size_t i = 0; i < xs_.size(); ++i) ks(static_cast<Eigen::Index>(i)) = kernel(x, xs_[i], ell_);
    const double mu = ks.dot(alpha_);
    const double var = std::max(0.0, 1.0 - ks.dot(llt_.solve(ks)));
    return {mean_ + scale_ * mu, scale_ * std::sqrt(var)};
  }

  double length_scale() const { return ell_; }

 private:
  static double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double ell) {
    return std::exp(-0.5 * (a - b).squaredNorm() / (ell * ell));
  }

  Eigen::MatrixXd gram(double ell) const {
    const auto n = static_cast<Eigen::Index>(xs_.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        k(i, j) = kernel(xs_[static_cast<std::size_t>(i)], xs_[static_cast<std::size_t>(j)], ell);
    return k;
  }

  std::vector<Eigen::VectorXd> xs_;
  Eigen::VectorXd y_, alpha_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double mean_ = 0.0, scale_ = 1.0, ell_ = 0.2;
};

inline double expected_improvement(double mu, double sigma, double best, double xi) {
  if (sigma <= 1e-12) return std::max(0.0, mu - best - xi);
  const double z = (mu - best - xi) / sigma;
  return (mu - best - xi) * normal_cdf(z) + sigma * normal_pdf(z);
}

}  // namespace detail

/// Maximize `objective` over the numeric dimensions of `space` with a
/// Gaussian-process surrogate and expected improvement. The first
/// `init_points` evaluations follow a randomly shifted Halton sequence. The
/// categorical dimensions of `space` are ignored; callers fix them through
/// the objective. Points returning a non-finite value are logged and excluded
/// from the surrogate.
inline BayesResult bayes_opt(const SearchSpace& space, const std::function<double(const Hyperparams&)>& objective,
                             int budget, std::uint64_t seed, const BayesOptions& opt = {}) {
  if (budget < opt.init_points)
    throw ConfigError("bayes_opt: budget " + std::to_string(budget) + " is below the " + std::to_string(opt.init_points) +
                      " initial points");
  const auto dims = space.numeric_dims();
  const auto d = static_cast<Eigen::Index>(dims.size());
  Rng rng(seed);
  static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  if (d > static_cast<Eigen::Index>(std::size(kPrimes))) throw ConfigError("bayes_opt: too many numeric dimensions");
  Eigen::VectorXd shift(d);
  for (Eigen::Index j = 0; j < d; ++j) shift(j) = rng.uniform();

  auto decode = [&](const Eigen::VectorXd& u) {
    Hyperparams h;
    for (Eigen::Index j = 0; j < d; ++j) h.set(dims[static_cast<std::size_t>(j)].name, dims[static_cast<std::size_t>(j)].decode(u(j)));
    return h;
  };

  BayesResult result;
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> ys;
  auto evaluate = [&](const Eigen::VectorXd& u) {
    Evaluation e{decode(u), objective(decode(u)), true};
    if (!std::isfinite(e.value)) {
      e.finite = false;
      e.value = std::numeric_limits<double>::quiet_NaN();
      result.warnings.push_back("objective returned a non-finite value at " + e.point.describe() + "; discarded");
    } else {
      xs.push_back(u);
      ys.push_back(e.value);
      if (e.value > result.best_value) {
        result.best_value = e.value;
        result.best = e.point;
      }
    }
    result.log.push_back(std::move(e));
  };

  for (int i = 0; i < opt.init_points; ++i) {
    Eigen::VectorXd u(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double v = detail::halton(static_cast<std::size_t>(i + 1), kPrimes[j]) + shift(j);
      u(j) = v - std::floor(v);
    }
    evaluate(u);
    if (d == 0) break;  // nothing to search
  }

  for (int it = opt.init_points; it < budget && d > 0; ++it) {
    Eigen::VectorXd next(d);
    if (xs.empty()) {
      for (Eigen::Index j = 0; j < d; ++j) next(j) = rng.uniform();
    } else {
      detail::GaussianProcess gp(xs, ys, opt.noise);
      const double best = *std::max_element(ys.begin(), ys.end());
      auto acq = [&](const Eigen::VectorXd& u) {
        auto [mu, sigma] = gp.predict(u);
        return detail::expected_improvement(mu, sigma, best, opt.xi);
      };
      std::vector<std::pair<double, Eigen::VectorXd>> cands;
      for (int c = 0; c < opt.random_candidates; ++c) {
        Eigen::VectorXd u(d);
        for (Eigen::Index j = 0; j < d; ++j) u(j) = rng.uniform();
        cands.emplace_back(acq(u), u);
      }
      std::partial_sort(cands.begin(), cands.begin() + std::min<int>(opt.local_starts, opt.random_candidates), cands.end(),
                        [](const auto& a, const auto& b) { return a.first > b.first; });
      double best_acq = -1.0;
      for (int s = 0; s < std::min<int>(opt.local_starts, opt.random_candidates); ++s) {
        auto [val, u] = cands[static_cast<std::size_t>(s)];
        // Compass search inside the unit box.
        for (double step = 0.1; step > 1e-4; step /= 2) {
          bool moved = true;
          while (moved) {
            moved = false;
            for (Eigen::Index j = 0; j < d; ++j)
              for (double sgn : {1.0, -1.0}) {
                Eigen::VectorXd v = u;
                v(j) = std::clamp(v(j) + sgn * step, 0.0, 1.0);
                const double a = acq(v);
                if (a > val + 1e-15) {
                  val = a;
                  u = v;
                  moved = true;
                }
              }
          }
        }
        if (val > best_acq) {
          best_acq = val;
          next = u;
        }
      }
    }
    evaluate(next);
  }
  return result;
}

}  // namespace btcdir
