#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "btcdir/core/error.hpp"
#include "btcdir/core/missing.hpp"

namespace btcdir {

enum class IndicatorKind { SMA, EMA, WMA, RSI, ROC, MOM, STDDEV, VAR, TRIX };

inline constexpr IndicatorKind kAllIndicatorKinds[] = {IndicatorKind::SMA, IndicatorKind::EMA,    IndicatorKind::WMA,
                                                       IndicatorKind::RSI, IndicatorKind::ROC,    IndicatorKind::MOM,
                                                       IndicatorKind::STDDEV, IndicatorKind::VAR, IndicatorKind::TRIX};

/// Windows (days) of the default indicator catalogue.
inline constexpr int kDefaultWindows[] = {3, 7, 14, 30, 90};

inline std::string_view to_string(IndicatorKind k) {
  switch (k) {
    case IndicatorKind::SMA: return "SMA";
    case IndicatorKind::EMA: return "EMA";
    case IndicatorKind::WMA: return "WMA";
    case IndicatorKind::RSI: return "RSI";
    case IndicatorKind::ROC: return "ROC";
    case IndicatorKind::MOM: return "MOM";
    case IndicatorKind::STDDEV: return "STDDEV";
    case IndicatorKind::VAR: return "VAR";
    case IndicatorKind::TRIX: return "TRIX";
  }
  return "?";
}

inline IndicatorKind parse_indicator_kind(std::string_view s) {
  for (auto k : kAllIndicatorKinds)
    if (to_string(k) == s) return k;
  throw ConfigError("unknown indicator kind '" + std::string(s) + "'");
}

struct IndicatorSpec {
  IndicatorKind kind = IndicatorKind::SMA;
  int window = 2;

  void validate() const {
    if (window < 2) throw ConfigError("indicator window must be >= 2, got " + std::to_string(window));
  }
  bool operator==(const IndicatorSpec&) const = default;
};

/// Every kind crossed with every default window (9 x 5 = 45 specs).
inline std::vector<IndicatorSpec> default_indicator_specs() {
  std::vector<IndicatorSpec> out;
  for (auto k : kAllIndicatorKinds)
    for (int w : kDefaultWindows) out.push_back({k, w});
  return out;
}

/// Number of leading outputs that are kMissing.
inline std::size_t warmup_length(const IndicatorSpec& spec) {
  const auto w = static_cast<std::size_t>(spec.window);
  switch (spec.kind) {
    case IndicatorKind::SMA:
    case IndicatorKind::EMA:
    case IndicatorKind::WMA:
    case IndicatorKind::STDDEV:
    case IndicatorKind::VAR: return w - 1;
    case IndicatorKind::MOM:
    case IndicatorKind::ROC:
    case IndicatorKind::RSI: return w;
    case IndicatorKind::TRIX: return 3 * (w - 1) + 1;
  }
  return w;
}

namespace detail {

// EMA over x[first..], seeded with the SMA of x[first .. first+w-1].
inline std::vector<double> ema_from(std::span<const double> x, std::size_t first, int window) {
  std::vector<double> out(x.size(), kMissing);
  const auto w = static_cast<std::size_t>(window);
  if (x.size() < first + w) return out;
  const double alpha = 2.0 / (window + 1.0);
  double seed = 0.0;
  for (std::size_t i = first; i < first + w; ++i) seed += x[i];
  double e = seed / window;
  out[first + w - 1] = e;
  for (std::size_t t = first + w; t < x.size(); ++t) {
    e = alpha * x[t] + (1.0 - alpha) * e;
    out[t] = e;
  }
  return out;
}

}  // namespace detail

/// Technical indicator over a fully observed series. Output has the input's
/// length; the first warmup_length(spec) cells are kMissing. Every value uses
/// only current and past inputs.
inline std::vector<double> compute_indicator(std::span<const double> x, const IndicatorSpec& spec) {
  spec.validate();
  for (double v : x)
    if (is_missing(v)) throw IntegrityError("compute_indicator: input series has missing values");
  const std::size_t n = x.size();
  const std::size_t warm = warmup_length(spec);
  if (n <= warm)
    throw WarmupExhaustedError(std::string(to_string(spec.kind)) + "(" + std::to_string(spec.window) +
                               ") needs more than " + std::to_string(warm) + " rows, series has " + std::to_string(n));

  const int window = spec.window;
  const auto w = static_cast<std::size_t>(window);
  std::vector<double> out(n, kMissing);

  switch (spec.kind) {
    case IndicatorKind::SMA: {
      double sum = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        sum += x[t];
        if (t >= w) sum -= x[t - w];
        if (t + 1 >= w) out[t] = sum / window;
      }
      break;
    }
    case IndicatorKind::EMA: out = detail::ema_from(x, 0, window); break;
    case IndicatorKind::WMA: {
      // numerator = sum_{i=1..w} i * x[t-w+i]; slides by adding w*x[t] and
      // subtracting the previous window's plain sum.
      const double denom = window * (window + 1.0) / 2.0;
      double num = 0.0, plain = 0.0;
      for (std::size_t i = 0; i < w; ++i) {
        num += static_cast<double>(i + 1) * x[i];
        plain += x[i];
      }
      out[w - 1] = num / denom;
      for (std::size_t t = w; t < n; ++t) {
        num += window * x[t] - plain;
        plain += x[t] - x[t - w];
        out[t] = num / denom;
      }
      break;
    }
    case IndicatorKind::MOM:
      for (std::size_t t = w; t < n; ++t) out[t] = x[t] - x[t - w];
      break;
    case IndicatorKind::ROC:
      for (std::size_t t = w; t < n; ++t) out[t] = x[t - w] == 0.0 ? 0.0 : 100.0 * (x[t] - x[t - w]) / x[t - w];
      break;
    case IndicatorKind::RSI: {
      double gain = 0.0, loss = 0.0;
      for (std::size_t i = 1; i <= w; ++i) {
        const double d = x[i] - x[i - 1];
        (d > 0 ? gain : loss) += std::abs(d);
      }
      gain /= window;
      loss /= window;
      auto rsi = [](double g, double l) {
        if (l == 0.0) return g == 0.0 ? 50.0 : 100.0;
        return 100.0 - 100.0 / (1.0 + g / l);
      };
      out[w] = rsi(gain, loss);
      for (std::size_t t = w + 1; t < n; ++t) {
        const double d = x[t] - x[t - 1];
        gain = (gain * (window - 1) + (d > 0 ? d : 0.0)) / window;
        loss = (loss * (window - 1) + (d < 0 ? -d : 0.0)) / window;
        out[t] = rsi(gain, loss);
      }
      break;
    }
    case IndicatorKind::STDDEV:
    case IndicatorKind::VAR:
      for (std::size_t t = w - 1; t < n; ++t) {
        double mean = 0.0;
        for (std::size_t i = t + 1 - w; i <= t; ++i) mean += x[i];
        mean /= window;
        double ss = 0.0;
        for (std::size_t i = t + 1 - w; i <= t; ++i) ss += (x[i] - mean) * (x[i] - mean);
        const double var = ss / (window - 1);
        out[t] = spec.kind == IndicatorKind::VAR ? var : std::sqrt(var);
      }
      break;
    case IndicatorKind::TRIX: {
      auto e1 = detail::ema_from(x, 0, window);
      auto e2 = detail::ema_from(e1, w - 1, window);
      auto e3 = detail::ema_from(e2, 2 * (w - 1), window);
      for (std::size_t t = 3 * (w - 1) + 1; t < n; ++t)
        out[t] = e3[t - 1] == 0.0 ? 0.0 : 100.0 * (e3[t] - e3[t - 1]) / e3[t - 1];
      break;
    }
  }
  return out;
}

}  // namespace btcdir
