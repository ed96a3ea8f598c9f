#include <gtest/gtest.h>

#include <cmath>

#include "btcdir/core/rng.hpp"
#include "btcdir/features.hpp"

namespace btcdir {
namespace {

// ---- Independent per-index oracles -----------------------------------------
// Each recomputes one output cell from the raw window (or a closed form) with
// no shared state between indices.

double oracle_ema_at(const std::vector<double>& x, std::size_t first, int w, std::size_t t) {
  // e_t = (1-a)^(t-s) * seed + sum_{i=s+1..t} a (1-a)^(t-i) x_i, s = first+w-1.
  const double a = 2.0 / (w + 1.0);
  const std::size_t s = first + static_cast<std::size_t>(w) - 1;
  double seed = 0.0;
  for (std::size_t i = first; i <= s; ++i) seed += x[i];
  seed /= w;
  double v = std::pow(1.0 - a, static_cast<double>(t - s)) * seed;
  for (std::size_t i = s + 1; i <= t; ++i) v += a * std::pow(1.0 - a, static_cast<double>(t - i)) * x[i];
  return v;
}

std::vector<double> oracle_ema(const std::vector<double>& x, std::size_t first, int w) {
  std::vector<double> out(x.size(), kMissing);
  for (std::size_t t = first + static_cast<std::size_t>(w) - 1; t < x.size(); ++t) out[t] = oracle_ema_at(x, first, w, t);
  return out;
}

double oracle_wilder(const std::vector<double>& move, int w, std::size_t t) {
  // move[i] is the gain (or loss) of step i; Wilder average at t >= w.
  const double k = 1.0 - 1.0 / w;
  double seed = 0.0;
  for (std::size_t i = 1; i <= static_cast<std::size_t>(w); ++i) seed += move[i];
  seed /= w;
  double v = std::pow(k, static_cast<double>(t - static_cast<std::size_t>(w))) * seed;
  for (std::size_t i = static_cast<std::size_t>(w) + 1; i <= t; ++i) v += (1.0 / w) * std::pow(k, static_cast<double>(t - i)) * move[i];
  return v;
}

std::vector<double> oracle(const std::vector<double>& x, IndicatorSpec spec) {
  const int w = spec.window;
  const std::size_t uw = static_cast<std::size_t>(w);
  const std::size_t n = x.size();
  std::vector<double> out(n, kMissing);
  switch (spec.kind) {
    case IndicatorKind::SMA:
      for (std::size_t t = uw - 1; t < n; ++t) {
        double s = 0;
        for (std::size_t i = t + 1 - uw; i <= t; ++i) s += x[i];
        out[t] = s / w;
      }
      break;
    case IndicatorKind::EMA: out = oracle_ema(x, 0, w); break;
    case IndicatorKind::WMA:
      for (std::size_t t = uw - 1; t < n; ++t) {
        double s = 0;
        for (std::size_t j = 1; j <= uw; ++j) s += static_cast<double>(j) * x[t + j - uw];
        out[t] = s / (w * (w + 1) / 2.0);
      }
      break;
    case IndicatorKind::MOM:
      for (std::size_t t = uw; t < n; ++t) out[t] = x[t] - x[t - uw];
      break;
    case IndicatorKind::ROC:
      for (std::size_t t = uw; t < n; ++t) out[t] = x[t - uw] == 0 ? 0.0 : 100.0 * (x[t] / x[t - uw] - 1.0);
      break;
    case IndicatorKind::RSI: {
      std::vector<double> gain(n, 0.0), loss(n, 0.0);
      for (std::size_t i = 1; i < n; ++i) {
        gain[i] = std::max(0.0, x[i] - x[i - 1]);
        loss[i] = std::max(0.0, x[i - 1] - x[i]);
      }
      for (std::size_t t = uw; t < n; ++t) {
        const double g = oracle_wilder(gain, w, t), l = oracle_wilder(loss, w, t);
        out[t] = l == 0 ? (g == 0 ? 50.0 : 100.0) : 100.0 * g / (g + l);
      }
      break;
    }
    case IndicatorKind::VAR:
    case IndicatorKind::STDDEV:
      for (std::size_t t = uw - 1; t < n; ++t) {
        // Pairwise-difference form of the sample variance.
        double s = 0;
        for (std::size_t i = t + 1 - uw; i <= t; ++i)
          for (std::size_t j = i + 1; j <= t; ++j) s += (x[i] - x[j]) * (x[i] - x[j]);
        const double var = s / (w * (w - 1.0));
        out[t] = spec.kind == IndicatorKind::VAR ? var : std::sqrt(var);
      }
      break;
    case IndicatorKind::TRIX: {
      auto e1 = oracle_ema(x, 0, w);
      auto e2 = oracle_ema(e1, uw - 1, w);
      auto e3 = oracle_ema(e2, 2 * (uw - 1), w);
      for (std::size_t t = 3 * (uw - 1) + 1; t < n; ++t) out[t] = 100.0 * (e3[t] / e3[t - 1] - 1.0);
      break;
    }
  }
  return out;
}

void expect_close_series(const std::vector<double>& got, const std::vector<double>& want, double rel) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (is_missing(want[i])) {
      EXPECT_TRUE(is_missing(got[i])) << "index " << i;
    } else {
      ASSERT_FALSE(is_missing(got[i])) << "index " << i;
      EXPECT_NEAR(got[i], want[i], rel * std::max(1.0, std::abs(want[i]))) << "index " << i;
    }
  }
}

std::vector<double> random_walk(Rng& rng, std::size_t n, double start = 100.0) {
  std::vector<double> x(n);
  double v = start;
  for (auto& e : x) {
    v *= std::exp(0.03 * (rng.uniform() - 0.5));
    e = v;
  }
  return x;
}

TEST(Indicators, SmaExamples) {
  std::vector<double> c(20, 4.5);
  for (int w : {2, 3, 7}) {
    auto out = compute_indicator(c, {IndicatorKind::SMA, w});
    for (std::size_t t = static_cast<std::size_t>(w) - 1; t < c.size(); ++t) EXPECT_DOUBLE_EQ(out[t], 4.5);
  }
  std::vector<double> x{1, 2, 3};
  auto out = compute_indicator(x, {IndicatorKind::SMA, 3});
  EXPECT_TRUE(is_missing(out[0]));
  EXPECT_TRUE(is_missing(out[1]));
  EXPECT_DOUBLE_EQ(out[2], 2.0);
}

TEST(Indicators, RsiOfIncreasingSeriesIs100) {
  std::vector<double> x(40);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 10.0 + static_cast<double>(i * i);
  auto out = compute_indicator(x, {IndicatorKind::RSI, 14});
  for (std::size_t t = 14; t < x.size(); ++t) EXPECT_DOUBLE_EQ(out[t], 100.0);
}

TEST(Indicators, DegenerateGuards) {
  std::vector<double> flat(10, 3.0);
  auto rsi = compute_indicator(flat, {IndicatorKind::RSI, 3});
  EXPECT_DOUBLE_EQ(rsi[5], 50.0);
  std::vector<double> zeros(10, 0.0);
  auto roc = compute_indicator(zeros, {IndicatorKind::ROC, 3});
  EXPECT_DOUBLE_EQ(roc[5], 0.0);
  auto trix = compute_indicator(zeros, {IndicatorKind::TRIX, 2});
  EXPECT_DOUBLE_EQ(trix[9], 0.0);
}

TEST(Indicators, Errors) {
  std::vector<double> x{1, 2, 3};
  EXPECT_THROW(compute_indicator(x, {IndicatorKind::SMA, 4}), WarmupExhaustedError);
  EXPECT_THROW(compute_indicator(x, {IndicatorKind::MOM, 3}), WarmupExhaustedError);
  EXPECT_THROW(compute_indicator(x, {IndicatorKind::SMA, 1}), ConfigError);
  std::vector<double> gap{1, kMissing, 3, 4};
  EXPECT_THROW(compute_indicator(gap, {IndicatorKind::SMA, 2}), IntegrityError);
}

TEST(Indicators, MatchWindowedOracleOnRandomSeries) {
  Rng rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    auto x = random_walk(rng, 300);
    for (const auto& spec : default_indicator_specs()) {
      SCOPED_TRACE(std::string(to_string(spec.kind)) + "/" + std::to_string(spec.window));
      expect_close_series(compute_indicator(x, spec), oracle(x, spec), 1e-9);
    }
  }
}

TEST(Indicators, CausalUnderTruncation) {
  Rng rng(5);
  auto x = random_walk(rng, 120);
  for (const auto& spec : default_indicator_specs()) {
    if (spec.window > 30) continue;
    auto full = compute_indicator(x, spec);
    for (std::size_t t = warmup_length(spec) + 1; t <= x.size(); t += 7) {
      auto part = compute_indicator(std::span<const double>(x.data(), t), spec);
      for (std::size_t i = 0; i < t; ++i) {
        if (is_missing(full[i])) {
          EXPECT_TRUE(is_missing(part[i]));
        } else {
          EXPECT_EQ(part[i], full[i]);
        }
      }
    }
  }
}

CalendarFrame frame_with(std::vector<std::pair<std::string, std::vector<double>>> cols) {
  CalendarFrame f(*Date::parse("2020-01-01"), cols.front().second.size());
  for (auto& [n, v] : cols) f.add_column({n, Category::internal, v});
  return f;
}

TEST(ExpandFeatures, NineKindsFiveWindowsGive45Columns) {
  Rng rng(1);
  auto f = frame_with({{"btc.close", random_walk(rng, 400)}});
  std::vector<std::string> base{"btc.close"};
  auto specs = default_indicator_specs();
  ASSERT_EQ(specs.size(), 45u);
  auto g = expand_features(f, base, specs);
  EXPECT_EQ(g.column_count(), 46u);
  EXPECT_TRUE(g.has_column("btc.close.TRIX.90"));
  EXPECT_TRUE(g.has_column("btc.close"));
}

TEST(ExpandFeatures, EmptySpecsIsIdentityAndColumnsMatchOracle) {
  Rng rng(2);
  auto f = frame_with({{"a", random_walk(rng, 60)}, {"b", random_walk(rng, 60)}});
  std::vector<std::string> base{"a", "b"};
  auto same = expand_features(f, base, {});
  EXPECT_EQ(same.column_count(), 2u);

  std::vector<IndicatorSpec> specs{{IndicatorKind::EMA, 5}, {IndicatorKind::RSI, 7}};
  auto g = expand_features(f, base, specs);
  EXPECT_EQ(g.column_count(), 2u + 4u);
  for (const auto& b : base)
    for (const auto& s : specs) expect_close_series(g.column(indicator_column_name(b, s)).values, oracle(f.column(b).values, s), 1e-9);

  EXPECT_THROW(expand_features(g, base, specs), IntegrityError);  // names already present
  auto gappy = frame_with({{"a", {1, kMissing, 3, 4}}});
  std::vector<std::string> ga{"a"};
  std::vector<IndicatorSpec> sma{{IndicatorKind::SMA, 2}};
  EXPECT_THROW(expand_features(gappy, ga, sma), IntegrityError);
}

TEST(CyclicalTime, KnownDatesAndUnitCircle) {
  std::vector<Date> dates{*Date::parse("2021-03-01")};  // Monday and 1st of month
  auto c = cyclical_time_features(dates);
  EXPECT_DOUBLE_EQ(c[0].values[0], 0.0);
  EXPECT_DOUBLE_EQ(c[1].values[0], 1.0);
  EXPECT_DOUBLE_EQ(c[2].values[0], 0.0);
  EXPECT_DOUBLE_EQ(c[3].values[0], 1.0);

  std::vector<Date> many;
  for (Date d = *Date::parse("2019-12-01"); d <= *Date::parse("2021-02-01"); ++d) many.push_back(d);
  auto m = cyclical_time_features(many);
  for (std::size_t i = 0; i < many.size(); ++i) {
    EXPECT_NEAR(m[0].values[i] * m[0].values[i] + m[1].values[i] * m[1].values[i], 1.0, 1e-12);
    EXPECT_NEAR(m[2].values[i] * m[2].values[i] + m[3].values[i] * m[3].values[i], 1.0, 1e-12);
  }
}

TEST(MakeTarget, Examples) {
  std::vector<double> c{10, 11, 9};
  EXPECT_EQ(make_target(c), (std::vector<int>{1, 0}));
  std::vector<double> up{1, 2, 3, 4, 5};
  EXPECT_EQ(make_target(up), (std::vector<int>{1, 1, 1, 1}));
  std::vector<double> flat{10, 10};
  EXPECT_EQ(make_target(flat), (std::vector<int>{0}));
  EXPECT_EQ(make_target(up, 2), (std::vector<int>{1, 1, 1}));
  EXPECT_THROW(make_target(flat, 2), ConfigError);
  EXPECT_THROW(make_target(flat, 0), ConfigError);
}

TEST(LabeledDataset, DropsUnlabeledTailAndAddsTimeColumns) {
  Rng rng(8);
  auto f = frame_with({{"btc.close", random_walk(rng, 30)}, {"x", random_walk(rng, 30)}});
  auto ds = build_labeled_dataset(f, "btc.close");
  ds.validate();
  EXPECT_EQ(ds.rows(), 29u);
  EXPECT_EQ(ds.features(), 6u);
  EXPECT_EQ(ds.feature_names[2], "time.dow_sin");
  EXPECT_EQ(ds.dates.back(), f.date(28));
  const auto& close = f.column("btc.close").values;
  for (std::size_t t = 0; t < ds.rows(); ++t) EXPECT_EQ(ds.y[t], close[t + 1] > close[t] ? 1 : 0);

  auto gappy = frame_with({{"btc.close", {1, 2, 3}}, {"x", {1, kMissing, 2}}});
  EXPECT_THROW(build_labeled_dataset(gappy, "btc.close"), IntegrityError);
}

}  // namespace
}  // namespace btcdir
