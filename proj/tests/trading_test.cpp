#include <gtest/gtest.h>

#include <cmath>

#include "btcdir/core/rng.hpp"
#include "btcdir/trading.hpp"

namespace btcdir {
namespace {

PricePath path(std::vector<double> close) {
  PricePath p;
  p.close = std::move(close);
  for (std::size_t i = 0; i < p.close.size(); ++i) p.dates.push_back(Date(2021, 1, 1) + static_cast<int>(i));
  return p;
}

PricePath random_path(Rng& rng, std::size_t n) {
  std::vector<double> c{rng.uniform(100, 60000)};
  for (std::size_t i = 1; i < n; ++i) c.push_back(c.back() * std::exp(rng.uniform(-0.08, 0.08)));
  return path(c);
}

std::vector<double> random_probs(Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  for (auto& v : p) v = rng.uniform();
  return p;
}

// Best sqrt(TPR (1 - FPR)) over every cut between and around the sorted scores.
double sweep_oracle(const std::vector<double>& p, const std::vector<int>& y, double* max_any = nullptr) {
  std::vector<double> cuts = p;
  cuts.push_back(2.0);
  double best = 0;
  double pos = 0, neg = 0;
  for (int l : y) (l ? pos : neg) += 1;
  for (double t : cuts) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] >= t) (y[i] ? tp : fp) += 1;
    best = std::max(best, std::sqrt(tp / pos * (1 - fp / neg)));
  }
  if (max_any) *max_any = best;
  return best;
}

TEST(Backtest, SingleLongAndShort) {
  const auto prices = path({100, 110});
  auto l = run_backtest(prices, std::vector<double>{0.9, 0.5}, {0.5, 1.0});
  ASSERT_EQ(l.entries.size(), 1u);
  EXPECT_EQ(l.entries[0].side, Side::long_);
  EXPECT_EQ(l.total_pnl(), 10.0);
  auto s = run_backtest(prices, std::vector<double>{0.1, 0.5}, {0.5, 1.0});
  EXPECT_EQ(s.entries[0].side, Side::short_);
  EXPECT_EQ(s.total_pnl(), -10.0);
}

TEST(Backtest, Errors) {
  EXPECT_THROW(run_backtest(path({100, 110}), std::vector<double>{0.9}, {0.5, 1.0}), DimensionError);
  EXPECT_THROW(run_backtest(path({100, -1}), std::vector<double>{0.9, 0.1}, {0.5, 1.0}), IntegrityError);
  EXPECT_THROW(run_backtest(path({100, 110}), std::vector<double>{0.9, 0.1}, {1.0, 1.0}), ConfigError);
  EXPECT_THROW(run_backtest(path({100, 110}), std::vector<double>{0.9, 0.1}, {0.5, 1.5}), ConfigError);
  auto p = path({100, 110});
  p.dates[1] = p.dates[1] + 1;
  EXPECT_THROW(run_backtest(p, std::vector<double>{0.9, 0.1}, {0.5, 1.0}), IntegrityError);
}

TEST(Confidence, Boundaries) {
  const RiskPolicy pol{0.4, 0.0};
  auto d = confidence(0.4, pol);
  EXPECT_EQ(d.confidence, 0.0);
  EXPECT_FALSE(d.trade);
  EXPECT_TRUE(confidence(0.4, {0.4, 1.0}).trade);
  d = confidence(1.0, pol);
  EXPECT_EQ(d.direction, Side::long_);
  EXPECT_EQ(d.confidence, 1.0);
  EXPECT_TRUE(d.trade);
  d = confidence(0.0, pol);
  EXPECT_EQ(d.side(), Side::short_);
  EXPECT_EQ(d.confidence, 1.0);
  d = confidence(0.7, {0.4, 0.3});
  EXPECT_NEAR(d.confidence, 0.5, 1e-15);
  EXPECT_FALSE(d.trade);
  EXPECT_TRUE(confidence(0.85, {0.4, 0.3}).trade);
}

TEST(Backtest, TauOneMatchesBaseStrategy) {
  Rng rng(2);
  const auto prices = random_path(rng, 60);
  const auto probs = random_probs(rng, 60);
  const double t = 0.37;
  const auto l = run_backtest(prices, probs, {t, 1.0});
  for (std::size_t i = 0; i < l.entries.size(); ++i) EXPECT_EQ(l.entries[i].side, probs[i] >= t ? Side::long_ : Side::short_);
}

// Properties over 1,000 random paths and probability streams.
TEST(BacktestProperties, RandomPaths) {
  Rng rng(11);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 2 + rng.below(120);
    const auto prices = random_path(rng, n);
    const auto probs = random_probs(rng, n);
    const double t_star = rng.uniform(0.05, 0.95);

    // Telescoping: always long at tau = 1.
    const auto all_long = run_backtest(prices, std::vector<double>(n, 1.0), {t_star, 1.0});
    ASSERT_EQ(all_long.total_pnl(), [&] {
      double s = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) s += prices.close[i + 1] - prices.close[i];
      return s;
    }());
    ASSERT_NEAR(all_long.total_pnl(), prices.close.back() - prices.close.front(), 1e-9 * prices.close.front());
    ASSERT_EQ(buy_and_hold(prices).back(), prices.close.back() - prices.close.front());

    // Antisymmetry: mirrored probabilities about t = 0.5 flip every side.
    std::vector<double> mirrored(n);
    for (std::size_t i = 0; i < n; ++i) mirrored[i] = probs[i] == 0.5 ? 0.4 : 1.0 - probs[i];
    const double tau = rng.uniform();
    const auto a = run_backtest(prices, probs, {0.5, tau}), b = run_backtest(prices, mirrored, {0.5, tau});
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (probs[i] == 0.5) continue;
      ASSERT_EQ(a.entries[i].pnl, -b.entries[i].pnl);
    }

    // Abstention monotonicity in tau.
    double t1 = rng.uniform(), t2 = rng.uniform();
    if (t1 > t2) std::swap(t1, t2);
    const auto l1 = run_backtest(prices, probs, {t_star, t1}), l2 = run_backtest(prices, probs, {t_star, t2});
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (l1.entries[i].side != Side::abstain) {
        ASSERT_EQ(l2.entries[i].side, l1.entries[i].side);
      }

    // Daily neutralization and zero-fee accounting.
    for (int units : l1.net_position_after_exits()) ASSERT_EQ(units, 0);
    double sum = 0;
    for (const auto& e : l1.entries) {
      sum += e.pnl;
      ASSERT_EQ(e.exit_date - e.date, 1);
      if (e.side == Side::abstain) {
        ASSERT_EQ(e.pnl, 0.0);
      }
      if (e.side == Side::long_) {
        ASSERT_EQ(e.pnl, e.exit - e.entry);
      }
      if (e.side == Side::short_) {
        ASSERT_EQ(e.pnl, e.entry - e.exit);
      }
    }
    ASSERT_NEAR(sum, l1.total_pnl(), 1e-9);
  }
}

TEST(BuyAndHold, FlatPathAndEquivalence) {
  const auto flat = path({5, 5, 5, 5});
  for (double v : buy_and_hold(flat)) EXPECT_EQ(v, 0.0);
  Rng rng(4);
  const auto p = random_path(rng, 30);
  const auto hold = buy_and_hold(p);
  const auto l = run_backtest(p, std::vector<double>(30, 0.99), {0.5, 1.0});
  for (std::size_t i = 0; i < l.cumulative_pnl.size(); ++i) EXPECT_NEAR(l.cumulative_pnl[i], hold[i + 1], 1e-9);
  EXPECT_THROW(buy_and_hold(PricePath{}), EmptyRangeError);
}

TEST(OptimalThreshold, PerfectSeparation) {
  const std::vector<double> p{0.9, 0.9, 0.1, 0.1};
  const std::vector<int> y{1, 1, 0, 0};
  const auto t = optimal_threshold(p, y);
  EXPECT_EQ(t.gmean, 1.0);
  EXPECT_GT(t.t_star, 0.1);
  EXPECT_LE(t.t_star, 0.9);
}

TEST(OptimalThreshold, TieGoesNearestHalf) {
  // Cuts at 0.9 and 0.2 both reach gmean sqrt(1/2); 0.2 is nearer 0.5.
  const std::vector<double> p{0.9, 0.6, 0.2, 0.1};
  const std::vector<int> y{1, 0, 1, 0};
  const auto t = optimal_threshold(p, y);
  EXPECT_NEAR(t.gmean, std::sqrt(0.5), 1e-15);
  EXPECT_EQ(t.t_star, 0.2);
}

TEST(OptimalThreshold, MatchesBruteForceSweep) {
  Rng rng(6);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 10 + rng.below(200);
    std::vector<double> p(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.uniform();
      y[i] = rng.uniform() < 0.5;
    }
    y[0] = 1;
    y[1] = 0;
    const auto t = optimal_threshold(p, y);
    ASSERT_NEAR(t.gmean, sweep_oracle(p, y), 1e-12);
    ASSERT_GT(t.t_star, 0.0);
    ASSERT_LT(t.t_star, 1.0);
  }
}

TEST(OptimalThreshold, InvertedClassifierStaysBelowHalf) {
  Rng rng(8);
  std::vector<double> p(200);
  std::vector<int> y(200);
  for (std::size_t i = 0; i < 200; ++i) {
    y[i] = i % 2;
    p[i] = y[i] ? rng.uniform(0.0, 0.45) : rng.uniform(0.55, 1.0);
  }
  double oracle = 0;
  sweep_oracle(p, y, &oracle);
  EXPECT_LT(oracle, 0.5);
  EXPECT_LT(optimal_threshold(p, y).gmean, 0.5);
  EXPECT_THROW(optimal_threshold(std::vector<double>{0.3}, std::vector<int>{1}), DegenerateLabelError);
}

TEST(Ledger, CsvAndSweep) {
  const auto prices = path({100, 110, 105, 120});
  const std::vector<double> probs{0.9, 0.2, 0.55, 0.5};
  const auto l = run_backtest(prices, probs, {0.5, 0.5});
  EXPECT_EQ(ledger_csv(l),
            "date,side,entry,exit,pnl,cum_pnl\n"
            "2021-01-01,long,100,110,10,10\n"
            "2021-01-02,short,110,105,5,15\n"
            "2021-01-03,abstain,105,120,0,15\n");
  const std::vector<double> taus{0.0, 0.5, 1.0};
  const auto sweep = tau_sweep(prices, probs, 0.5, taus);
  ASSERT_EQ(sweep.size(), 3u);
  EXPECT_EQ(sweep[0].trades, 0u);
  EXPECT_EQ(sweep[2].trades, 3u);
  EXPECT_EQ(sweep[2].pnl, 10 + 5 + 15);
  EXPECT_EQ(sweep[0].excess_over_hold, -20.0);
}

}  // namespace
}  // namespace btcdir
