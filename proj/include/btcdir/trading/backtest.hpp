#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "btcdir/core/date.hpp"
#include "btcdir/core/error.hpp"
#include "btcdir/core/text.hpp"
#include "btcdir/validation/metrics.hpp"

namespace btcdir {

/// Daily closes in USD per unit.
struct PricePath {
  std::vector<Date> dates;
  std::vector<double> close;

  std::size_t size() const { return close.size(); }

  void validate() const {
    if (dates.size() != close.size()) throw DimensionError("price path: dates and closes differ in length");
    for (std::size_t i = 0; i < close.size(); ++i) {
      if (!(close[i] > 0) || !std::isfinite(close[i]))
        throw IntegrityError("price path: close on " + dates[i].iso() + " is not a positive number");
      if (i > 0 && dates[i] - dates[i - 1] != 1)
        throw IntegrityError("price path: dates are not contiguous at " + dates[i].iso());
    }
  }
};

struct RiskPolicy {
  double t_star = 0.5;  // classification pivot, in (0, 1)
  double tau = 1.0;     // risk tolerance, in [0, 1]

  void validate() const {
    if (!(t_star > 0.0 && t_star < 1.0)) throw ConfigError("t_star must lie in (0, 1)");
    if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  }
};

struct ThresholdChoice {
  double t_star = 0.5;
  double gmean = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

/// Pivot maximizing sqrt(TPR (1 - FPR)) over the ROC operating points, one
/// per distinct score. Ties go to the candidate nearest 0.5. The result is
/// nudged inside (0, 1) when a score sits on a boundary.
inline ThresholdChoice optimal_threshold(std::span<const double> probs, std::span<const int> labels) {
  const auto roc = roc_curve(probs, labels);
  ThresholdChoice best{0.5, -1.0, 0.0, 0.0};
  for (const auto& pt : roc) {
    if (!std::isfinite(pt.threshold)) continue;
    const double g = std::sqrt(pt.tpr * (1.0 - pt.fpr));
    const bool better = g > best.gmean || (g == best.gmean && std::abs(pt.threshold - 0.5) < std::abs(best.t_star - 0.5));
    if (better) best = {pt.threshold, g, pt.tpr, pt.fpr};
  }
  constexpr double kEdge = 1e-9;
  best.t_star = std::clamp(best.t_star, kEdge, 1.0 - kEdge);
  return best;
}

enum class Side { long_, short_, abstain };

inline std::string to_string(Side s) {
  switch (s) {
    case Side::long_: return "long";
    case Side::short_: return "short";
    case Side::abstain: return "abstain";
  }
  return "?";
}

struct Decision {
  Side direction = Side::long_;  // what the model leans towards
  double confidence = 0.0;       // normalized distance from the pivot, in [0, 1]
  bool trade = false;

  Side side() const { return trade ? direction : Side::abstain; }
};

/// Normalized confidence: (p - t)/(1 - t) above the pivot, (t - p)/t below.
/// Trades iff confidence >= 1 - tau.
inline Decision confidence(double p, const RiskPolicy& policy) {
  Decision d;
  if (p >= policy.t_star) {
    d.direction = Side::long_;
    d.confidence = (p - policy.t_star) / (1.0 - policy.t_star);
  } else {
    d.direction = Side::short_;
    d.confidence = (policy.t_star - p) / policy.t_star;
  }
  d.confidence = std::clamp(d.confidence, 0.0, 1.0);
  d.trade = d.confidence >= 1.0 - policy.tau;
  return d;
}

struct LedgerEntry {
  Date date;       // day the position is opened
  Date exit_date;  // day it is closed
  Side side = Side::abstain;
  double entry = 0.0;
  double exit = 0.0;
  double pnl = 0.0;
  double confidence = 0.0;
};

struct TradeLedger {
  std::vector<LedgerEntry> entries;
  std::vector<double> cumulative_pnl;  // prefix sums of entry pnl

  double total_pnl() const { return cumulative_pnl.empty() ? 0.0 : cumulative_pnl.back(); }

  std::size_t trades() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const LedgerEntry& e) { return e.side != Side::abstain; }));
  }

  /// Units still held on each ledger day after that day's exits run (and
  /// before its new position opens): positions opened earlier whose exit date
  /// is later.
  std::vector<int> net_position_after_exits() const {
    std::vector<int> out;
    for (const auto& day : entries) {
      int units = 0;
      for (const auto& e : entries)
        if (e.date < day.date && e.exit_date > day.date)
          units += e.side == Side::long_ ? 1 : e.side == Side::short_ ? -1 : 0;
      out.push_back(units);
    }
    return out;
  }
};

/// One-unit daily strategy: the prediction on day t trades the move from
/// close_t to close_{t+1}; the position is closed at close_{t+1}. The last
/// day has no trade.
inline TradeLedger run_backtest(const PricePath& prices, std::span<const double> probs, const RiskPolicy& policy) {
  prices.validate();
  policy.validate();
  if (probs.size() != prices.size())
    throw DimensionError("run_backtest: " + std::to_string(probs.size()) + " probabilities for " +
                         std::to_string(prices.size()) + " prices");
  TradeLedger ledger;
  double cum = 0.0;
  for (std::size_t t = 0; t + 1 < prices.size(); ++t) {
    if (!(probs[t] >= 0.0 && probs[t] <= 1.0)) throw ConfigError("run_backtest: probability outside [0, 1]");
    const Decision d = confidence(probs[t], policy);
    LedgerEntry e{prices.dates[t], prices.dates[t + 1], d.side(), prices.close[t], prices.close[t + 1], 0.0, d.confidence};
    if (e.side == Side::long_) e.pnl = e.exit - e.entry;
    if (e.side == Side::short_) e.pnl = e.entry - e.exit;
    cum += e.pnl;
    ledger.entries.push_back(e);
    ledger.cumulative_pnl.push_back(cum);
  }
  return ledger;
}

/// pnl_t = close_t - close_0 for one unit bought on the first day.
inline std::vector<double> buy_and_hold(const PricePath& prices) {
  if (prices.size() == 0) throw EmptyRangeError("buy_and_hold: empty price path");
  std::vector<double> out(prices.size());
  for (std::size_t i = 0; i < prices.size(); ++i) out[i] = prices.close[i] - prices.close[0];
  return out;
}

inline double total_return(const PricePath& prices) {
  if (prices.size() == 0) throw EmptyRangeError("total_return: empty price path");
  return (prices.close.back() - prices.close.front()) / prices.close.front();
}

struct SweepRow {
  double tau = 0.0;
  double pnl = 0.0;
  std::size_t trades = 0;
  double excess_over_hold = 0.0;  // pnl minus buy-and-hold pnl
};

inline std::vector<SweepRow> tau_sweep(const PricePath& prices, std::span<const double> probs, double t_star,
                                       std::span<const double> taus) {
  const double hold = buy_and_hold(prices).back();
  std::vector<SweepRow> out;
  for (double tau : taus) {
    const auto ledger = run_backtest(prices, probs, {t_star, tau});
    out.push_back({tau, ledger.total_pnl(), ledger.trades(), ledger.total_pnl() - hold});
  }
  return out;
}

inline std::string ledger_csv(const TradeLedger& ledger) {
  std::string out = "date,side,entry,exit,pnl,cum_pnl\n";
  for (std::size_t i = 0; i < ledger.entries.size(); ++i) {
    const auto& e = ledger.entries[i];
    out += e.date.iso() + ',' + to_string(e.side) + ',' + text::format_exact(e.entry) + ',' + text::format_exact(e.exit) + ',' +
           text::format_exact(e.pnl) + ',' + text::format_exact(ledger.cumulative_pnl[i]) + '\n';
  }
  return out;
}

}  // namespace btcdir
