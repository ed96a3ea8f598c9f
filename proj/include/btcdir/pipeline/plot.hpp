#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "btcdir/core/error.hpp"
#include "btcdir/trading/backtest.hpp"

namespace btcdir {

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

/// SVG overlay of cumulative pnl and the close price min-max scaled into the
/// pnl range. Day 0 carries pnl 0. Output depends only on the inputs.
inline std::string render_plot(const TradeLedger& ledger, const PricePath& prices, const std::string& title = "") {
  if (ledger.entries.empty()) throw EmptyRangeError("emit_plot: empty ledger");
  if (prices.size() != ledger.entries.size() + 1) throw DimensionError("emit_plot: ledger and prices are not aligned");
  const std::size_t n = prices.size();
  std::vector<double> pnl{0.0};
  pnl.insert(pnl.end(), ledger.cumulative_pnl.begin(), ledger.cumulative_pnl.end());

  double lo = *std::min_element(pnl.begin(), pnl.end()), hi = *std::max_element(pnl.begin(), pnl.end());
  const double pmin = *std::min_element(prices.close.begin(), prices.close.end());
  const double pmax = *std::max_element(prices.close.begin(), prices.close.end());
  const bool flat_pnl = hi - lo <= 0;
  if (flat_pnl) {
    lo -= 1;
    hi += 1;
  }
  // A flat price maps to the middle of the band.
  auto scaled = [&](double c) { return pmax > pmin ? lo + (c - pmin) / (pmax - pmin) * (hi - lo) : (lo + hi) / 2; };

  const double w = 800, h = 400, left = 70, right = 20, top = 40, bottom = 50;
  auto px = [&](std::size_t i) { return left + (n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0) * (w - left - right); };
  auto py = [&](double v) { return top + (hi - v) / (hi - lo) * (h - top - bottom); };
  auto polyline = [&](auto value, const char* colour) {
    std::string s = "<polyline fill=\"none\" stroke=\"";
    s += colour;
    s += "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
      if (i) s += ' ';
      s += detail::fmt2(px(i)) + ',' + detail::fmt2(py(value(i)));
    }
    return s + "\"/>\n";
  };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"400\" viewBox=\"0 0 800 400\">\n";
  s += "<rect width=\"800\" height=\"400\" fill=\"white\"/>\n";
  if (!title.empty()) s += "<text x=\"400\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + title + "</text>\n";
  s += "<line x1=\"70\" y1=\"350\" x2=\"780\" y2=\"350\" stroke=\"black\"/>\n";
  s += "<line x1=\"70\" y1=\"40\" x2=\"70\" y2=\"350\" stroke=\"black\"/>\n";
  s += "<text x=\"425\" y=\"385\" text-anchor=\"middle\" font-size=\"12\">date (" + prices.dates.front().iso() + " to " +
       prices.dates.back().iso() + ")</text>\n";
  s += "<text x=\"18\" y=\"195\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 195)\">cumulative pnl (USD)</text>\n";
  s += "<text x=\"66\" y=\"44\" text-anchor=\"end\" font-size=\"10\">" + detail::fmt2(hi) + "</text>\n";
  s += "<text x=\"66\" y=\"350\" text-anchor=\"end\" font-size=\"10\">" + detail::fmt2(lo) + "</text>\n";
  s += polyline([&](std::size_t i) { return scaled(prices.close[i]); }, "#999999");
  s += polyline([&](std::size_t i) { return pnl[i]; }, "#1f4e9c");
  s += "<rect x=\"600\" y=\"48\" width=\"170\" height=\"44\" fill=\"white\" stroke=\"#cccccc\"/>\n";
  s += "<line x1=\"608\" y1=\"62\" x2=\"632\" y2=\"62\" stroke=\"#1f4e9c\" stroke-width=\"2\"/>\n";
  s += "<text x=\"638\" y=\"66\" font-size=\"11\">cumulative pnl</text>\n";
  s += "<line x1=\"608\" y1=\"80\" x2=\"632\" y2=\"80\" stroke=\"#999999\" stroke-width=\"2\"/>\n";
  s += "<text x=\"638\" y=\"84\" font-size=\"11\">price (scaled)</text>\n";
  s += "</svg>\n";
  return s;
}

inline void emit_plot(const TradeLedger& ledger, const PricePath& prices, const std::string& path,
                      const std::string& title = "") {
  const auto svg = render_plot(ledger, prices, title);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write plot to " + path);
  out << svg;
}

}  // namespace btcdir
