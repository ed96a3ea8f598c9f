#pragma once

#include <map>
#include <string>

#include "btcdir/ingestion/frame.hpp"

namespace btcdir {

enum class ImputeRule { linear_interpolation, forward_fill, zero_fill };

inline std::string_view to_string(ImputeRule r) {
  switch (r) {
    case ImputeRule::linear_interpolation: return "linear";
    case ImputeRule::forward_fill: return "ffill";
    case ImputeRule::zero_fill: return "zero";
  }
  return "?";
}

inline ImputeRule parse_impute_rule(std::string_view s) {
  if (s == "linear") return ImputeRule::linear_interpolation;
  if (s == "ffill") return ImputeRule::forward_fill;
  if (s == "zero") return ImputeRule::zero_fill;
  throw ConfigError("unknown imputation rule '" + std::string(s) + "'");
}

using ImputeRules = std::map<Category, ImputeRule>;

/// internal: interpolate, prices: carry forward, volumes: zero, economic: carry forward.
inline ImputeRules default_impute_rules() {
  return {{Category::internal, ImputeRule::linear_interpolation},
          {Category::market_price, ImputeRule::forward_fill},
          {Category::market_volume, ImputeRule::zero_fill},
          {Category::economic, ImputeRule::forward_fill}};
}

namespace detail {

inline void fill_linear(std::vector<double>& v) {
  std::size_t last = v.size();  // index of previous observation
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (is_missing(v[i])) continue;
    if (last != v.size() && i - last > 1) {
      const double a = v[last], b = v[i];
      const double span = static_cast<double>(i - last);
      for (std::size_t j = last + 1; j < i; ++j) v[j] = a + (b - a) * static_cast<double>(j - last) / span;
    }
    last = i;
  }
}

inline void fill_forward(std::vector<double>& v) {
  double prev = kMissing;
  for (double& x : v) {
    if (is_missing(x))
      x = prev;
    else
      prev = x;
  }
}

inline void fill_zero(std::vector<double>& v) {
  bool seen = false;
  for (double& x : v) {
    if (!is_missing(x))
      seen = true;
    else if (seen)
      x = 0.0;
  }
}

}  // namespace detail

/// Fill gaps per column category. Leading gaps (before a column's first
/// observation) stay missing; linear interpolation also leaves trailing gaps.
/// Only linear interpolation reads later rows, and it is only accepted for the
/// internal category.
inline CalendarFrame impute(const CalendarFrame& frame, const ImputeRules& rules) {
  for (auto [cat, rule] : rules)
    if (rule == ImputeRule::linear_interpolation && cat != Category::internal)
      throw ConfigError("linear interpolation is look-ahead; only allowed for internal sources, not " +
                        std::string(to_string(cat)));

  CalendarFrame out(frame.start(), frame.size());
  for (const auto& col : frame.columns()) {
    auto it = rules.find(col.category);
    if (it == rules.end())
      throw ConfigError("no imputation rule for category '" + std::string(to_string(col.category)) + "'");
    FrameColumn filled = col;
    switch (it->second) {
      case ImputeRule::linear_interpolation: detail::fill_linear(filled.values); break;
      case ImputeRule::forward_fill: detail::fill_forward(filled.values); break;
      case ImputeRule::zero_fill: detail::fill_zero(filled.values); break;
    }
    out.add_column(std::move(filled));
  }
  return out;
}

}  // namespace btcdir
