#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "btcdir/core/matrix.hpp"
#include "btcdir/core/text.hpp"
#include "btcdir/features/indicators.hpp"
#include "btcdir/ingestion/csv.hpp"
#include "btcdir/ingestion/frame.hpp"

namespace btcdir {

inline std::string indicator_column_name(std::string_view base, const IndicatorSpec& spec) {
  return std::string(base) + "." + std::string(to_string(spec.kind)) + "." + std::to_string(spec.window);
}

/// Append one column `base.KIND.window` per (base, spec) pair.
inline CalendarFrame expand_features(const CalendarFrame& frame, std::span<const std::string> base_columns,
                                     std::span<const IndicatorSpec> specs) {
  CalendarFrame out = frame;
  for (const auto& base : base_columns) {
    const FrameColumn& col = frame.column(base);
    for (const auto& spec : specs) {
      auto name = indicator_column_name(base, spec);
      if (out.has_column(name)) throw IntegrityError("feature name collision '" + name + "'");
      try {
        out.add_column({std::move(name), col.category, compute_indicator(col.values, spec)});
      } catch (const IntegrityError&) {
        throw IntegrityError("expand_features: base column '" + base + "' is not fully observed");
      }
    }
  }
  return out;
}

/// Day-of-week and day-of-month on the unit circle:
/// (sin, cos)(2*pi*dow/7) with Monday = 0, (sin, cos)(2*pi*(dom-1)/31).
inline std::array<Column, 4> cyclical_time_features(std::span<const Date> dates) {
  std::array<Column, 4> cols{Column{"time.dow_sin", {}}, Column{"time.dow_cos", {}}, Column{"time.dom_sin", {}},
                             Column{"time.dom_cos", {}}};
  for (auto& c : cols) c.values.reserve(dates.size());
  for (Date d : dates) {
    const double a = 2.0 * std::numbers::pi * d.day_of_week() / 7.0;
    const double b = 2.0 * std::numbers::pi * (d.day_of_month() - 1.0) / 31.0;
    cols[0].values.push_back(std::sin(a));
    cols[1].values.push_back(std::cos(a));
    cols[2].values.push_back(std::sin(b));
    cols[3].values.push_back(std::cos(b));
  }
  return cols;
}

/// y[t] = 1 iff close[t + lag] > close[t]. A flat move is 0. Output has
/// close.size() - lag entries; the last `lag` days are unlabeled.
inline std::vector<int> make_target(std::span<const double> close, int lag = 1) {
  if (lag < 1) throw ConfigError("make_target: lag must be positive");
  if (static_cast<std::size_t>(lag) >= close.size())
    throw ConfigError("make_target: lag " + std::to_string(lag) + " >= series length " + std::to_string(close.size()));
  for (double v : close)
    if (is_missing(v)) throw IntegrityError("make_target: close has missing values");
  std::vector<int> y(close.size() - static_cast<std::size_t>(lag));
  for (std::size_t t = 0; t < y.size(); ++t) y[t] = close[t + static_cast<std::size_t>(lag)] > close[t] ? 1 : 0;
  return y;
}

/// Model-ready table: no missing cells, y[t] is the direction of day t+1.
struct LabeledDataset {
  std::vector<Date> dates;
  Matrix x;
  std::vector<int> y;
  std::vector<std::string> feature_names;

  std::size_t rows() const { return y.size(); }
  std::size_t features() const { return static_cast<std::size_t>(x.cols()); }

  double positive_rate() const {
    if (y.empty()) return 0.0;
    std::size_t pos = 0;
    for (int v : y) pos += v == 1;
    return static_cast<double>(pos) / static_cast<double>(y.size());
  }

  LabeledDataset subset(std::span<const std::size_t> rows_) const {
    return {take(dates, rows_), take_rows(x, rows_), take(y, rows_), feature_names};
  }

  void validate() const {
    if (static_cast<std::size_t>(x.rows()) != y.size() || dates.size() != y.size())
      throw DimensionError("dataset: rows(X), len(y) and len(dates) differ");
    if (feature_names.size() != static_cast<std::size_t>(x.cols()))
      throw DimensionError("dataset: feature name count differs from column count");
    if (!x.allFinite()) throw IntegrityError("dataset: X has missing or non-finite cells");
    for (int v : y)
      if (v != 0 && v != 1) throw IntegrityError("dataset: labels must be 0/1");
  }
};

/// Every frame column plus (optionally) the four cyclical time columns, all
/// frame rows. Throws if any cell is missing.
inline Matrix frame_feature_matrix(const CalendarFrame& frame, bool cyclical, std::vector<std::string>* names = nullptr) {
  const auto n = static_cast<Eigen::Index>(frame.size());
  const auto extra = cyclical ? 4 : 0;
  Matrix x(n, static_cast<Eigen::Index>(frame.column_count()) + extra);
  if (names) names->clear();
  Eigen::Index j = 0;
  for (const auto& c : frame.columns()) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = c.values[static_cast<std::size_t>(i)];
      if (is_missing(v))
        throw IntegrityError("column '" + c.name + "' missing on " + frame.date(static_cast<std::size_t>(i)).iso());
      x(i, j) = v;
    }
    if (names) names->push_back(c.name);
    ++j;
  }
  if (cyclical) {
    auto dates = frame.dates();
    for (auto& c : cyclical_time_features(dates)) {
      for (Eigen::Index i = 0; i < n; ++i) x(i, j) = c.values[static_cast<std::size_t>(i)];
      if (names) names->push_back(c.name);
      ++j;
    }
  }
  return x;
}

/// Build features from every column of `frame` and the direction target from
/// `close_column`. The final `lag` days are dropped (no label yet).
inline LabeledDataset build_labeled_dataset(const CalendarFrame& frame, std::string_view close_column, int lag = 1,
                                            bool cyclical = true) {
  LabeledDataset ds;
  auto y = make_target(frame.column(close_column).values, lag);
  Matrix all = frame_feature_matrix(frame, cyclical, &ds.feature_names);
  ds.x = all.topRows(static_cast<Eigen::Index>(y.size()));
  ds.y = std::move(y);
  auto dates = frame.dates();
  ds.dates.assign(dates.begin(), dates.begin() + static_cast<std::ptrdiff_t>(ds.y.size()));
  return ds;
}

/// CSV artifact: `date,<features...>,y`.
inline void write_dataset_csv(const LabeledDataset& ds, std::ostream& out) {
  out << "date";
  for (const auto& n : ds.feature_names) out << ',' << n;
  out << ",y\n";
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    out << ds.dates[i].iso();
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) out << ',' << text::format_exact(ds.x(static_cast<Eigen::Index>(i), j));
    out << ',' << ds.y[i] << '\n';
  }
}

inline LabeledDataset read_dataset_csv(const std::filesystem::path& path) {
  RawSeries s = load_csv(path, {}, Category::internal);
  if (s.columns.empty() || s.columns.back().name != "y") throw SchemaError(path.string() + ": last column must be 'y'");
  LabeledDataset ds;
  ds.dates = s.dates;
  const auto n = static_cast<Eigen::Index>(s.dates.size());
  const auto d = static_cast<Eigen::Index>(s.columns.size() - 1);
  ds.x.resize(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto& c = s.columns[static_cast<std::size_t>(j)];
    ds.feature_names.push_back(c.name);
    for (Eigen::Index i = 0; i < n; ++i) ds.x(i, j) = c.values[static_cast<std::size_t>(i)];
  }
  for (double v : s.columns.back().values) ds.y.push_back(static_cast<int>(v));
  ds.validate();
  return ds;
}

}  // namespace btcdir
