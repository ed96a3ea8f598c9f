#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "btcdir/core/date.hpp"
#include "btcdir/core/error.hpp"
#include "btcdir/core/missing.hpp"

namespace btcdir {

/// Source family; decides which imputation rule is legal for its columns.
enum class Category { internal, market_price, market_volume, economic };

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::internal: return "internal";
    case Category::market_price: return "market_price";
    case Category::market_volume: return "market_volume";
    case Category::economic: return "economic";
  }
  return "?";
}

inline Category parse_category(std::string_view s) {
  if (s == "internal") return Category::internal;
  if (s == "market_price") return Category::market_price;
  if (s == "market_volume") return Category::market_volume;
  if (s == "economic") return Category::economic;
  throw ConfigError("unknown source category '" + std::string(s) + "'");
}

struct Column {
  std::string name;
  std::vector<double> values;
};

/// One loaded source file. Dates strictly increasing; every column has one
/// value (or kMissing) per date.
struct RawSeries {
  std::string source_id;
  Category category = Category::internal;
  std::vector<Date> dates;
  std::vector<Column> columns;

  std::size_t size() const { return dates.size(); }
};

struct FrameColumn {
  std::string name;
  Category category = Category::internal;
  std::vector<double> values;
};

/// Table over a gap-free daily calendar. Cells are reals or kMissing.
class CalendarFrame {
 public:
  CalendarFrame() = default;
  CalendarFrame(Date start, std::size_t n_days) : start_(start), n_(n_days) {}

  Date start() const { return start_; }
  Date end() const { return start_ + static_cast<std::int32_t>(n_) - 1; }
  std::size_t size() const { return n_; }
  bool empty() const { return n_ == 0; }
  Date date(std::size_t row) const { return start_ + static_cast<std::int32_t>(row); }

  std::vector<Date> dates() const {
    std::vector<Date> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = date(i);
    return out;
  }

  /// Row of `d`, or size() when outside the calendar.
  std::size_t row_of(Date d) const {
    if (d < start_ || d > end()) return n_;
    return static_cast<std::size_t>(d - start_);
  }

  const std::vector<FrameColumn>& columns() const { return columns_; }
  std::size_t column_count() const { return columns_.size(); }

  bool has_column(std::string_view name) const { return find(name) != nullptr; }

  const FrameColumn& column(std::string_view name) const {
    if (auto* c = find(name)) return *c;
    throw SchemaError("no column named '" + std::string(name) + "'");
  }

  void add_column(FrameColumn col) {
    if (col.values.size() != n_)
      throw IntegrityError("column '" + col.name + "' has " + std::to_string(col.values.size()) +
                           " cells, calendar has " + std::to_string(n_));
    if (has_column(col.name)) throw IntegrityError("duplicate column name '" + col.name + "'");
    columns_.push_back(std::move(col));
  }

  std::size_t missing_count() const {
    std::size_t n = 0;
    for (const auto& c : columns_)
      n += static_cast<std::size_t>(std::count_if(c.values.begin(), c.values.end(), is_missing));
    return n;
  }

  /// Rows [first, last] inclusive by date.
  CalendarFrame slice(Date first, Date last) const {
    if (first > last || first < start_ || last > end())
      throw ConfigError("slice " + first.iso() + ".." + last.iso() + " outside frame " + start_.iso() +
                        ".." + end().iso());
    const auto a = row_of(first);
    const auto b = row_of(last) + 1;
    CalendarFrame out(first, b - a);
    for (const auto& c : columns_)
      out.columns_.push_back({c.name, c.category, std::vector<double>(c.values.begin() + a, c.values.begin() + b)});
    return out;
  }

 private:
  const FrameColumn* find(std::string_view name) const {
    for (const auto& c : columns_)
      if (c.name == name) return &c;
    return nullptr;
  }

  Date start_{};
  std::size_t n_ = 0;
  std::vector<FrameColumn> columns_;
};

}  // namespace btcdir
