#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "btcdir/ingestion/frame.hpp"

namespace btcdir {

/// Merge sources onto the daily calendar [start, end]. Column `src.name` per
/// source column; days a source lacks are kMissing.
inline CalendarFrame align_calendar(std::span<const RawSeries> series, Date start, Date end) {
  if (start > end) throw ConfigError("align_calendar: start " + start.iso() + " after end " + end.iso());
  CalendarFrame frame(start, static_cast<std::size_t>(end - start) + 1);
  for (const auto& s : series) {
    for (const auto& col : s.columns) {
      std::vector<double> values(frame.size(), kMissing);
      for (std::size_t i = 0; i < s.dates.size(); ++i) {
        auto row = frame.row_of(s.dates[i]);
        if (row < frame.size()) values[row] = col.values[i];
      }
      std::string name = s.source_id + "." + col.name;
      if (frame.has_column(name)) throw IntegrityError("colliding column name '" + name + "'");
      frame.add_column({std::move(name), s.category, std::move(values)});
    }
  }
  return frame;
}

/// Earliest and latest date over all sources.
inline std::pair<Date, Date> date_span(std::span<const RawSeries> series) {
  bool any = false;
  Date lo{}, hi{};
  for (const auto& s : series) {
    if (s.dates.empty()) continue;
    if (!any || s.dates.front() < lo) lo = s.dates.front();
    if (!any || s.dates.back() > hi) hi = s.dates.back();
    any = true;
  }
  if (!any) throw EmptyRangeError("no dated rows in any source");
  return {lo, hi};
}

/// Longest run of rows where every listed column is observed; ties go to the
/// latest start. An empty column list means all columns.
inline std::pair<Date, Date> select_observed_range(const CalendarFrame& frame,
                                                   std::span<const std::string> columns) {
  std::vector<const FrameColumn*> cols;
  if (columns.empty()) {
    for (const auto& c : frame.columns()) cols.push_back(&c);
  } else {
    for (const auto& name : columns) cols.push_back(&frame.column(name));
  }

  std::size_t best_len = 0, best_start = 0, run_start = 0;
  for (std::size_t i = 0; i <= frame.size(); ++i) {
    bool ok = i < frame.size();
    if (ok)
      for (const auto* c : cols)
        if (is_missing(c->values[i])) {
          ok = false;
          break;
        }
    if (!ok) {
      const std::size_t len = i - run_start;
      if (len > 0 && len >= best_len) {
        best_len = len;
        best_start = run_start;
      }
      run_start = i + 1;
    }
  }
  if (best_len == 0) throw EmptyRangeError("no fully observed date window");
  return {frame.date(best_start), frame.date(best_start + best_len - 1)};
}

/// Longest fully observed window over all columns (ties: most recent).
inline std::pair<Date, Date> select_training_range(const CalendarFrame& frame) {
  return select_observed_range(frame, {});
}

}  // namespace btcdir
