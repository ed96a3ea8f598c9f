#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "btcdir/core/text.hpp"
#include "btcdir/ingestion/frame.hpp"

namespace btcdir {

/// Expected columns of a source file. All declared columns are real-valued;
/// an empty list means "every column after `date`".
struct ColumnSchema {
  std::vector<std::string> columns;
};

/// Load a daily CSV (`date` first, ISO dates, reals or empty cells).
inline RawSeries load_csv(const std::filesystem::path& path, const ColumnSchema& schema, Category category,
                          std::string source_id = {}) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path.string());
  if (source_id.empty()) source_id = path.stem().string();

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!text::trim(line).empty()) {
      header = text::split_csv(line);
      break;
    }
  }
  if (header.empty()) throw SchemaError(path.string() + ": empty file");
  if (header[0] != "date") throw SchemaError(path.string() + ": first column must be 'date', found '" + header[0] + "'");

  std::vector<std::string> wanted = schema.columns;
  if (wanted.empty()) wanted.assign(header.begin() + 1, header.end());
  std::vector<std::size_t> pos;
  for (const auto& name : wanted) {
    auto it = std::find(header.begin() + 1, header.end(), name);
    if (it == header.end()) throw SchemaError(path.string() + ": missing column '" + name + "'");
    pos.push_back(static_cast<std::size_t>(it - header.begin()));
  }

  struct Row {
    Date date;
    std::vector<double> cells;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto fields = text::split_csv(line);
    if (fields.size() != header.size())
      throw SchemaError(path.string() + ": row " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                        " fields, header has " + std::to_string(header.size()));
    auto d = Date::parse(fields[0]);
    if (!d) throw SchemaError(path.string() + ": row " + std::to_string(line_no) + ", column 'date': bad date '" + fields[0] + "'");
    Row r{*d, {}};
    r.cells.reserve(pos.size());
    for (std::size_t j = 0; j < pos.size(); ++j) {
      const auto& cell = fields[pos[j]];
      if (cell.empty()) {
        r.cells.push_back(kMissing);
        continue;
      }
      auto v = text::parse_real(cell);
      if (!v)
        throw SchemaError(path.string() + ": row " + std::to_string(line_no) + ", column '" + wanted[j] +
                          "': not a number '" + cell + "'");
      r.cells.push_back(*v);
    }
    rows.push_back(std::move(r));
  }

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].date == rows[i - 1].date)
      throw IntegrityError(path.string() + ": duplicate date " + rows[i].date.iso());

  RawSeries s;
  s.source_id = std::move(source_id);
  s.category = category;
  s.dates.reserve(rows.size());
  for (const auto& r : rows) s.dates.push_back(r.date);
  for (std::size_t j = 0; j < wanted.size(); ++j) {
    Column c{wanted[j], {}};
    c.values.reserve(rows.size());
    for (const auto& r : rows) c.values.push_back(r.cells[j]);
    s.columns.push_back(std::move(c));
  }
  return s;
}

/// Write a frame as CSV; missing cells are empty, values round-trip exactly.
inline void write_frame_csv(const CalendarFrame& frame, std::ostream& out) {
  out << "date";
  for (const auto& c : frame.columns()) out << ',' << c.name;
  out << '\n';
  for (std::size_t i = 0; i < frame.size(); ++i) {
    out << frame.date(i).iso();
    for (const auto& c : frame.columns()) {
      out << ',';
      if (!is_missing(c.values[i])) out << text::format_exact(c.values[i]);
    }
    out << '\n';
  }
}

/// Read a frame written by write_frame_csv. Dates must be contiguous.
/// Column categories are not stored in the CSV; `category` is applied to all.
inline CalendarFrame read_frame_csv(const std::filesystem::path& path, Category category = Category::internal) {
  RawSeries s = load_csv(path, {}, category);
  if (s.dates.empty()) return {};
  for (std::size_t i = 1; i < s.dates.size(); ++i)
    if (s.dates[i] - s.dates[i - 1] != 1)
      throw IntegrityError(path.string() + ": calendar gap after " + s.dates[i - 1].iso());
  CalendarFrame f(s.dates.front(), s.dates.size());
  for (auto& c : s.columns) f.add_column({c.name, category, std::move(c.values)});
  return f;
}

}  // namespace btcdir
