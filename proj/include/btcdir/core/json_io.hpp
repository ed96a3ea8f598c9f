#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "btcdir/core/error.hpp"
#include "btcdir/core/fingerprint.hpp"
#include "btcdir/core/matrix.hpp"

namespace btcdir {

inline nlohmann::json to_json(const IndexSet& s) {
  auto arr = nlohmann::json::array();
  for (auto r : s.ranges()) arr.push_back({r.begin, r.end});
  return arr;
}

inline IndexSet index_set_from_json(const nlohmann::json& j) {
  std::vector<IndexRange> ranges;
  for (const auto& r : j) ranges.push_back({r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>()});
  return IndexSet::from_ranges(ranges);
}

inline nlohmann::json to_json(const FitFingerprint& f) {
  return {{"artifact_id", f.artifact_id}, {"rows", to_json(f.rows)}, {"digest", f.digest_hex()}, {"count", f.rows.size()}};
}

inline FitFingerprint fingerprint_from_json(const nlohmann::json& j) {
  FitFingerprint f{j.at("artifact_id").get<std::string>(), index_set_from_json(j.at("rows"))};
  if (j.contains("digest") && j["digest"].get<std::string>() != f.digest_hex())
    throw IntegrityError("fingerprint digest does not match its row set for '" + f.artifact_id + "'");
  return f;
}

inline nlohmann::json to_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index cols_if_empty = 0) {
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto d = n > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : cols_if_empty;
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != d) throw SchemaError("ragged matrix in JSON");
    for (Eigen::Index k = 0; k < d; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return m;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Vector vector_from_json(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace btcdir
