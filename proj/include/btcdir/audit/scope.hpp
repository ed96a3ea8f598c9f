#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "btcdir/core/fingerprint.hpp"
#include "btcdir/core/json_io.hpp"

namespace btcdir {

/// Outcome of one fit-scope check. A violation is a result, not an error.
struct ScopeReport {
  std::string artifact_id;
  std::string digest;
  std::size_t fitted_rows = 0;
  IndexSet offending;  // fitted rows outside the allowed set
  bool passed() const { return offending.empty(); }
};

inline ScopeReport assert_fit_scope(const FitFingerprint& fp, const IndexSet& allowed) {
  const auto outside = fp.rows.minus(allowed);
  return {fp.artifact_id, fp.digest_hex(), fp.rows.size(), IndexSet::from_indices(outside)};
}

inline nlohmann::json to_json(const ScopeReport& r) {
  return {{"artifact_id", r.artifact_id}, {"digest", r.digest},           {"fitted_rows", r.fitted_rows},
          {"passed", r.passed()},         {"offending", to_json(r.offending)}, {"offending_count", r.offending.size()}};
}

/// Machine-readable report over many checks.
inline nlohmann::json violation_report(const std::vector<ScopeReport>& reports) {
  auto bad = nlohmann::json::array();
  for (const auto& r : reports)
    if (!r.passed()) bad.push_back(to_json(r));
  return {{"checked", reports.size()}, {"violations", bad}};
}

}  // namespace btcdir
