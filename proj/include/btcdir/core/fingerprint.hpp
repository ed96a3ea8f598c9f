#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "btcdir/core/rng.hpp"

namespace btcdir {

/// Half-open row interval [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  bool operator==(const IndexRange&) const = default;
};

/// Sorted set of row indices stored as disjoint, non-adjacent intervals.
/// Time-series folds are contiguous, so this stays tiny in practice.
class IndexSet {
 public:
  IndexSet() = default;

  static IndexSet from_range(std::size_t begin, std::size_t end) {
    IndexSet s;
    if (end > begin) s.ranges_.push_back({begin, end});
    return s;
  }

  static IndexSet from_ranges(std::span<const IndexRange> ranges) {
    std::vector<std::size_t> idx;
    for (auto r : ranges)
      for (std::size_t i = r.begin; i < r.end; ++i) idx.push_back(i);
    return from_indices(idx);
  }

  static IndexSet from_indices(std::span<const std::size_t> indices) {
    std::vector<std::size_t> v(indices.begin(), indices.end());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    IndexSet s;
    for (std::size_t i : v) {
      if (!s.ranges_.empty() && s.ranges_.back().end == i)
        ++s.ranges_.back().end;
      else
        s.ranges_.push_back({i, i + 1});
    }
    return s;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (auto r : ranges_) n += r.size();
    return n;
  }
  bool empty() const { return ranges_.empty(); }

  bool contains(std::size_t i) const {
    auto it = std::upper_bound(ranges_.begin(), ranges_.end(), i,
                               [](std::size_t v, const IndexRange& r) { return v < r.begin; });
    return it != ranges_.begin() && std::prev(it)->contains(i);
  }

  /// Indices of *this that are not in `allowed`.
  std::vector<std::size_t> minus(const IndexSet& allowed) const {
    std::vector<std::size_t> out;
    for (auto r : ranges_)
      for (std::size_t i = r.begin; i < r.end; ++i)
        if (!allowed.contains(i)) out.push_back(i);
    return out;
  }

  bool subset_of(const IndexSet& other) const {
    for (auto r : ranges_)
      for (std::size_t i = r.begin; i < r.end; ++i)
        if (!other.contains(i)) return false;
    return true;
  }

  std::vector<std::size_t> to_vector() const {
    std::vector<std::size_t> out;
    out.reserve(size());
    for (auto r : ranges_)
      for (std::size_t i = r.begin; i < r.end; ++i) out.push_back(i);
    return out;
  }

  const std::vector<IndexRange>& ranges() const { return ranges_; }

  /// Order-independent 64-bit digest: sum of mixed indices plus the count.
  std::uint64_t digest() const {
    std::uint64_t h = 0;
    std::uint64_t n = 0;
    for (auto r : ranges_)
      for (std::size_t i = r.begin; i < r.end; ++i, ++n) h += splitmix64(i);
    return splitmix64(h ^ splitmix64(n));
  }

  bool operator==(const IndexSet&) const = default;

 private:
  std::vector<IndexRange> ranges_;
};

/// Record of which rows a fitted artifact (scaler, PCA, classifier) saw.
struct FitFingerprint {
  std::string artifact_id;
  IndexSet rows;

  std::string digest_hex() const {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rows.digest()));
    return buf;
  }

  bool operator==(const FitFingerprint& o) const { return rows == o.rows; }
};

}  // namespace btcdir
