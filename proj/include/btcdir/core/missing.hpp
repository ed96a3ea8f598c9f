#pragma once

#include <cmath>
#include <limits>

namespace btcdir {

/// Marker for an absent observation. Parsed inputs never contain NaN, so a
/// quiet NaN is unambiguous as the missing-value marker.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

}  // namespace btcdir
