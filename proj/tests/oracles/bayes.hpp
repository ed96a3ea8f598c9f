#pragma once

// Test-only Bernoulli naive Bayes oracle. Shares no code with the library.

#include <vector>

#include "btcdir/core/matrix.hpp"

namespace btcdir::oracle {

// Bayes rule by direct counting and products, no logs.
inline double bnb_oracle(const Matrix& x, const std::vector<int>& y, double alpha, double thr, const std::vector<int>& query) {
  double joint[2];
  for (int c = 0; c < 2; ++c) {
    double nc = 0;
    for (int v : y) nc += v == c;
    double prod = nc / static_cast<double>(y.size());
    for (std::size_t j = 0; j < query.size(); ++j) {
      double ones = 0;
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == c && x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > thr) ones += 1;
      const double p = (ones + alpha) / (nc + 2 * alpha);
      prod *= query[j] ? p : 1 - p;
    }
    joint[c] = prod;
  }
  return joint[1] / (joint[0] + joint[1]);
}

}  // namespace btcdir::oracle
