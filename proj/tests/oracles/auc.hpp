#pragma once

// Test-only AUC oracle: the concordant-pair statistic by brute force.

#include <vector>

namespace btcdir::oracle {

// Concordant pairs over all positive/negative pairs; ties count one half.
inline double pair_auc(const std::vector<double>& p, const std::vector<int>& y) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        den += 1;
        num += p[i] > p[j] ? 1.0 : p[i] == p[j] ? 0.5 : 0.0;
      }
  return num / den;
}

}  // namespace btcdir::oracle
