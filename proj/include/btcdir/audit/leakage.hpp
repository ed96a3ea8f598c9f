#pragma once

#include <cmath>
#include <vector>

#include <json.hpp>

#include "btcdir/core/error.hpp"
#include "btcdir/features/dataset.hpp"
#include "btcdir/models/classifier.hpp"
#include "btcdir/validation/metrics.hpp"
#include "btcdir/validation/nested_cv.hpp"

namespace btcdir {

struct LeakageComparison {
  Metrics leaky;  // model trained on train + test rows
  Metrics clean;  // model trained on train rows only
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  double gap() const { return leaky.accuracy - clean.accuracy; }
};

/// Score one model trained with the final `test_fraction` of the rows
/// included in its training set and one trained without them, both on those
/// test rows. Scaling (and PCA when `evr_target` is set) is fitted on the
/// same rows as the model.
inline LeakageComparison leaky_vs_clean(const LabeledDataset& data, ModelKind kind, const Hyperparams& hp,
                                        std::uint64_t seed = kDefaultSeed, double test_fraction = 0.2,
                                        std::optional<double> evr_target = std::nullopt) {
  data.validate();
  if (data.rows() < 100) throw ConfigError("leaky_vs_clean needs at least 100 rows");
  if (!(test_fraction > 0 && test_fraction < 1)) throw ConfigError("leaky_vs_clean: test_fraction must lie in (0, 1)");
  const std::size_t n = data.rows();
  const auto split = n - static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(n)));
  const auto test = iota_rows(split, n);
  const auto test_y = take(data.y, test);

  auto run = [&](std::size_t fit_end) {
    const auto rows = iota_rows(0, fit_end);
    const auto t = fit_feature_transform(data.x, rows, true, evr_target, "leakage.");
    const Matrix z = t.apply(data.x);
    const auto model = fit_classifier(kind, take_rows(z, rows), take(data.y, rows), hp, seed, IndexSet::from_range(0, fit_end));
    const Vector p = model.predict_proba(take_rows(z, test));
    return evaluate(std::vector<double>(p.data(), p.data() + p.size()), test_y);
  };
  return {run(n), run(split), split, n - split};
}

inline nlohmann::json to_json(const LeakageComparison& c) {
  return {{"leaky", to_json(c.leaky)}, {"clean", to_json(c.clean)}, {"gap", c.gap()},
          {"train_rows", c.train_rows}, {"test_rows", c.test_rows}};
}

}  // namespace btcdir
