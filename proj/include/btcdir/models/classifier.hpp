#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "btcdir/core/error.hpp"
#include "btcdir/core/fingerprint.hpp"
#include "btcdir/core/json_io.hpp"
#include "btcdir/core/matrix.hpp"
#include "btcdir/models/boosting.hpp"
#include "btcdir/models/hyperparams.hpp"
#include "btcdir/models/naive_bayes.hpp"
#include "btcdir/models/random_forest.hpp"
#include "btcdir/models/svm.hpp"

namespace btcdir {

inline constexpr std::uint64_t kDefaultSeed = 42;

/// A fitted model of any kind together with its hyperparameters, seed and the
/// rows it was trained on.
class Classifier {
 public:
  using State = std::variant<SvmClassifier, BoostedTrees, RandomForest, BernoulliNB>;

  ModelKind kind() const { return kind_; }
  const Hyperparams& hyperparams() const { return hp_; }
  std::uint64_t seed() const { return seed_; }
  const FitFingerprint& fingerprint() const { return fingerprint_; }
  std::size_t n_features() const { return n_features_; }
  const State& state() const { return state_; }

  /// Class-1 probability per row, clamped into [0, 1].
  Vector predict_proba(const Matrix& x) const {
    if (static_cast<std::size_t>(x.cols()) != n_features_)
      throw DimensionError("classifier expects " + std::to_string(n_features_) + " features, got " +
                           std::to_string(x.cols()));
    Vector p = std::visit([&](const auto& m) { return Vector(m.predict_proba(x)); }, state_);
    return p.cwiseMax(0.0).cwiseMin(1.0);
  }

  std::vector<int> predict(const Matrix& x, double threshold = 0.5) const {
    const Vector p = predict_proba(x);
    std::vector<int> out(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p(i) >= threshold ? 1 : 0;
    return out;
  }

  /// Normalized mean impurity decrease. RandomForest only.
  std::vector<double> feature_importance() const {
    if (auto* rf = std::get_if<RandomForest>(&state_)) return rf->importance();
    throw UnsupportedOpError("feature importance is only defined for RandomForest, not " + to_string(kind_));
  }

  nlohmann::json to_json() const {
    nlohmann::json state = std::visit([](const auto& m) { return m.to_json(); }, state_);
    return {{"format", "btcdir.classifier"}, {"version", 1},         {"kind", to_string(kind_)},
            {"hyperparams", hp_.to_json()},  {"seed", seed_},        {"n_features", n_features_},
            {"fingerprint", btcdir::to_json(fingerprint_)},          {"state", state}};
  }

  static Classifier from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "btcdir.classifier") throw SchemaError("not a classifier document");
    if (j.value("version", 0) != 1) throw SchemaError("unsupported classifier document version");
    Classifier c;
    c.kind_ = parse_model_kind(j.at("kind").get<std::string>());
    c.hp_ = resolve_hyperparams(c.kind_, Hyperparams::from_json(j.at("hyperparams")));
    c.seed_ = j.at("seed").get<std::uint64_t>();
    c.n_features_ = j.at("n_features").get<std::size_t>();
    c.fingerprint_ = fingerprint_from_json(j.at("fingerprint"));
    const auto& s = j.at("state");
    switch (c.kind_) {
      case ModelKind::svm: c.state_ = SvmClassifier::from_json(s); break;
      case ModelKind::xgb_like: c.state_ = BoostedTrees::from_json(s); break;
      case ModelKind::random_forest: c.state_ = RandomForest::from_json(s); break;
      case ModelKind::bernoulli_nb: c.state_ = BernoulliNB::from_json(s); break;
    }
    return c;
  }

 private:
  friend Classifier fit_classifier(ModelKind, const Matrix&, std::span<const int>, const Hyperparams&, std::uint64_t,
                                   std::optional<IndexSet>, std::string);

  ModelKind kind_ = ModelKind::bernoulli_nb;
  Hyperparams hp_;
  std::uint64_t seed_ = kDefaultSeed;
  FitFingerprint fingerprint_;
  std::size_t n_features_ = 0;
  State state_;
};

/// Train a classifier on every row of `x`. `rows` names those rows in the
/// caller's global indexing (defaults to 0..n-1) and becomes the fit
/// fingerprint.
inline Classifier fit_classifier(ModelKind kind, const Matrix& x, std::span<const int> y, const Hyperparams& hp = {},
                                 std::uint64_t seed = kDefaultSeed, std::optional<IndexSet> rows = std::nullopt,
                                 std::string artifact_id = "") {
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw DimensionError("X has " + std::to_string(x.rows()) + " rows but y has " + std::to_string(y.size()));
  if (x.rows() == 0) throw DegenerateLabelError("no training rows");
  if (!x.allFinite()) throw SchemaError("training matrix contains non-finite values");
  bool seen[2] = {false, false};
  for (int v : y) {
    if (v != 0 && v != 1) throw SchemaError("labels must be 0 or 1");
    seen[v] = true;
  }
  if (!seen[0] || !seen[1]) throw DegenerateLabelError("training labels contain a single class");
  if (rows && rows->size() != y.size()) throw DimensionError("fingerprint row set size differs from the training rows");

  Classifier c;
  c.kind_ = kind;
  c.hp_ = resolve_hyperparams(kind, hp);
  c.seed_ = seed;
  c.n_features_ = static_cast<std::size_t>(x.cols());
  c.fingerprint_ = {artifact_id.empty() ? to_string(kind) : artifact_id,
                    rows ? *rows : IndexSet::from_range(0, y.size())};
  const auto& h = c.hp_;
  switch (kind) {
    case ModelKind::svm: {
      SvmParams p;
      p.c = h.real("C");
      p.kernel = {parse_kernel(h.text("kernel")), h.real("gamma")};
      SvmClassifier m;
      m.fit(x, y, p);
      c.state_ = std::move(m);
      break;
    }
    case ModelKind::xgb_like: {
      BoostParams p{static_cast<int>(h.integer("n_rounds")), h.real("learning_rate"), static_cast<int>(h.integer("max_depth")),
                    h.real("subsample")};
      BoostedTrees m;
      m.fit(x, y, p, seed);
      c.state_ = std::move(m);
      break;
    }
    case ModelKind::random_forest: {
      ForestParams p{static_cast<int>(h.integer("n_trees")), static_cast<int>(h.integer("max_depth")),
                     h.real("max_features_fraction"), h.integer("bootstrap") != 0,
                     static_cast<std::size_t>(h.integer("min_samples_leaf"))};
      RandomForest m;
      m.fit(x, y, p, seed);
      c.state_ = std::move(m);
      break;
    }
    case ModelKind::bernoulli_nb: {
      BernoulliNB m(h.real("alpha"), h.real("binarize"));
      m.fit(x, y);
      c.state_ = std::move(m);
      break;
    }
  }
  return c;
}

}  // namespace btcdir
