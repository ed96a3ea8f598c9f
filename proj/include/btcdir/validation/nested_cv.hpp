#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "btcdir/audit/scope.hpp"
#include "btcdir/core/error.hpp"
#include "btcdir/core/rng.hpp"
#include "btcdir/features/dataset.hpp"
#include "btcdir/models/classifier.hpp"
#include "btcdir/reduce/pca.hpp"
#include "btcdir/validation/folds.hpp"
#include "btcdir/validation/metrics.hpp"
#include "btcdir/validation/search.hpp"

namespace btcdir {

/// Which rows the per-fold scaler and PCA are fitted on. `all_rows` is the
/// leaky mistake; it exists so the audit can be shown to catch it.
enum class PreprocessScope { fold_train, all_rows };

/// Standardizer and optional PCA fitted on one set of rows.
struct FeatureTransform {
  std::optional<Standardizer> scaler;
  std::optional<PcaModel> pca;

  Matrix apply(const Matrix& x) const {
    if (pca) return transform(*pca, *scaler, x);
    if (scaler) return scaler->apply(x);
    return x;
  }

  std::vector<const FitFingerprint*> fingerprints() const {
    std::vector<const FitFingerprint*> out;
    if (scaler) out.push_back(&scaler->fingerprint);
    if (pca) out.push_back(&pca->fingerprint);
    return out;
  }

  std::size_t output_features(std::size_t input) const {
    return pca ? static_cast<std::size_t>(pca->k()) : input;
  }
};

inline FeatureTransform fit_feature_transform(const Matrix& x, std::span<const std::size_t> rows, bool standardize,
                                              std::optional<double> evr_target, const std::string& tag = "") {
  FeatureTransform t;
  if (standardize || evr_target) t.scaler = fit_standardizer(x, rows, tag + "standardizer");
  if (evr_target) t.pca = fit_pca(t.scaler->apply(x), *evr_target, rows, tag + "pca");
  return t;
}

inline nlohmann::json to_json(const FeatureTransform& t) {
  nlohmann::json j = nlohmann::json::object();
  j["scaler"] = t.scaler ? to_json(*t.scaler) : nlohmann::json(nullptr);
  j["pca"] = t.pca ? to_json(*t.pca) : nlohmann::json(nullptr);
  return j;
}

inline FeatureTransform feature_transform_from_json(const nlohmann::json& j) {
  FeatureTransform t;
  if (!j.at("scaler").is_null()) t.scaler = standardizer_from_json(j["scaler"]);
  if (!j.at("pca").is_null()) t.pca = pca_from_json(j["pca"]);
  return t;
}

/// One train/test split already passed through its transform.
struct PreparedFold {
  Matrix train_x, test_x;
  std::vector<int> train_y, test_y;
  IndexSet train_rows;
};

/// Mean test accuracy of `hp` over prepared folds. `on_fit` sees every
/// fitted classifier together with the fold's allowed rows.
template <typename OnFit>
double cv_accuracy(ModelKind kind, const std::vector<PreparedFold>& folds, const Hyperparams& hp, std::uint64_t seed,
                   OnFit&& on_fit) {
  double sum = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& pf = folds[f];
    auto model = fit_classifier(kind, pf.train_x, pf.train_y, hp, seed, pf.train_rows, "inner" + std::to_string(f));
    on_fit(model, pf.train_rows);
    const Vector p = model.predict_proba(pf.test_x);
    sum += evaluate(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), pf.test_y).accuracy;
  }
  return sum / static_cast<double>(folds.size());
}

inline std::vector<PreparedFold> prepare_raw_folds(const Matrix& x, std::span<const int> y, const FoldPlan& plan) {
  std::vector<PreparedFold> out;
  for (const auto& f : plan.folds) {
    const auto tr = iota_rows(f.train.begin, f.train.end), te = iota_rows(f.test.begin, f.test.end);
    std::vector<int> yv(y.begin(), y.end());
    out.push_back({take_rows(x, tr), take_rows(x, te), take(yv, tr), take(yv, te), IndexSet::from_range(f.train.begin, f.train.end)});
  }
  return out;
}

/// Exhaustive search over the categorical grid of `grid` (numerics fixed at
/// `base`). Best mean inner accuracy wins; ties go to the earlier grid point.
inline Hyperparams grid_search(ModelKind kind, const SearchSpace& grid, const FoldPlan& plan, const Matrix& x,
                               std::span<const int> y, const Hyperparams& base = {}, std::uint64_t seed = kDefaultSeed) {
  const auto points = grid.grid();
  if (grid.empty() || points.empty()) throw ConfigError("grid_search: empty grid");
  const auto folds = prepare_raw_folds(x, y, plan);
  Hyperparams best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& g : points) {
    const Hyperparams hp = base.merged(g);
    const double s = cv_accuracy(kind, folds, hp, seed, [](const Classifier&, const IndexSet&) {});
    if (s > best_score) {
      best_score = s;
      best = hp;
    }
  }
  return best;
}

struct NestedCvOptions {
  std::size_t outer_k = 5;
  std::size_t inner_k = 3;
  double min_train_fraction = 0.5;
  int budget = 10;  // bayes_opt evaluations per categorical grid point
  std::uint64_t seed = kDefaultSeed;
  std::optional<double> evr_target;  // per-fold PCA when set
  bool standardize = true;
  bool allow_leakage_for_demo = false;
  PreprocessScope preprocess_scope = PreprocessScope::fold_train;
  BayesOptions bayes;
};

struct FoldReport {
  std::size_t index = 0;
  Fold split;
  Hyperparams hp;
  double inner_score = 0.0;
  Metrics metrics;
  std::size_t components = 0;
  bool all_positive = false;
  std::size_t audit_checks = 0;
  std::vector<ScopeReport> audits;  // every check in memory; only violations survive serialization
};

struct CVReport {
  ModelKind kind = ModelKind::svm;
  std::optional<double> evr_target;
  std::vector<FoldReport> folds;
  Metrics mean;
  Hyperparams final_hp;
  std::size_t final_fold = 0;
  // Out-of-fold class-1 probabilities for every outer test row.
  std::vector<std::size_t> oof_rows;
  std::vector<double> oof_probs;
  std::vector<int> oof_labels;
  double oof_positive_rate = 0.0;
  // Every outer test row predicted class 1: recall 1 with precision equal to
  // the positive-class rate.
  bool degenerate_all_long = false;
  std::size_t audit_checks = 0;
  std::size_t audit_violations = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline void audit_fit(const FitFingerprint& fp, const IndexSet& allowed, const NestedCvOptions& opt, FoldReport& fold) {
  auto r = assert_fit_scope(fp, allowed);
  if (!r.passed() && !opt.allow_leakage_for_demo)
    throw AuditViolation("fit-scope violation: " + violation_report({r}).dump());
  fold.audits.push_back(std::move(r));
}

}  // namespace detail

/// Nested walk-forward cross-validation. For every outer fold the
/// hyperparameters are chosen on inner folds carved from the outer training
/// rows (grid over categoricals, bayes_opt over numerics for each grid point),
/// refitted on the whole outer training window and scored on the outer test
/// block. Every fitted scaler, PCA and classifier is audited against the rows
/// it was allowed to see.
inline CVReport nested_cv(ModelKind kind, const LabeledDataset& data, const SearchSpace& space,
                          const NestedCvOptions& opt = {}) {
  data.validate();
  space.validate_for(kind);
  const auto plan = time_series_folds(data.rows(), opt.outer_k, opt.min_train_fraction);
  plan.validate();
  const auto all_rows = iota_rows(0, data.rows());
  const auto grid = space.grid();

  CVReport report;
  report.kind = kind;
  report.evr_target = opt.evr_target;
  double best_inner = -std::numeric_limits<double>::infinity();

  for (std::size_t o = 0; o < plan.size(); ++o) {
    const auto& split = plan.folds[o];
    FoldReport fold;
    fold.index = o;
    fold.split = split;
    const IndexSet outer_allowed = IndexSet::from_range(split.train.begin, split.train.end);
    const auto outer_train = iota_rows(split.train.begin, split.train.end);
    const auto outer_test = iota_rows(split.test.begin, split.test.end);
    const std::string tag = "outer" + std::to_string(o) + ".";

    // Inner folds over the outer training window, transforms fitted per fold.
    const auto inner_plan = time_series_folds(outer_train.size(), opt.inner_k, opt.min_train_fraction);
    std::vector<PreparedFold> inner;
    for (std::size_t i = 0; i < inner_plan.size(); ++i) {
      const auto& f = inner_plan.folds[i];
      const auto tr = iota_rows(split.train.begin + f.train.begin, split.train.begin + f.train.end);
      const auto te = iota_rows(split.train.begin + f.test.begin, split.train.begin + f.test.end);
      const IndexSet allowed = IndexSet::from_indices(tr);
      const auto scope = opt.preprocess_scope == PreprocessScope::all_rows ? std::span<const std::size_t>(all_rows)
                                                                         : std::span<const std::size_t>(tr);
      const auto t = fit_feature_transform(data.x, scope, opt.standardize, opt.evr_target,
                                           tag + "inner" + std::to_string(i) + ".");
      for (const auto* fp : t.fingerprints()) detail::audit_fit(*fp, allowed, opt, fold);
      const Matrix z = t.apply(data.x);
      inner.push_back({take_rows(z, tr), take_rows(z, te), take(data.y, tr), take(data.y, te), allowed});
    }

    auto on_fit = [&](const Classifier& m, const IndexSet& allowed) { detail::audit_fit(m.fingerprint(), allowed, opt, fold); };
    double fold_best = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
      auto objective = [&](const Hyperparams& numeric) {
        try {
          return cv_accuracy(kind, inner, grid[g].merged(numeric), opt.seed, on_fit);
        } catch (const DegenerateLabelError&) {
          return std::numeric_limits<double>::quiet_NaN();
        }
      };
      const auto res = bayes_opt(space, objective, opt.budget, derive_seed(opt.seed, o * 1000 + g), opt.bayes);
      for (const auto& w : res.warnings) report.warnings.push_back(tag + w);
      if (res.best_value > fold_best) {
        fold_best = res.best_value;
        fold.hp = grid[g].merged(res.best);
      }
    }
    if (!std::isfinite(fold_best)) throw DegenerateLabelError("outer fold " + std::to_string(o) + ": no hyperparameter point could be scored");
    fold.inner_score = fold_best;
    fold.hp = resolve_hyperparams(kind, fold.hp);

    const auto scope = opt.preprocess_scope == PreprocessScope::all_rows ? std::span<const std::size_t>(all_rows)
                                                                       : std::span<const std::size_t>(outer_train);
    const auto t = fit_feature_transform(data.x, scope, opt.standardize, opt.evr_target, tag);
    for (const auto* fp : t.fingerprints()) detail::audit_fit(*fp, outer_allowed, opt, fold);
    fold.components = t.output_features(data.features());
    const Matrix z = t.apply(data.x);
    auto model = fit_classifier(kind, take_rows(z, outer_train), take(data.y, outer_train), fold.hp, opt.seed,
                                outer_allowed, tag + "model");
    detail::audit_fit(model.fingerprint(), outer_allowed, opt, fold);
    const Vector p = model.predict_proba(take_rows(z, outer_test));
    const std::vector<double> probs(p.data(), p.data() + p.size());
    const auto labels = take(data.y, outer_test);
    fold.metrics = evaluate(probs, labels);
    fold.all_positive = fold.metrics.all_positive();
    report.oof_rows.insert(report.oof_rows.end(), outer_test.begin(), outer_test.end());
    report.oof_probs.insert(report.oof_probs.end(), probs.begin(), probs.end());
    report.oof_labels.insert(report.oof_labels.end(), labels.begin(), labels.end());

    fold.audit_checks = fold.audits.size();
    report.audit_checks += fold.audit_checks;
    for (const auto& a : fold.audits) report.audit_violations += !a.passed();
    if (fold.inner_score > best_inner) {
      best_inner = fold.inner_score;
      report.final_hp = fold.hp;
      report.final_fold = o;
    }
    report.folds.push_back(std::move(fold));
  }

  std::vector<Metrics> ms;
  for (const auto& f : report.folds) ms.push_back(f.metrics);
  report.mean = mean_metrics(ms);
  const Metrics pooled = evaluate(report.oof_probs, report.oof_labels);
  report.oof_positive_rate = pooled.positive_rate();
  report.degenerate_all_long = pooled.recall >= 1.0 && pooled.precision == pooled.positive_rate();
  return report;
}

/// Transform plus classifier fitted on a whole dataset.
struct FittedPipeline {
  FeatureTransform transform;
  Classifier model;

  Vector predict_proba(const Matrix& x) const { return model.predict_proba(transform.apply(x)); }
};

inline FittedPipeline fit_pipeline(ModelKind kind, const LabeledDataset& data, const Hyperparams& hp,
                                   std::optional<double> evr_target, bool standardize = true,
                                   std::uint64_t seed = kDefaultSeed) {
  data.validate();
  const auto rows = iota_rows(0, data.rows());
  FittedPipeline p;
  p.transform = fit_feature_transform(data.x, rows, standardize, evr_target, "final.");
  p.model = fit_classifier(kind, p.transform.apply(data.x), data.y, hp, seed, IndexSet::from_range(0, data.rows()), "final.model");
  return p;
}

inline nlohmann::json to_json(const FittedPipeline& p) {
  return {{"format", "btcdir.pipeline_model"}, {"version", 1}, {"transform", to_json(p.transform)}, {"model", p.model.to_json()}};
}

inline FittedPipeline fitted_pipeline_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "btcdir.pipeline_model" || j.value("version", 0) != 1)
    throw SchemaError("not a pipeline model document");
  return {feature_transform_from_json(j.at("transform")), Classifier::from_json(j.at("model"))};
}

inline nlohmann::json to_json(const CVReport& r) {
  auto folds = nlohmann::json::array();
  for (const auto& f : r.folds) {
    auto audits = nlohmann::json::array();
    for (const auto& a : f.audits)
      if (!a.passed()) audits.push_back(to_json(a));
    folds.push_back({{"fold", f.index},
                     {"train", {f.split.train.begin, f.split.train.end}},
                     {"test", {f.split.test.begin, f.split.test.end}},
                     {"hyperparams", f.hp.to_json()},
                     {"inner_accuracy", f.inner_score},
                     {"components", f.components},
                     {"all_positive", f.all_positive},
                     {"metrics", to_json(f.metrics)},
                     {"audit_checks", f.audit_checks},
                     {"audit_violations", audits}});
  }
  return {{"model", to_string(r.kind)},
          {"evr_target", r.evr_target ? nlohmann::json(*r.evr_target) : nlohmann::json(nullptr)},
          {"folds", folds},
          {"mean", to_json(r.mean)},
          {"final_hyperparams", r.final_hp.to_json()},
          {"final_fold", r.final_fold},
          {"oof_rows", r.oof_rows},
          {"oof_probs", r.oof_probs},
          {"oof_labels", r.oof_labels},
          {"oof_positive_rate", r.oof_positive_rate},
          {"degenerate_all_long", r.degenerate_all_long},
          {"audit_checks", r.audit_checks},
          {"audit_violations", r.audit_violations},
          {"warnings", r.warnings}};
}

inline CVReport cv_report_from_json(const nlohmann::json& j) {
  CVReport r;
  r.kind = parse_model_kind(j.at("model").get<std::string>());
  if (!j.at("evr_target").is_null()) r.evr_target = j["evr_target"].get<double>();
  for (const auto& f : j.at("folds")) {
    FoldReport fr;
    fr.index = f.at("fold").get<std::size_t>();
    fr.split = {{f.at("train").at(0).get<std::size_t>(), f.at("train").at(1).get<std::size_t>()},
                {f.at("test").at(0).get<std::size_t>(), f.at("test").at(1).get<std::size_t>()}};
    fr.hp = Hyperparams::from_json(f.at("hyperparams"));
    fr.inner_score = f.at("inner_accuracy").get<double>();
    fr.components = f.at("components").get<std::size_t>();
    fr.all_positive = f.at("all_positive").get<bool>();
    fr.metrics = metrics_from_json(f.at("metrics"));
    fr.audit_checks = f.at("audit_checks").get<std::size_t>();
    for (const auto& v : f.at("audit_violations"))
      fr.audits.push_back({v.at("artifact_id").get<std::string>(), v.at("digest").get<std::string>(),
                           v.at("fitted_rows").get<std::size_t>(), index_set_from_json(v.at("offending"))});
    r.folds.push_back(std::move(fr));
  }
  r.mean = metrics_from_json(j.at("mean"));
  r.final_hp = Hyperparams::from_json(j.at("final_hyperparams"));
  r.final_fold = j.at("final_fold").get<std::size_t>();
  r.oof_rows = j.at("oof_rows").get<std::vector<std::size_t>>();
  r.oof_probs = j.at("oof_probs").get<std::vector<double>>();
  r.oof_labels = j.at("oof_labels").get<std::vector<int>>();
  r.oof_positive_rate = j.at("oof_positive_rate").get<double>();
  r.degenerate_all_long = j.at("degenerate_all_long").get<bool>();
  r.audit_checks = j.at("audit_checks").get<std::size_t>();
  r.audit_violations = j.at("audit_violations").get<std::size_t>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

/// Flat CSV: one row per outer fold plus a "mean" row.
inline std::string cv_report_csv(const std::vector<CVReport>& reports) {
  std::string out = "model,evr_target,fold,hyperparams,accuracy,precision,recall,f1,auc,all_long\n";
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  for (const auto& r : reports) {
    const std::string evr = r.evr_target ? num(*r.evr_target) : "";
    auto line = [&](const std::string& fold, const std::string& hp, const Metrics& m, bool flag) {
      out += to_string(r.kind) + ',' + evr + ',' + fold + ",\"" + hp + "\"," + num(m.accuracy) + ',' + num(m.precision) +
             ',' + num(m.recall) + ',' + num(m.f1) + ',' + (m.auc ? num(*m.auc) : "") + ',' + (flag ? "1" : "0") + '\n';
    };
    for (const auto& f : r.folds) line(std::to_string(f.index), f.hp.describe(), f.metrics, f.all_positive);
    line("mean", r.final_hp.describe(), r.mean, r.degenerate_all_long);
  }
  return out;
}

}  // namespace btcdir
