#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "btcdir/core/date.hpp"
#include "btcdir/core/error.hpp"
#include "btcdir/features/indicators.hpp"
#include "btcdir/ingestion/impute.hpp"
#include "btcdir/models/classifier.hpp"
#include "btcdir/pipeline/schema.hpp"
#include "btcdir/validation/search.hpp"

namespace btcdir {

struct ModelConfig {
  ModelKind kind = ModelKind::svm;
  SearchSpace space;
  int budget = 8;
};

struct PipelineConfig {
  std::filesystem::path manifest;
  std::optional<Date> calendar_start, calendar_end;
  ImputeRules impute = default_impute_rules();
  std::string close_column;
  std::vector<std::string> indicator_bases;
  std::vector<IndicatorSpec> indicators = default_indicator_specs();
  bool cyclical = true;
  int lag = 1;
  Date train_end;
  std::vector<double> evr_targets;
  std::vector<ModelConfig> models;
  std::size_t outer_folds = 5, inner_folds = 3;
  double min_train_fraction = 0.5;
  bool allow_leakage_for_demo = false;
  Date trade_start, trade_end;
  std::vector<double> taus{0.0, 0.3, 1.0};
  double plot_tau = 0.3;
  ModelKind leakage_model = ModelKind::random_forest;
  Hyperparams leakage_hp{{"n_trees", 100}, {"max_depth", 0}};
  std::size_t leakage_seeds = 10;
  double leakage_test_fraction = 0.2;
  std::uint64_t seed = kDefaultSeed;
  std::filesystem::path output_dir = "out";

  /// The document the config was parsed from, with overrides applied and
  /// `output_dir` removed. Its hash names every artifact.
  nlohmann::json canonical;

  std::string hash() const {
    // FNV-1a over the canonical dump (keys are sorted by nlohmann::json).
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical.dump()) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%012llx", static_cast<unsigned long long>(h & 0xffffffffffffULL));
    return buf;
  }
};

inline Date parse_config_date(const nlohmann::json& j, const std::string& field) {
  auto d = Date::parse(j.get<std::string>());
  if (!d) throw ConfigError("config: '" + field + "' is not an ISO date: " + j.get<std::string>());
  return *d;
}

/// Validate against the published schema, then check the cross-field rules.
/// Relative paths resolve against `base_dir`. `seed_override` replaces the
/// seed before hashing.
inline PipelineConfig parse_config(nlohmann::json doc, const std::filesystem::path& base_dir,
                                   std::optional<std::uint64_t> seed_override = std::nullopt) {
  if (seed_override) doc["seed"] = *seed_override;
  const auto errors = schema_errors(doc);
  if (!errors.empty()) {
    std::string msg = "config does not match the schema:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }

  PipelineConfig c;
  c.manifest = base_dir / doc["manifest"].get<std::string>();
  if (doc.contains("calendar")) {
    if (doc["calendar"].contains("start")) c.calendar_start = parse_config_date(doc["calendar"]["start"], "calendar.start");
    if (doc["calendar"].contains("end")) c.calendar_end = parse_config_date(doc["calendar"]["end"], "calendar.end");
  }
  if (doc.contains("impute"))
    for (const auto& [cat, rule] : doc["impute"].items()) c.impute[parse_category(cat)] = parse_impute_rule(rule.get<std::string>());

  const auto& f = doc["features"];
  c.close_column = f["close_column"].get<std::string>();
  c.indicator_bases = f["indicator_bases"].get<std::vector<std::string>>();
  if (f.contains("indicators")) {
    if (f["indicators"].is_string()) {
      if (f["indicators"] != "default") throw ConfigError("config: features.indicators must be \"default\" or a list");
    } else {
      c.indicators.clear();
      for (const auto& spec : f["indicators"])
        for (int w : spec["windows"].get<std::vector<int>>()) {
          IndicatorSpec s{parse_indicator_kind(spec["kind"].get<std::string>()), w};
          s.validate();
          c.indicators.push_back(s);
        }
    }
  }
  c.cyclical = f.value("cyclical", true);
  c.lag = f.value("lag", 1);

  c.train_end = parse_config_date(doc["train_end"], "train_end");
  c.evr_targets = doc["reduce"]["evr_targets"].get<std::vector<double>>();

  for (const auto& [name, m] : doc["models"].items()) {
    ModelConfig mc;
    mc.kind = parse_model_kind(name);
    mc.space = SearchSpace::from_json(m["search"]);
    mc.space.validate_for(mc.kind);
    mc.budget = m.value("budget", 8);
    for (const auto& prev : c.models)
      if (prev.kind == mc.kind) throw ConfigError("config: model " + name + " listed twice");
    c.models.push_back(std::move(mc));
  }

  if (doc.contains("cv")) {
    const auto& cv = doc["cv"];
    c.outer_folds = cv.value("outer_folds", std::size_t{5});
    c.inner_folds = cv.value("inner_folds", std::size_t{3});
    c.min_train_fraction = cv.value("min_train_fraction", 0.5);
    c.allow_leakage_for_demo = cv.value("allow_leakage_for_demo", false);
  }

  const auto& t = doc["trading"];
  c.trade_start = parse_config_date(t["start"], "trading.start");
  c.trade_end = parse_config_date(t["end"], "trading.end");
  if (t.contains("taus")) c.taus = t["taus"].get<std::vector<double>>();
  c.plot_tau = t.value("plot_tau", 0.3);
  if (c.trade_end < c.trade_start) throw ConfigError("config: trading.end precedes trading.start");
  if (!(c.train_end < c.trade_start)) throw ConfigError("config: train_end must precede trading.start");

  if (doc.contains("audit")) {
    const auto& a = doc["audit"];
    if (a.contains("leakage_model")) c.leakage_model = parse_model_kind(a["leakage_model"].get<std::string>());
    if (a.contains("leakage_hyperparams")) c.leakage_hp = Hyperparams::from_json(a["leakage_hyperparams"]);
    c.leakage_seeds = a.value("leakage_seeds", std::size_t{10});
    c.leakage_test_fraction = a.value("test_fraction", 0.2);
  }
  resolve_hyperparams(c.leakage_model, c.leakage_hp);
  c.seed = doc.value("seed", kDefaultSeed);
  if (doc.contains("output_dir")) c.output_dir = base_dir / doc["output_dir"].get<std::string>();

  c.canonical = doc;
  c.canonical.erase("output_dir");
  // Bind the hash to the manifest's resolved location rather than its spelling.
  c.canonical["manifest"] = std::filesystem::weakly_canonical(c.manifest).string();
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(std::move(doc), path.parent_path(), seed_override);
}

}  // namespace btcdir
