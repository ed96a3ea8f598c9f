#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "btcdir/audit.hpp"
#include "btcdir/features.hpp"
#include "btcdir/ingestion.hpp"
#include "btcdir/models.hpp"
#include "btcdir/pipeline/config.hpp"
#include "btcdir/pipeline/plot.hpp"
#include "btcdir/reduce.hpp"
#include "btcdir/trading.hpp"
#include "btcdir/validation.hpp"

namespace btcdir {

enum class Stage { ingest, featurize, reduce, tune, evaluate, backtest, audit, report };

inline constexpr Stage kAllStages[] = {Stage::ingest,   Stage::featurize, Stage::reduce, Stage::tune,
                                       Stage::evaluate, Stage::backtest,  Stage::audit,  Stage::report};

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::featurize: return "featurize";
    case Stage::reduce: return "reduce";
    case Stage::tune: return "tune";
    case Stage::evaluate: return "evaluate";
    case Stage::backtest: return "backtest";
    case Stage::audit: return "audit";
    case Stage::report: return "report";
  }
  return "?";
}

inline Stage parse_stage(const std::string& s) {
  for (auto st : kAllStages)
    if (to_string(st) == s) return st;
  throw ConfigError("unknown stage '" + s + "'");
}

/// Upstream stages whose artifacts a stage reads.
inline std::vector<Stage> stage_inputs(Stage s) {
  switch (s) {
    case Stage::ingest: return {};
    case Stage::featurize: return {Stage::ingest};
    case Stage::reduce: return {Stage::featurize};
    case Stage::tune: return {Stage::featurize};
    case Stage::evaluate: return {Stage::featurize, Stage::tune};
    case Stage::backtest: return {Stage::featurize, Stage::evaluate};
    case Stage::audit: return {Stage::featurize, Stage::tune};
    case Stage::report: return {Stage::featurize, Stage::reduce, Stage::evaluate, Stage::backtest, Stage::audit};
  }
  return {};
}

/// Process exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitValidation = 2, kExitDependency = 3, kExitAudit = 4 };

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const AuditViolation*>(&e)) return kExitAudit;
  if (dynamic_cast<const DependencyError*>(&e)) return kExitDependency;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const SchemaError*>(&e)) return kExitValidation;
  return kExitFailure;
}

/// Exclusive claim on an output directory for the lifetime of the object.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir) : path_(dir / ".btcdir.lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      if (errno == EEXIST)
        throw Error("output directory " + dir.string() + " is locked by another stage (" + path_.string() +
                    "); remove the file if no stage is running");
      throw Error("cannot create lock " + path_.string() + ": " + std::strerror(errno));
    }
    const auto pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  ~OutputLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// Where a stage reads and writes. Every artifact is `<stage>.<hash>.<suffix>`;
/// `<stage>.<hash>.json` is written last and marks the stage complete.
struct StageContext {
  PipelineConfig config;
  std::filesystem::path out;
  std::string hash;
  std::ostream* log = nullptr;

  StageContext(PipelineConfig cfg, std::filesystem::path out_dir, std::ostream* log_to = nullptr)
      : config(std::move(cfg)), out(std::move(out_dir)), hash(config.hash()), log(log_to) {}

  std::filesystem::path artifact(Stage s, const std::string& suffix) const {
    return out / (to_string(s) + "." + hash + "." + suffix);
  }
  std::filesystem::path summary(Stage s) const { return artifact(s, "json"); }

  void note(const std::string& msg) const {
    if (log) *log << "[" << hash << "] " << msg << '\n';
  }
};

namespace detail {

/// Write via a temporary file and rename, so readers never see half a file.
inline void write_text(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + tmp);
    f << content;
    if (!f) throw Error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DependencyError("cannot open " + path.string());
  return nlohmann::json::parse(f);
}

inline std::string num(double v, int decimals = 4) { return text::format_fixed(v, decimals); }

inline std::string tau_tag(double tau) { return "tau" + text::format_fixed(tau, 2); }

}  // namespace detail

/// Throws DependencyError when `up` has no complete artifact set for this
/// config. Artifacts under another hash are reported as a config mismatch.
inline nlohmann::json require_stage(const StageContext& ctx, Stage consumer, Stage up) {
  const auto path = ctx.summary(up);
  if (std::filesystem::exists(path)) {
    auto j = detail::read_json(path);
    if (j.value("config_hash", "") != ctx.hash)
      throw DependencyError("stage '" + to_string(consumer) + "': " + path.string() + " records a different config hash");
    return j;
  }
  std::vector<std::string> others;
  const std::string prefix = to_string(up) + ".";
  if (std::filesystem::is_directory(ctx.out))
    for (const auto& e : std::filesystem::directory_iterator(ctx.out)) {
      const auto name = e.path().filename().string();
      if (name.rfind(prefix, 0) == 0 && name.size() == prefix.size() + ctx.hash.size() + 5 && name.ends_with(".json"))
        others.push_back(name.substr(prefix.size(), ctx.hash.size()));
    }
  std::sort(others.begin(), others.end());
  std::string msg = "stage '" + to_string(consumer) + "' requires the output of stage '" + to_string(up) + "'";
  if (others.empty()) throw DependencyError(msg + "; run `" + to_string(up) + "` first");
  std::string list;
  for (const auto& h : others) list += (list.empty() ? "" : ", ") + h;
  throw DependencyError(msg + ": config hash mismatch (found " + list + ", expected " + ctx.hash + "); rerun `" +
                        to_string(up) + "` with the current config");
}

inline nlohmann::json stage_summary(const StageContext& ctx, Stage s) {
  return {{"stage", to_string(s)}, {"config_hash", ctx.hash}};
}

// ---------------------------------------------------------------- loaders

inline LabeledDataset load_train_set(const StageContext& ctx) {
  return read_dataset_csv(ctx.artifact(Stage::featurize, "train.csv"));
}

/// Trading-window features (same columns as the training set) and closes.
struct TradeWindow {
  Matrix x;
  PricePath prices;
};

inline TradeWindow load_trade_window(const StageContext& ctx, const LabeledDataset& train) {
  const auto frame = read_frame_csv(ctx.artifact(Stage::featurize, "trade.csv"));
  TradeWindow w;
  std::vector<std::string> names;
  w.x = frame_feature_matrix(frame, ctx.config.cyclical, &names);
  if (names != train.feature_names) throw IntegrityError("trade window columns differ from the training set");
  w.prices.dates = frame.dates();
  w.prices.close = frame.column(ctx.config.close_column).values;
  w.prices.validate();
  return w;
}

inline std::vector<CVReport> load_cv_reports(const StageContext& ctx) {
  std::vector<CVReport> out;
  for (const auto& j : detail::read_json(ctx.artifact(Stage::tune, "cv.json"))) out.push_back(cv_report_from_json(j));
  return out;
}

// ---------------------------------------------------------------- stages

inline void run_ingest(const StageContext& ctx) {
  const auto& cfg = ctx.config;
  const auto series = load_sources(load_manifest(cfg.manifest));
  const auto [lo, hi] = date_span(series);
  const Date start = cfg.calendar_start.value_or(lo), end = cfg.calendar_end.value_or(hi);
  const auto frame = impute(align_calendar(series, start, end), cfg.impute);
  const auto [obs_lo, obs_hi] = select_training_range(frame);

  std::ostringstream csv;
  write_frame_csv(frame, csv);
  detail::write_text(ctx.artifact(Stage::ingest, "frame.csv"), csv.str());

  auto cols = nlohmann::json::array();
  for (const auto& c : frame.columns()) cols.push_back({{"name", c.name}, {"category", to_string(c.category)}});
  auto j = stage_summary(ctx, Stage::ingest);
  j["calendar"] = {start.iso(), end.iso()};
  j["rows"] = frame.size();
  j["columns"] = cols;
  j["missing_after_impute"] = frame.missing_count();
  j["observed_range"] = {obs_lo.iso(), obs_hi.iso()};
  j["missing_in_observed_range"] = frame.slice(obs_lo, obs_hi).missing_count();
  detail::write_json(ctx.summary(Stage::ingest), j);
  ctx.note("ingest: " + std::to_string(frame.size()) + " days, " + std::to_string(frame.column_count()) + " columns");
}

inline void run_featurize(const StageContext& ctx) {
  require_stage(ctx, Stage::featurize, Stage::ingest);
  const auto& cfg = ctx.config;
  const auto frame = read_frame_csv(ctx.artifact(Stage::ingest, "frame.csv"));

  // Indicators need a gap-free base, so start where every base is observed.
  std::vector<std::string> needed = cfg.indicator_bases;
  needed.push_back(cfg.close_column);
  std::size_t first = 0;
  for (const auto& name : needed) {
    const auto& v = frame.column(name).values;
    const auto it = std::find_if(v.begin(), v.end(), [](double x) { return !is_missing(x); });
    if (it == v.end()) throw EmptyRangeError("column '" + name + "' has no observations");
    first = std::max(first, static_cast<std::size_t>(it - v.begin()));
  }
  const auto expanded = expand_features(frame.slice(frame.date(first), frame.end()), cfg.indicator_bases, cfg.indicators);
  const auto [lo, hi] = select_training_range(expanded);
  const Date label_end = cfg.train_end + cfg.lag;
  if (cfg.train_end < lo || label_end > hi)
    throw ConfigError("train_end " + cfg.train_end.iso() + " (plus lag) lies outside the observed range " + lo.iso() +
                      ".." + hi.iso());
  if (cfg.trade_start < lo || cfg.trade_end > hi)
    throw ConfigError("trading window " + cfg.trade_start.iso() + ".." + cfg.trade_end.iso() +
                      " lies outside the observed range " + lo.iso() + ".." + hi.iso());

  const auto train = build_labeled_dataset(expanded.slice(lo, label_end), cfg.close_column, cfg.lag, cfg.cyclical);
  train.validate();
  const auto trade = expanded.slice(cfg.trade_start, cfg.trade_end);

  std::ostringstream a, b;
  write_dataset_csv(train, a);
  write_frame_csv(trade, b);
  detail::write_text(ctx.artifact(Stage::featurize, "train.csv"), a.str());
  detail::write_text(ctx.artifact(Stage::featurize, "trade.csv"), b.str());

  auto j = stage_summary(ctx, Stage::featurize);
  j["observed_range"] = {lo.iso(), hi.iso()};
  j["features"] = train.features();
  j["feature_names"] = train.feature_names;
  j["train"] = {{"start", train.dates.front().iso()}, {"end", train.dates.back().iso()}, {"rows", train.rows()},
                {"positive_rate", train.positive_rate()}};
  j["trade"] = {{"start", cfg.trade_start.iso()}, {"end", cfg.trade_end.iso()}, {"rows", trade.size()}};
  detail::write_json(ctx.summary(Stage::featurize), j);
  ctx.note("featurize: " + std::to_string(train.rows()) + " training rows x " + std::to_string(train.features()) +
           " features (" + lo.iso() + ".." + hi.iso() + ")");
}

inline void run_reduce(const StageContext& ctx) {
  require_stage(ctx, Stage::reduce, Stage::featurize);
  const auto train = load_train_set(ctx);
  const auto rows = iota_rows(0, train.rows());
  auto targets = nlohmann::json::array();
  for (double t : ctx.config.evr_targets) {
    const auto r = fit_reduction(train.x, t, rows);
    targets.push_back({{"target", t}, {"k", r.pca.k()}, {"cumulative_evr", r.pca.cumulative_evr()}, {"evr", r.pca.evr},
                       {"reduction", to_json(r)}});
    ctx.note("reduce: evr " + detail::num(t, 2) + " -> k = " + std::to_string(r.pca.k()));
  }
  auto j = stage_summary(ctx, Stage::reduce);
  j["features"] = train.features();
  j["targets"] = targets;
  detail::write_json(ctx.summary(Stage::reduce), j);
}

inline void run_tune(const StageContext& ctx) {
  require_stage(ctx, Stage::tune, Stage::featurize);
  const auto& cfg = ctx.config;
  const auto train = load_train_set(ctx);
  std::vector<CVReport> reports;
  auto runs = nlohmann::json::array();
  auto doc = nlohmann::json::array();
  for (const auto& m : cfg.models)
    for (double t : cfg.evr_targets) {
      NestedCvOptions opt;
      opt.outer_k = cfg.outer_folds;
      opt.inner_k = cfg.inner_folds;
      opt.min_train_fraction = cfg.min_train_fraction;
      opt.budget = m.budget;
      opt.seed = cfg.seed;
      opt.evr_target = t;
      opt.allow_leakage_for_demo = cfg.allow_leakage_for_demo;
      auto r = nested_cv(m.kind, train, m.space, opt);
      ctx.note("tune: " + to_string(m.kind) + " evr " + detail::num(t, 2) + " accuracy " + detail::num(r.mean.accuracy) +
               (r.degenerate_all_long ? " (all-long)" : ""));
      runs.push_back({{"model", to_string(m.kind)}, {"evr_target", t}, {"accuracy", r.mean.accuracy},
                      {"degenerate_all_long", r.degenerate_all_long}, {"audit_checks", r.audit_checks},
                      {"audit_violations", r.audit_violations}});
      doc.push_back(to_json(r));
      reports.push_back(std::move(r));
    }
  detail::write_json(ctx.artifact(Stage::tune, "cv.json"), doc);
  detail::write_text(ctx.artifact(Stage::tune, "cv.csv"), cv_report_csv(reports));
  auto j = stage_summary(ctx, Stage::tune);
  j["runs"] = runs;
  detail::write_json(ctx.summary(Stage::tune), j);
}

/// One row per (model, explained-variance target), the layout of the
/// published comparison table. Metrics are outer-fold means.
inline std::string metrics_table_csv(const std::vector<CVReport>& reports) {
  std::string out = "model,expl_var_pct,accuracy,precision,recall,f1,auc,all_long\n";
  for (const auto& r : reports) {
    const auto& m = r.mean;
    out += to_string(r.kind) + ',' + (r.evr_target ? detail::num(100.0 * *r.evr_target, 0) : "") + ',' +
           detail::num(m.accuracy) + ',' + detail::num(m.precision) + ',' + detail::num(m.recall) + ',' + detail::num(m.f1) +
           ',' + (m.auc ? detail::num(*m.auc) : "") + ',' + (r.degenerate_all_long ? "1" : "0") + '\n';
  }
  return out;
}

/// Markdown version of the metrics table. Runs that predicted class 1 on
/// every out-of-fold row are marked and followed by a warning.
inline std::string cv_table_markdown(const std::vector<CVReport>& reports) {
  using detail::num;
  std::string md = "| model | expl var % | accuracy | precision | recall | f1 | auc | all-long |\n|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    const auto& m = r.mean;
    md += "| " + to_string(r.kind) + " | " + (r.evr_target ? num(100.0 * *r.evr_target, 0) : "none") + " | " + num(m.accuracy) +
          " | " + num(m.precision) + " | " + num(m.recall) + " | " + num(m.f1) + " | " + (m.auc ? num(*m.auc) : "n/a") + " | " +
          (r.degenerate_all_long ? "**yes**" : "no") + " |\n";
  }
  std::size_t flagged = 0;
  for (const auto& r : reports) flagged += r.degenerate_all_long;
  if (flagged)
    md += "\n**Warning:** " + std::to_string(flagged) +
          " run(s) predicted class 1 on every out-of-fold row (recall 1, precision equal to the positive rate). "
          "Their accuracy is the base rate, not skill.\n";
  return md;
}

inline void run_evaluate(const StageContext& ctx) {
  require_stage(ctx, Stage::evaluate, Stage::featurize);
  require_stage(ctx, Stage::evaluate, Stage::tune);
  const auto& cfg = ctx.config;
  const auto reports = load_cv_reports(ctx);
  const auto train = load_train_set(ctx);
  detail::write_text(ctx.artifact(Stage::evaluate, "table.csv"), metrics_table_csv(reports));

  auto models = nlohmann::json::array();
  auto chosen = nlohmann::json::array();
  for (const auto& m : cfg.models) {
    // Best explained-variance target by mean outer accuracy; first wins ties.
    const CVReport* best = nullptr;
    for (const auto& r : reports)
      if (r.kind == m.kind && (!best || r.mean.accuracy > best->mean.accuracy)) best = &r;
    if (!best) throw DependencyError("stage 'evaluate': no tuning result for " + to_string(m.kind));
    ThresholdChoice th;
    try {
      th = optimal_threshold(best->oof_probs, best->oof_labels);
    } catch (const DegenerateLabelError&) {
      th = {};
    }
    const auto pipe = fit_pipeline(m.kind, train, best->final_hp, best->evr_target, true, cfg.seed);
    models.push_back({{"model", to_string(m.kind)}, {"evr_target", *best->evr_target}, {"hyperparams", best->final_hp.to_json()},
                      {"t_star", th.t_star}, {"pipeline", to_json(pipe)}});
    chosen.push_back({{"model", to_string(m.kind)}, {"evr_target", *best->evr_target}, {"cv_accuracy", best->mean.accuracy},
                      {"hyperparams", best->final_hp.to_json()}, {"t_star", th.t_star}, {"gmean", th.gmean},
                      {"degenerate_all_long", best->degenerate_all_long}});
    ctx.note("evaluate: " + to_string(m.kind) + " uses evr " + detail::num(*best->evr_target, 2) + ", t* = " +
             detail::num(th.t_star));
  }
  detail::write_json(ctx.artifact(Stage::evaluate, "models.json"), models);
  auto j = stage_summary(ctx, Stage::evaluate);
  j["chosen"] = chosen;
  j["degenerate"] = nlohmann::json::array();
  for (const auto& r : reports)
    if (r.degenerate_all_long) j["degenerate"].push_back({{"model", to_string(r.kind)}, {"evr_target", *r.evr_target}});
  detail::write_json(ctx.summary(Stage::evaluate), j);
}

inline void run_backtest_stage(const StageContext& ctx) {
  require_stage(ctx, Stage::backtest, Stage::featurize);
  require_stage(ctx, Stage::backtest, Stage::evaluate);
  const auto& cfg = ctx.config;
  const auto train = load_train_set(ctx);
  const auto window = load_trade_window(ctx, train);
  const auto hold = buy_and_hold(window.prices);

  auto per_model = nlohmann::json::array();
  for (const auto& m : detail::read_json(ctx.artifact(Stage::evaluate, "models.json"))) {
    const auto name = m.at("model").get<std::string>();
    const double t_star = m.at("t_star").get<double>();
    const auto pipe = fitted_pipeline_from_json(m.at("pipeline"));
    const Vector p = pipe.predict_proba(window.x);
    const std::vector<double> probs(p.data(), p.data() + p.size());

    std::vector<double> taus = cfg.taus;
    if (std::find(taus.begin(), taus.end(), cfg.plot_tau) == taus.end()) taus.push_back(cfg.plot_tau);
    auto sweep = nlohmann::json::array();
    for (double tau : taus) {
      const auto ledger = run_backtest(window.prices, probs, {t_star, tau});
      detail::write_text(ctx.artifact(Stage::backtest, name + "." + detail::tau_tag(tau) + ".csv"), ledger_csv(ledger));
      sweep.push_back({{"tau", tau}, {"pnl", ledger.total_pnl()}, {"trades", ledger.trades()},
                       {"excess_over_hold", ledger.total_pnl() - hold.back()}});
      if (tau == cfg.plot_tau)
        detail::write_text(ctx.artifact(Stage::backtest, name + ".svg"),
                           render_plot(ledger, window.prices, name + " at risk tolerance " + detail::num(tau, 2)));
    }
    per_model.push_back({{"model", name}, {"t_star", t_star}, {"probs", probs}, {"sweep", sweep}});
    ctx.note("backtest: " + name + " done");
  }
  auto j = stage_summary(ctx, Stage::backtest);
  j["window"] = {window.prices.dates.front().iso(), window.prices.dates.back().iso()};
  j["buy_and_hold"] = {{"pnl", hold.back()}, {"return", total_return(window.prices)}};
  j["models"] = per_model;
  detail::write_json(ctx.summary(Stage::backtest), j);
}

/// Fit-scope audit over every tuning run plus the leaky-versus-clean
/// comparison. The report is written before a violation is raised.
inline void run_audit(const StageContext& ctx) {
  require_stage(ctx, Stage::audit, Stage::featurize);
  require_stage(ctx, Stage::audit, Stage::tune);
  const auto& cfg = ctx.config;
  const auto reports = load_cv_reports(ctx);
  std::size_t checked = 0;
  auto violations = nlohmann::json::array();
  for (const auto& r : reports) {
    checked += r.audit_checks;
    for (const auto& f : r.folds)
      for (const auto& a : f.audits) {
        auto v = to_json(a);
        v["model"] = to_string(r.kind);
        v["evr_target"] = *r.evr_target;
        v["fold"] = f.index;
        violations.push_back(std::move(v));
      }
  }

  const auto train = load_train_set(ctx);
  auto runs = nlohmann::json::array();
  double leaky = 0.0, clean = 0.0;
  for (std::size_t s = 0; s < cfg.leakage_seeds; ++s) {
    const auto c = leaky_vs_clean(train, cfg.leakage_model, cfg.leakage_hp, derive_seed(cfg.seed, s), cfg.leakage_test_fraction);
    leaky += c.leaky.accuracy;
    clean += c.clean.accuracy;
    runs.push_back(to_json(c));
  }
  const double n = static_cast<double>(cfg.leakage_seeds);
  auto j = stage_summary(ctx, Stage::audit);
  j["fit_scope"] = {{"checked", checked}, {"violations", violations}};
  j["leakage"] = {{"model", to_string(cfg.leakage_model)}, {"hyperparams", cfg.leakage_hp.to_json()}, {"runs", runs},
                  {"mean_leaky_accuracy", leaky / n}, {"mean_clean_accuracy", clean / n}, {"mean_gap", (leaky - clean) / n}};
  j["passed"] = violations.empty();
  detail::write_json(ctx.summary(Stage::audit), j);
  ctx.note("audit: " + std::to_string(checked) + " fit-scope checks, " + std::to_string(violations.size()) +
           " violations; leaky - clean = " + detail::num((leaky - clean) / n));
  if (!violations.empty())
    throw AuditViolation(std::to_string(violations.size()) + " fit-scope violations, see " + ctx.summary(Stage::audit).string());
}

inline void run_report(const StageContext& ctx) {
  for (auto up : stage_inputs(Stage::report)) require_stage(ctx, Stage::report, up);
  const auto feat = detail::read_json(ctx.summary(Stage::featurize));
  const auto red = detail::read_json(ctx.summary(Stage::reduce));
  const auto eval = detail::read_json(ctx.summary(Stage::evaluate));
  const auto bt = detail::read_json(ctx.summary(Stage::backtest));
  const auto aud = detail::read_json(ctx.summary(Stage::audit));
  const auto reports = load_cv_reports(ctx);
  const auto& cfg = ctx.config;
  using detail::num;

  std::string md = "# Bitcoin direction pipeline report\n\nConfig hash `" + ctx.hash + "`.\n\n## Data\n\n";
  md += "- Training rows: " + std::to_string(feat["train"]["rows"].get<std::size_t>()) + " (" +
        feat["train"]["start"].get<std::string>() + " to " + feat["train"]["end"].get<std::string>() + "), " +
        std::to_string(feat["features"].get<std::size_t>()) + " features, positive rate " +
        num(feat["train"]["positive_rate"].get<double>()) + "\n";
  md += "- Trading window: " + feat["trade"]["start"].get<std::string>() + " to " + feat["trade"]["end"].get<std::string>() +
        "\n\n## Principal components\n\n| explained variance | k | cumulative |\n|---|---|---|\n";
  for (const auto& t : red["targets"])
    md += "| " + num(t["target"].get<double>(), 2) + " | " + std::to_string(t["k"].get<std::size_t>()) + " | " +
          num(t["cumulative_evr"].get<double>()) + " |\n";

  md += "\n## Nested cross-validation (outer-fold means)\n\n" + cv_table_markdown(reports);
  md += "\n## Trading (one unit per day)\n\nBuy and hold: pnl " + num(bt["buy_and_hold"]["pnl"].get<double>(), 2) +
        " USD, return " + num(100.0 * bt["buy_and_hold"]["return"].get<double>(), 2) + "%.\n\n";
  md += "| model | t* | tau | pnl | trades | vs hold |\n|---|---|---|---|---|---|\n";
  std::string best_model;
  double best_pnl = -std::numeric_limits<double>::infinity();
  std::vector<double> best_probs;
  double best_t = 0.5;
  for (const auto& m : bt["models"]) {
    for (const auto& s : m["sweep"]) {
      md += "| " + m["model"].get<std::string>() + " | " + num(m["t_star"].get<double>()) + " | " + num(s["tau"].get<double>(), 2) +
            " | " + num(s["pnl"].get<double>(), 2) + " | " + std::to_string(s["trades"].get<std::size_t>()) + " | " +
            num(s["excess_over_hold"].get<double>(), 2) + " |\n";
      if (s["tau"].get<double>() == cfg.plot_tau && s["pnl"].get<double>() > best_pnl) {
        best_pnl = s["pnl"].get<double>();
        best_model = m["model"].get<std::string>();
        best_probs = m["probs"].get<std::vector<double>>();
        best_t = m["t_star"].get<double>();
      }
    }
  }

  const auto& leak = aud["leakage"];
  md += "\n## Audit\n\n- Fit-scope checks: " + std::to_string(aud["fit_scope"]["checked"].get<std::size_t>()) + ", violations: " +
        std::to_string(aud["fit_scope"]["violations"].size()) + "\n";
  md += "- Leakage demonstration (" + leak["model"].get<std::string>() + ", " + std::to_string(leak["runs"].size()) +
        " seeds): leaky accuracy " + num(leak["mean_leaky_accuracy"].get<double>()) + ", clean accuracy " +
        num(leak["mean_clean_accuracy"].get<double>()) + ", gap " + num(leak["mean_gap"].get<double>()) + "\n";

  if (!best_model.empty()) {
    const auto train = load_train_set(ctx);
    const auto window = load_trade_window(ctx, train);
    const auto ledger = run_backtest(window.prices, best_probs, {best_t, cfg.plot_tau});
    detail::write_text(ctx.artifact(Stage::report, "svg"),
                       render_plot(ledger, window.prices, best_model + " pnl against price, risk tolerance " + num(cfg.plot_tau, 2)));
    md += "\n![pnl overlay](" + ctx.artifact(Stage::report, "svg").filename().string() + ")\n";
  }
  detail::write_text(ctx.artifact(Stage::report, "md"), md);
  auto j = stage_summary(ctx, Stage::report);
  j["plot_model"] = best_model;
  j["degenerate_runs"] = std::count_if(reports.begin(), reports.end(), [](const CVReport& r) { return r.degenerate_all_long; });
  detail::write_json(ctx.summary(Stage::report), j);
}

/// Run one stage with the output directory locked.
inline void run_stage(Stage stage, const StageContext& ctx) {
  std::filesystem::create_directories(ctx.out);
  OutputLock lock(ctx.out);
  switch (stage) {
    case Stage::ingest: run_ingest(ctx); break;
    case Stage::featurize: run_featurize(ctx); break;
    case Stage::reduce: run_reduce(ctx); break;
    case Stage::tune: run_tune(ctx); break;
    case Stage::evaluate: run_evaluate(ctx); break;
    case Stage::backtest: run_backtest_stage(ctx); break;
    case Stage::audit: run_audit(ctx); break;
    case Stage::report: run_report(ctx); break;
  }
}

}  // namespace btcdir
