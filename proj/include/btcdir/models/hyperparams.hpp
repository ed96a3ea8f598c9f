#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "btcdir/core/error.hpp"

namespace btcdir {

enum class ModelKind { svm, xgb_like, random_forest, bernoulli_nb };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::svm, ModelKind::xgb_like, ModelKind::random_forest,
                                               ModelKind::bernoulli_nb};

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::svm: return "SVM";
    case ModelKind::xgb_like: return "XGBLike";
    case ModelKind::random_forest: return "RandomForest";
    case ModelKind::bernoulli_nb: return "BernoulliNB";
  }
  return "?";
}

/// Accepts the canonical names and the short forms svm/xgb/rfc/bnb.
inline ModelKind parse_model_kind(const std::string& s) {
  for (auto k : kAllModelKinds)
    if (to_string(k) == s) return k;
  if (s == "svm") return ModelKind::svm;
  if (s == "xgb") return ModelKind::xgb_like;
  if (s == "rfc") return ModelKind::random_forest;
  if (s == "bnb") return ModelKind::bernoulli_nb;
  throw ConfigError("unknown model kind '" + s + "'");
}

using HpValue = std::variant<double, std::int64_t, std::string>;

inline nlohmann::json to_json(const HpValue& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

inline HpValue hp_value_from_json(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_boolean()) return static_cast<std::int64_t>(j.get<bool>());
  throw ConfigError("hyperparameter values must be numbers or strings");
}

inline std::string hp_value_text(const HpValue& v) {
  if (auto* s = std::get_if<std::string>(&v)) return *s;
  if (auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", std::get<double>(v));
  return buf;
}

/// Named hyperparameter values.
class Hyperparams {
 public:
  Hyperparams() = default;
  Hyperparams(std::initializer_list<std::pair<const std::string, HpValue>> init) : values_(init) {}

  void set(const std::string& name, HpValue v) { values_[name] = std::move(v); }
  bool has(const std::string& name) const { return values_.count(name) != 0; }
  const std::map<std::string, HpValue>& values() const { return values_; }

  double real(const std::string& name) const {
    const auto& v = at(name);
    if (auto* d = std::get_if<double>(&v)) return *d;
    if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    throw ConfigError("hyperparameter '" + name + "' is not numeric");
  }

  std::int64_t integer(const std::string& name) const {
    const auto& v = at(name);
    if (auto* i = std::get_if<std::int64_t>(&v)) return *i;
    if (auto* d = std::get_if<double>(&v)) return static_cast<std::int64_t>(std::llround(*d));
    throw ConfigError("hyperparameter '" + name + "' is not numeric");
  }

  const std::string& text(const std::string& name) const {
    const auto& v = at(name);
    if (auto* s = std::get_if<std::string>(&v)) return *s;
    throw ConfigError("hyperparameter '" + name + "' is not categorical text");
  }

  /// Later values win.
  Hyperparams merged(const Hyperparams& over) const {
    Hyperparams out = *this;
    for (const auto& [k, v] : over.values_) out.values_[k] = v;
    return out;
  }

  std::string describe() const {
    std::string s;
    for (const auto& [k, v] : values_) {
      if (!s.empty()) s += ';';
      s += k + '=' + hp_value_text(v);
    }
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : values_) j[k] = btcdir::to_json(v);
    return j;
  }

  static Hyperparams from_json(const nlohmann::json& j) {
    Hyperparams hp;
    for (const auto& [k, v] : j.items()) hp.set(k, hp_value_from_json(v));
    return hp;
  }

  bool operator==(const Hyperparams&) const = default;

 private:
  const HpValue& at(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw ConfigError("missing hyperparameter '" + name + "'");
    return it->second;
  }

  std::map<std::string, HpValue> values_;
};

/// Legal range of one hyperparameter of one model kind.
struct ParamDecl {
  enum class Type { real, integer, categorical };
  std::string name;
  Type type = Type::real;
  double lo = 0.0, hi = 0.0;  // inclusive, numeric types
  std::vector<std::string> choices;
  HpValue fallback;
};

inline const std::vector<ParamDecl>& param_decls(ModelKind kind) {
  using T = ParamDecl::Type;
  static const std::vector<ParamDecl> svm{
      {"C", T::real, 1e-6, 1e6, {}, 1.0},
      {"kernel", T::categorical, 0, 0, {"linear", "rbf"}, std::string("rbf")},
      {"gamma", T::real, 1e-8, 1e4, {}, 0.1},
  };
  static const std::vector<ParamDecl> xgb{
      {"n_rounds", T::integer, 0, 5000, {}, std::int64_t{100}},
      {"learning_rate", T::real, 1e-4, 1.0, {}, 0.1},
      {"max_depth", T::integer, 1, 16, {}, std::int64_t{3}},
      {"subsample", T::real, 0.05, 1.0, {}, 1.0},
  };
  static const std::vector<ParamDecl> rf{
      {"n_trees", T::integer, 1, 2000, {}, std::int64_t{100}},
      {"max_depth", T::integer, 0, 128, {}, std::int64_t{0}},  // 0 = unlimited
      {"max_features_fraction", T::real, 1e-3, 1.0, {}, 0.3},
      {"bootstrap", T::integer, 0, 1, {}, std::int64_t{1}},
      {"min_samples_leaf", T::integer, 1, 10000, {}, std::int64_t{1}},
  };
  static const std::vector<ParamDecl> bnb{
      {"alpha", T::real, 1e-9, 1e4, {}, 1.0},
      {"binarize", T::real, -1e12, 1e12, {}, 0.0},
  };
  switch (kind) {
    case ModelKind::svm: return svm;
    case ModelKind::xgb_like: return xgb;
    case ModelKind::random_forest: return rf;
    case ModelKind::bernoulli_nb: return bnb;
  }
  return svm;
}

/// Fill defaults, then check names, types and bounds. Throws ConfigError.
inline Hyperparams resolve_hyperparams(ModelKind kind, const Hyperparams& given) {
  const auto& decls = param_decls(kind);
  for (const auto& [name, _] : given.values()) {
    bool known = false;
    for (const auto& d : decls) known = known || d.name == name;
    if (!known) throw ConfigError(to_string(kind) + ": unknown hyperparameter '" + name + "'");
  }
  Hyperparams out;
  for (const auto& d : decls) {
    HpValue v = given.has(d.name) ? given.values().at(d.name) : d.fallback;
    if (d.type == ParamDecl::Type::categorical) {
      auto* s = std::get_if<std::string>(&v);
      if (!s) throw ConfigError(to_string(kind) + ": '" + d.name + "' must be one of its categories");
      bool ok = false;
      for (const auto& c : d.choices) ok = ok || c == *s;
      if (!ok) throw ConfigError(to_string(kind) + ": '" + d.name + "' has unknown value '" + *s + "'");
    } else {
      if (std::holds_alternative<std::string>(v)) throw ConfigError(to_string(kind) + ": '" + d.name + "' must be numeric");
      double x = std::holds_alternative<double>(v) ? std::get<double>(v) : static_cast<double>(std::get<std::int64_t>(v));
      if (d.type == ParamDecl::Type::integer) {
        x = std::round(x);
        v = static_cast<std::int64_t>(x);
      } else {
        v = x;
      }
      if (!(x >= d.lo && x <= d.hi))
        throw ConfigError(to_string(kind) + ": '" + d.name + "' = " + hp_value_text(v) + " outside [" +
                          hp_value_text(d.lo) + ", " + hp_value_text(d.hi) + "]");
    }
    out.set(d.name, std::move(v));
  }
  return out;
}

}  // namespace btcdir
