#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "btcdir/core/error.hpp"

namespace btcdir {

/// Published configuration schema (also shipped as docs/config.schema.json).
inline const nlohmann::json& config_schema() {
  static const nlohmann::json schema = nlohmann::json::parse(R"SCHEMA({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "btcdir pipeline configuration",
  "type": "object",
  "required": ["manifest", "features", "train_end", "reduce", "models", "cv", "trading"],
  "additionalProperties": false,
  "properties": {
    "manifest": {"type": "string", "minLength": 1, "description": "Source manifest, relative to the config file."},
    "calendar": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "start": {"type": "string", "description": "ISO date; defaults to the earliest source date."},
        "end": {"type": "string", "description": "ISO date; defaults to the latest source date."}
      }
    },
    "impute": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "internal": {"enum": ["linear", "ffill", "zero"]},
        "market_price": {"enum": ["ffill", "zero"]},
        "market_volume": {"enum": ["ffill", "zero"]},
        "economic": {"enum": ["ffill", "zero"]}
      }
    },
    "features": {
      "type": "object",
      "required": ["close_column", "indicator_bases"],
      "additionalProperties": false,
      "properties": {
        "close_column": {"type": "string", "minLength": 1},
        "indicator_bases": {"type": "array", "items": {"type": "string", "minLength": 1}},
        "indicators": {
          "description": "Either \"default\" (every kind x windows 3,7,14,30,90) or a list of {kind, windows}.",
          "type": ["string", "array"],
          "items": {
            "type": "object",
            "required": ["kind", "windows"],
            "additionalProperties": false,
            "properties": {
              "kind": {"enum": ["SMA", "EMA", "WMA", "MOM", "ROC", "RSI", "STDDEV", "VAR", "TRIX"]},
              "windows": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 2}}
            }
          }
        },
        "cyclical": {"type": "boolean"},
        "lag": {"type": "integer", "minimum": 1}
      }
    },
    "train_end": {"type": "string", "description": "Last date (ISO) of the training snapshot."},
    "reduce": {
      "type": "object",
      "required": ["evr_targets"],
      "additionalProperties": false,
      "properties": {
        "evr_targets": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}}
      }
    },
    "models": {
      "type": "object",
      "minProperties": 1,
      "additionalProperties": {
        "type": "object",
        "required": ["search"],
        "additionalProperties": false,
        "properties": {
          "search": {
            "type": "object",
            "additionalProperties": {
              "type": ["array", "object"],
              "minItems": 1,
              "properties": {
                "low": {"type": "number"},
                "high": {"type": "number"},
                "scale": {"enum": ["linear", "log"]},
                "type": {"enum": ["real", "integer"]}
              }
            }
          },
          "budget": {"type": "integer", "minimum": 5}
        }
      }
    },
    "cv": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "outer_folds": {"type": "integer", "minimum": 2},
        "inner_folds": {"type": "integer", "minimum": 2},
        "min_train_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "allow_leakage_for_demo": {"type": "boolean"}
      }
    },
    "trading": {
      "type": "object",
      "required": ["start", "end"],
      "additionalProperties": false,
      "properties": {
        "start": {"type": "string"},
        "end": {"type": "string"},
        "taus": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0, "maximum": 1}},
        "plot_tau": {"type": "number", "minimum": 0, "maximum": 1}
      }
    },
    "audit": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "leakage_model": {"enum": ["SVM", "XGBLike", "RandomForest", "BernoulliNB"]},
        "leakage_hyperparams": {"type": "object"},
        "leakage_seeds": {"type": "integer", "minimum": 1},
        "test_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
      }
    },
    "seed": {"type": "integer", "minimum": 0},
    "output_dir": {"type": "string"}
  }
}
)SCHEMA");
  return schema;
}

namespace detail {

inline bool json_type_is(const nlohmann::json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  if (t == "null") return v.is_null();
  return false;
}

inline void schema_check(const nlohmann::json& v, const nlohmann::json& s, const std::string& where,
                         std::vector<std::string>& errors) {
  if (s.contains("type")) {
    bool ok = false;
    if (s["type"].is_string()) {
      ok = json_type_is(v, s["type"]);
    } else {
      for (const auto& t : s["type"]) ok = ok || json_type_is(v, t);
    }
    if (!ok) {
      errors.push_back(where + ": expected type " + s["type"].dump());
      return;
    }
  }
  if (s.contains("enum")) {
    bool ok = false;
    for (const auto& e : s["enum"]) ok = ok || e == v;
    if (!ok) errors.push_back(where + ": must be one of " + s["enum"].dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (s.contains("minimum") && x < s["minimum"].get<double>()) errors.push_back(where + ": below minimum " + s["minimum"].dump());
    if (s.contains("maximum") && x > s["maximum"].get<double>()) errors.push_back(where + ": above maximum " + s["maximum"].dump());
    if (s.contains("exclusiveMinimum") && x <= s["exclusiveMinimum"].get<double>())
      errors.push_back(where + ": must exceed " + s["exclusiveMinimum"].dump());
    if (s.contains("exclusiveMaximum") && x >= s["exclusiveMaximum"].get<double>())
      errors.push_back(where + ": must be below " + s["exclusiveMaximum"].dump());
  }
  if (v.is_string() && s.contains("minLength") && v.get<std::string>().size() < s["minLength"].get<std::size_t>())
    errors.push_back(where + ": too short");
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) errors.push_back(where + ": too few items");
    if (s.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i) schema_check(v[i], s["items"], where + "[" + std::to_string(i) + "]", errors);
  }
  if (v.is_object()) {
    if (s.contains("minProperties") && v.size() < s["minProperties"].get<std::size_t>())
      errors.push_back(where + ": needs at least " + s["minProperties"].dump() + " entries");
    if (s.contains("required"))
      for (const auto& r : s["required"])
        if (!v.contains(r.get<std::string>())) errors.push_back(where + ": missing required key '" + r.get<std::string>() + "'");
    for (const auto& [key, child] : v.items()) {
      const std::string at = where + "." + key;
      if (s.contains("properties") && s["properties"].contains(key)) {
        schema_check(child, s["properties"][key], at, errors);
      } else if (s.contains("additionalProperties")) {
        const auto& ap = s["additionalProperties"];
        if (ap.is_boolean()) {
          if (!ap.get<bool>()) errors.push_back(at + ": unknown key");
        } else {
          schema_check(child, ap, at, errors);
        }
      }
    }
  }
}

}  // namespace detail

/// Validate `doc` against a schema using the JSON Schema keywords the
/// config schema relies on (type, enum, required, properties,
/// additionalProperties, items, minItems, minProperties, minLength and the
/// numeric bounds). Returns one message per violation.
inline std::vector<std::string> schema_errors(const nlohmann::json& doc, const nlohmann::json& schema = config_schema()) {
  std::vector<std::string> errors;
  detail::schema_check(doc, schema, "$", errors);
  return errors;
}

}  // namespace btcdir
