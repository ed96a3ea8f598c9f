#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "btcdir/ingestion/csv.hpp"

namespace btcdir {

/// One entry of a source manifest.
struct SourceSpec {
  std::string id;
  std::filesystem::path path;  // resolved against the manifest's directory
  Category category = Category::internal;
  ColumnSchema schema;
};

/// Manifest document:
/// {"sources": [{"id": "btc", "path": "btc.csv", "category": "internal",
///               "columns": ["close", "hashrate"]}, ...]}
inline std::vector<SourceSpec> parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object() || !doc.contains("sources") || !doc["sources"].is_array())
    throw ConfigError("manifest: expected an object with a 'sources' array");
  std::vector<SourceSpec> out;
  for (const auto& s : doc["sources"]) {
    if (!s.is_object()) throw ConfigError("manifest: source entries must be objects");
    for (const char* key : {"id", "path", "category"})
      if (!s.contains(key) || !s[key].is_string())
        throw ConfigError(std::string("manifest: source missing string field '") + key + "'");
    SourceSpec spec;
    spec.id = s["id"].get<std::string>();
    spec.path = base_dir / s["path"].get<std::string>();
    spec.category = parse_category(s["category"].get<std::string>());
    if (s.contains("columns")) {
      if (!s["columns"].is_array()) throw ConfigError("manifest: 'columns' must be an array of names");
      for (const auto& c : s["columns"]) spec.schema.columns.push_back(c.get<std::string>());
    }
    for (const auto& prev : out)
      if (prev.id == spec.id) throw ConfigError("manifest: duplicate source id '" + spec.id + "'");
    out.push_back(std::move(spec));
  }
  return out;
}

inline std::vector<SourceSpec> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest " + path.string() + ": " + e.what());
  }
  return parse_manifest(doc, path.parent_path());
}

inline std::vector<RawSeries> load_sources(const std::vector<SourceSpec>& specs) {
  std::vector<RawSeries> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(load_csv(s.path, s.schema, s.category, s.id));
  return out;
}

}  // namespace btcdir
