#include "xplore/dataset.hpp"

#include "xplore/error.hpp"

namespace xplore {

using nlohmann::json;

namespace {

json parse_json_file(const std::filesystem::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, p.string() + ": " + e.what());
  }
}

}  // namespace

const Taxonomy* Dataset::find_taxonomy(std::string_view key) const {
  for (const auto& t : taxonomies) {
    if (t.name() == key) return &t;
  }
  for (const auto& t : taxonomies) {
    if (t.table() == key) return &t;
  }
  return nullptr;
}

Dataset Dataset::with_catalog(Catalog other) const {
  Dataset d;
  d.name = name;
  d.catalog = std::move(other);
  d.graph = build_schema_graph(d.catalog, GraphConfig::from_catalog(d.catalog));
  d.templates = templates;
  d.nl = nl;
  d.taxonomy_config = taxonomy_config;
  for (const auto& t : taxonomy_config) d.taxonomies.push_back(Taxonomy::from_json(t, d.catalog));
  d.profiles = profile_catalog(d.catalog);
  d.in_list_limit = in_list_limit;
  return d;
}

Dataset build_dataset(std::string name, Catalog catalog, const json& options) {
  Dataset d;
  d.name = std::move(name);
  d.catalog = std::move(catalog);
  d.graph = build_schema_graph(d.catalog, GraphConfig::from_catalog(d.catalog));
  if (options.contains("templates")) d.templates = TemplateSet::from_json(options["templates"], true);
  if (options.contains("nl")) d.nl = NlConfig::from_json(options["nl"]);
  if (options.contains("taxonomies")) d.taxonomy_config = options["taxonomies"];
  for (const auto& t : d.taxonomy_config) d.taxonomies.push_back(Taxonomy::from_json(t, d.catalog));
  d.in_list_limit = options.value("in_list_limit", kDefaultInListLimit);
  d.profiles = profile_catalog(d.catalog);
  return d;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  const json manifest = parse_json_file(manifest_path);
  const auto base = manifest_path.parent_path();
  if (!manifest.contains("tables") || !manifest["tables"].is_array()) {
    throw Error(ErrorCode::InvalidConfig, manifest_path.string() + ": manifest needs a 'tables' array");
  }
  Catalog catalog;
  for (const auto& entry : manifest["tables"]) {
    if (!entry.contains("csv") || !entry.contains("schema")) {
      throw Error(ErrorCode::InvalidConfig, "manifest table entry needs csv and schema");
    }
    auto schema = TableSchema::from_json(parse_json_file(base / entry["schema"].get<std::string>()));
    catalog.add(ingest_csv(base / entry["csv"].get<std::string>(), schema), schema);
  }
  json options = json::object();
  if (manifest.contains("templates")) {
    const auto& t = manifest["templates"];
    options["templates"] = t.is_string() ? parse_json_file(base / t.get<std::string>()) : t;
  }
  if (manifest.contains("nl")) options["nl"] = manifest["nl"];
  if (manifest.contains("taxonomies")) {
    json taxa = json::array();
    for (const auto& t : manifest["taxonomies"]) taxa.push_back(t.is_string() ? parse_json_file(base / t.get<std::string>()) : t);
    options["taxonomies"] = taxa;
  }
  if (manifest.contains("in_list_limit")) options["in_list_limit"] = manifest["in_list_limit"];
  return build_dataset(manifest.value("name", manifest_path.stem().string()), std::move(catalog), options);
}

}  // namespace xplore
