#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xplore/catalog.hpp"
#include "xplore/explainer.hpp"
#include "xplore/nl_frontend.hpp"
#include "xplore/operators.hpp"
#include "xplore/schema_graph.hpp"
#include "xplore/sql_compiler.hpp"

namespace xplore {

// A catalog plus everything derived from it. Immutable once built; share by
// const reference or shared_ptr<const Dataset>.
struct Dataset {
  std::string name;
  Catalog catalog;
  SchemaGraph graph;
  TemplateSet templates = TemplateSet::defaults();
  NlConfig nl;
  std::vector<Taxonomy> taxonomies;
  nlohmann::json taxonomy_config = nlohmann::json::array();
  std::vector<ColumnProfile> profiles;
  std::size_t in_list_limit = kDefaultInListLimit;

  const Taxonomy* find_taxonomy(std::string_view name_or_table) const;

  // Same configuration over a different catalog (graph, profiles and
  // taxonomies rebuilt).
  Dataset with_catalog(Catalog other) const;
};

// Manifest: {name, tables:[{csv, schema}], templates?, nl?, taxonomies?, in_list_limit?}.
// Relative paths resolve against the manifest's directory.
Dataset load_dataset(const std::filesystem::path& manifest);

Dataset build_dataset(std::string name, Catalog catalog, const nlohmann::json& options = nlohmann::json::object());

}  // namespace xplore
