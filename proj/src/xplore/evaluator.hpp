#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xplore/catalog.hpp"
#include "xplore/entity_set.hpp"
#include "xplore/query_ast.hpp"

namespace xplore {

struct ResultTable {
  std::vector<std::string> headers;
  std::vector<std::vector<Cell>> rows;  // bag

  nlohmann::json to_json() const;
};

// Bag equality; numbers compare within a relative tolerance.
bool bag_equal(const ResultTable& a, const ResultTable& b, double tolerance = 1e-9);

// Reference backend: missing cells fail every comparison, NULL-like keys never
// join, missing group keys form one group sorted last.
ResultTable eval_in_memory(const QueryAst& ast, const Catalog& catalog);

// Matching identifiers of the source table; provenance keeps the filter when
// it alone defines the set.
EntitySet ast_to_set(const QueryAst& ast, const Catalog& catalog);

}  // namespace xplore
