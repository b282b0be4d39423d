#pragma once

#include <string>
#include <vector>

#include "xplore/entity_set.hpp"
#include "xplore/query_ast.hpp"

namespace xplore {

// Deterministic ANSI-style SQL text. Column names are qualified only when the
// query joins; grouped queries without an explicit ORDER BY sort by the group
// key. LIMIT is emitted as "LIMIT n".
std::string compile_to_sql(const QueryAst& ast, const Catalog& catalog);

std::string sql_string_literal(std::string_view s);
std::string sql_literal(const Literal& v);
// Header label for an aggregate, e.g. "COUNT(*)" or "AVG(funding)".
std::string aggregate_label(const Aggregate& ag, bool qualify);

inline constexpr std::size_t kDefaultInListLimit = 10000;

// Either the set's provenance filter or an "id IN (...)" list.
struct MembershipPredicate {
  std::string table;
  std::vector<Comparison> conjuncts;       // provenance route
  std::string id_column;                   // IN-list route
  std::vector<std::string> in_ids;         // ascending in set order
  bool uses_provenance = false;

  std::string to_sql() const;
};

MembershipPredicate set_to_predicate(const EntitySet& set, const Catalog& catalog,
                                     std::size_t in_list_limit = kDefaultInListLimit);

}  // namespace xplore
