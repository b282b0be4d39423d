#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xplore/catalog.hpp"
#include "xplore/predicate.hpp"

namespace xplore {

enum class AggregateFn { Count, Sum, Avg, Min, Max };

std::string_view aggregate_name(AggregateFn fn) noexcept;  // "count", "sum", ...
AggregateFn parse_aggregate(std::string_view s);

struct Aggregate {
  AggregateFn fn = AggregateFn::Count;
  std::optional<ColumnRef> column;  // nullopt is '*'

  bool operator==(const Aggregate&) const = default;
};

// `left_table` is already in scope; `right_table` is joined in.
struct JoinClause {
  std::string left_table;
  std::string right_table;
  std::vector<std::pair<std::string, std::string>> keys;  // (left column, right column)

  bool operator==(const JoinClause&) const = default;
};

struct OrderBy {
  ColumnRef column;
  bool descending = false;
  bool operator==(const OrderBy&) const = default;
};

struct QueryAst {
  std::string source;
  std::vector<JoinClause> joins;
  std::vector<Comparison> filter;  // conjunction
  std::optional<ColumnRef> group_by;
  std::vector<Aggregate> aggregates;
  std::optional<std::vector<ColumnRef>> projection;  // nullopt is '*'
  std::optional<OrderBy> order_by;
  std::optional<std::size_t> limit;

  bool operator==(const QueryAst&) const = default;

  bool is_aggregate() const { return group_by.has_value() || !aggregates.empty(); }
  std::vector<std::string> tables_in_scope() const;

  nlohmann::json to_json() const;
  static QueryAst from_json(const nlohmann::json& j);
};

// Throws InvalidAst describing the first violated invariant.
void validate(const QueryAst& ast, const Catalog& catalog);

// Star projection expanded in scope order; grouped queries project exactly
// the group key. Validates first.
QueryAst canonicalize(const QueryAst& ast, const Catalog& catalog);

// Canonical JSON text, used for tie-breaking and distinctness.
std::string canonical_string(const QueryAst& ast);

QueryAst full_scan(const std::string& table);

}  // namespace xplore
