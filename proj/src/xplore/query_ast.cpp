#include "xplore/query_ast.hpp"

#include <algorithm>

#include "xplore/error.hpp"

namespace xplore {

using nlohmann::json;

std::string_view aggregate_name(AggregateFn fn) noexcept {
  switch (fn) {
    case AggregateFn::Count: return "count";
    case AggregateFn::Sum: return "sum";
    case AggregateFn::Avg: return "avg";
    case AggregateFn::Min: return "min";
    case AggregateFn::Max: return "max";
  }
  return "count";
}

AggregateFn parse_aggregate(std::string_view s) {
  if (s == "count") return AggregateFn::Count;
  if (s == "sum") return AggregateFn::Sum;
  if (s == "avg") return AggregateFn::Avg;
  if (s == "min") return AggregateFn::Min;
  if (s == "max") return AggregateFn::Max;
  throw Error(ErrorCode::SchemaViolation, "unknown aggregate '" + std::string(s) + "'");
}

std::vector<std::string> QueryAst::tables_in_scope() const {
  std::vector<std::string> out{source};
  for (const auto& j : joins) out.push_back(j.right_table);
  return out;
}

namespace {

json column_json(const ColumnRef& c) { return {{"table", c.table}, {"attribute", c.column}}; }

ColumnRef column_from(const json& j, const std::string& source) {
  if (j.is_string()) {
    auto s = j.get<std::string>();
    auto dot = s.find('.');
    if (dot == std::string::npos) return {source, s};
    return {s.substr(0, dot), s.substr(dot + 1)};
  }
  if (!j.is_object() || !j.contains("attribute")) throw Error(ErrorCode::SchemaViolation, "column reference needs an attribute");
  return {j.value("table", source), j["attribute"].get<std::string>()};
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidAst, what); }

}  // namespace

json QueryAst::to_json() const {
  json j{{"source", source}};
  json js = json::array();
  for (const auto& jc : joins) {
    json keys = json::array();
    for (const auto& [a, b] : jc.keys) keys.push_back({a, b});
    js.push_back({{"left", jc.left_table}, {"right", jc.right_table}, {"keys", keys}});
  }
  j["joins"] = js;
  json f = json::array();
  for (const auto& c : filter) f.push_back(comparison_to_json(c));
  j["filter"] = f;
  j["group_by"] = group_by ? column_json(*group_by) : json(nullptr);
  json a = json::array();
  for (const auto& ag : aggregates) {
    a.push_back({{"fn", aggregate_name(ag.fn)}, {"column", ag.column ? column_json(*ag.column) : json("*")}});
  }
  j["aggregates"] = a;
  if (projection) {
    json p = json::array();
    for (const auto& c : *projection) p.push_back(column_json(c));
    j["projection"] = p;
  } else {
    j["projection"] = "*";
  }
  j["order_by"] = order_by ? json{{"column", column_json(order_by->column)}, {"descending", order_by->descending}}
                           : json(nullptr);
  j["limit"] = limit ? json(*limit) : json(nullptr);
  return j;
}

QueryAst QueryAst::from_json(const json& j) {
  if (!j.is_object() || !j.contains("source") || !j["source"].is_string()) {
    throw Error(ErrorCode::SchemaViolation, "query needs a source table");
  }
  QueryAst a;
  a.source = j["source"].get<std::string>();
  if (j.contains("joins") && j["joins"].is_array()) {
    for (const auto& jc : j["joins"]) {
      JoinClause c{jc.at("left").get<std::string>(), jc.at("right").get<std::string>(), {}};
      for (const auto& k : jc.at("keys")) c.keys.emplace_back(k.at(0).get<std::string>(), k.at(1).get<std::string>());
      a.joins.push_back(std::move(c));
    }
  }
  if (j.contains("filter") && j["filter"].is_array()) {
    for (const auto& c : j["filter"]) {
      Comparison cmp = comparison_from_json(c);
      if (cmp.column.table.empty()) cmp.column.table = a.source;
      a.filter.push_back(std::move(cmp));
    }
  }
  if (j.contains("group_by") && !j["group_by"].is_null()) a.group_by = column_from(j["group_by"], a.source);
  if (j.contains("aggregates") && j["aggregates"].is_array()) {
    for (const auto& ag : j["aggregates"]) {
      Aggregate x{parse_aggregate(ag.at("fn").get<std::string>()), std::nullopt};
      if (ag.contains("column") && !(ag["column"].is_string() && ag["column"] == "*")) {
        x.column = column_from(ag["column"], a.source);
      }
      a.aggregates.push_back(std::move(x));
    }
  }
  if (j.contains("projection") && j["projection"].is_array()) {
    std::vector<ColumnRef> p;
    for (const auto& c : j["projection"]) p.push_back(column_from(c, a.source));
    a.projection = std::move(p);
  }
  if (j.contains("order_by") && !j["order_by"].is_null()) {
    const auto& o = j["order_by"];
    a.order_by = OrderBy{column_from(o.at("column"), a.source), o.value("descending", false)};
  }
  if (j.contains("limit") && !j["limit"].is_null()) {
    if (!j["limit"].is_number_unsigned() && !(j["limit"].is_number_integer() && j["limit"].get<long long>() >= 0)) {
      throw Error(ErrorCode::SchemaViolation, "limit must be a non-negative integer");
    }
    a.limit = j["limit"].get<std::size_t>();
  }
  return a;
}

void validate(const QueryAst& ast, const Catalog& catalog) {
  if (catalog.find(ast.source) == nullptr) invalid("unknown source table '" + ast.source + "'");
  std::vector<std::string> scope{ast.source};
  auto in_scope = [&](const std::string& t) { return std::find(scope.begin(), scope.end(), t) != scope.end(); };
  for (const auto& j : ast.joins) {
    if (!in_scope(j.left_table)) invalid("join left table '" + j.left_table + "' is not in scope");
    if (in_scope(j.right_table)) invalid("table '" + j.right_table + "' joined twice");
    const Table* l = catalog.find(j.left_table);
    const Table* r = catalog.find(j.right_table);
    if (r == nullptr) invalid("unknown join table '" + j.right_table + "'");
    if (j.keys.empty()) invalid("join without keys");
    for (const auto& [lc, rc] : j.keys) {
      if (!l->find_column(lc) || !r->find_column(rc)) invalid("unknown join key " + lc + " = " + rc);
    }
    scope.push_back(j.right_table);
  }
  auto check_column = [&](const ColumnRef& c) -> const ColumnDef& {
    if (!in_scope(c.table)) invalid("table '" + c.table + "' of " + c.qualified() + " is not in scope");
    const Table& t = catalog.table(c.table);
    auto idx = t.find_column(c.column);
    if (!idx) invalid("unknown attribute " + c.qualified());
    return t.columns()[*idx];
  };
  for (const auto& cmp : ast.filter) {
    check_column(cmp.column);
    try {
      check_literal(catalog.table(cmp.column.table), cmp);
    } catch (const Error& e) {
      invalid(e.what());
    }
  }
  if (ast.group_by) {
    check_column(*ast.group_by);
    if (ast.projection) {
      for (const auto& p : *ast.projection) {
        if (p != *ast.group_by) invalid("grouped projection may only contain the group key");
      }
    }
  } else if (!ast.aggregates.empty()) {
    if (!ast.projection || !ast.projection->empty()) invalid("ungrouped aggregates need an empty projection");
  }
  for (const auto& ag : ast.aggregates) {
    if (!ag.column) {
      if (ag.fn != AggregateFn::Count) invalid(std::string(aggregate_name(ag.fn)) + "(*) is not allowed");
      continue;
    }
    const auto& def = check_column(*ag.column);
    if ((ag.fn == AggregateFn::Sum || ag.fn == AggregateFn::Avg) && def.kind != ColumnKind::Numeric) {
      invalid(std::string(aggregate_name(ag.fn)) + " needs a numeric attribute, " + ag.column->qualified() + " is not");
    }
  }
  if (!ast.is_aggregate() && ast.projection) {
    if (ast.projection->empty()) invalid("empty projection");
    for (const auto& p : *ast.projection) check_column(p);
  }
  if (ast.order_by) {
    check_column(ast.order_by->column);
    if (ast.group_by && ast.order_by->column != *ast.group_by) invalid("grouped queries order by the group key only");
    if (!ast.group_by && !ast.aggregates.empty()) invalid("ungrouped aggregate queries cannot be ordered");
  }
}

QueryAst canonicalize(const QueryAst& ast, const Catalog& catalog) {
  validate(ast, catalog);
  QueryAst c = ast;
  if (c.group_by) {
    c.projection = std::vector<ColumnRef>{*c.group_by};
    // Groups come out in key order unless told otherwise.
    if (!c.order_by) c.order_by = OrderBy{*c.group_by, false};
  } else if (!c.aggregates.empty()) {
    c.projection = std::vector<ColumnRef>{};
  } else if (!c.projection) {
    std::vector<ColumnRef> cols;
    for (const auto& t : c.tables_in_scope()) {
      for (const auto& def : catalog.table(t).columns()) cols.push_back({t, def.name});
    }
    c.projection = std::move(cols);
  }
  return c;
}

std::string canonical_string(const QueryAst& ast) { return ast.to_json().dump(); }

QueryAst full_scan(const std::string& table) {
  QueryAst a;
  a.source = table;
  return a;
}

}  // namespace xplore
