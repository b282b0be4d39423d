#include "xplore/sql_compiler.hpp"

#include <algorithm>
#include <cctype>

#include "xplore/error.hpp"

namespace xplore {

std::string sql_string_literal(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "''";
    else out += c;
  }
  out += '\'';
  return out;
}

std::string sql_literal(const Literal& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
  return sql_string_literal(std::get<std::string>(v));
}

namespace {

std::string column_sql(const ColumnRef& c, bool qualify) { return qualify ? c.table + "." + c.column : c.column; }

std::string like_pattern(const std::string& needle, bool& needs_escape) {
  std::string out = "%";
  needs_escape = false;
  for (char c : needle) {
    if (c == '%' || c == '_' || c == '!') {
      out += '!';
      needs_escape = true;
    }
    out += c;
  }
  out += '%';
  return out;
}

std::string comparison_sql(const Comparison& c, bool qualify) {
  const std::string col = column_sql(c.column, qualify);
  if (c.op == CompareOp::Contains) {
    bool esc = false;
    std::string pat = like_pattern(std::get<std::string>(c.value), esc);
    return col + " LIKE " + sql_string_literal(pat) + (esc ? " ESCAPE '!'" : "");
  }
  std::string op = c.op == CompareOp::Ne ? "<>" : std::string(compare_op_symbol(c.op));
  return col + " " + op + " " + sql_literal(c.value);
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace

std::string aggregate_label(const Aggregate& ag, bool qualify) {
  return upper(aggregate_name(ag.fn)) + "(" + (ag.column ? column_sql(*ag.column, qualify) : "*") + ")";
}

std::string compile_to_sql(const QueryAst& input, const Catalog& catalog) {
  const QueryAst ast = canonicalize(input, catalog);
  const bool qualify = !ast.joins.empty();

  std::vector<std::string> select;
  for (const auto& p : *ast.projection) select.push_back(column_sql(p, qualify));
  for (const auto& ag : ast.aggregates) select.push_back(aggregate_label(ag, qualify));
  if (select.empty()) throw Error(ErrorCode::InvalidAst, "query selects nothing");

  std::string sql = "SELECT ";
  for (std::size_t i = 0; i < select.size(); ++i) sql += (i ? ", " : "") + select[i];
  sql += " FROM " + ast.source;
  for (const auto& j : ast.joins) {
    sql += " INNER JOIN " + j.right_table + " ON ";
    for (std::size_t k = 0; k < j.keys.size(); ++k) {
      if (k) sql += " AND ";
      sql += j.left_table + "." + j.keys[k].first + " = " + j.right_table + "." + j.keys[k].second;
    }
  }
  if (!ast.filter.empty()) {
    sql += " WHERE ";
    for (std::size_t i = 0; i < ast.filter.size(); ++i) sql += (i ? " AND " : "") + comparison_sql(ast.filter[i], qualify);
  }
  if (ast.group_by) sql += " GROUP BY " + column_sql(*ast.group_by, qualify);
  if (ast.order_by) {
    sql += " ORDER BY " + column_sql(ast.order_by->column, qualify) + (ast.order_by->descending ? " DESC" : "");
  } else if (ast.group_by) {
    sql += " ORDER BY " + column_sql(*ast.group_by, qualify);
  }
  if (ast.limit) sql += " LIMIT " + std::to_string(*ast.limit);
  return sql;
}

std::string MembershipPredicate::to_sql() const {
  if (uses_provenance) {
    if (conjuncts.empty()) return "1 = 1";
    std::string out;
    for (std::size_t i = 0; i < conjuncts.size(); ++i) out += (i ? " AND " : "") + comparison_sql(conjuncts[i], false);
    return out;
  }
  std::string out = id_column + " IN (";
  for (std::size_t i = 0; i < in_ids.size(); ++i) out += (i ? ", " : "") + sql_string_literal(in_ids[i]);
  return out + ")";
}

MembershipPredicate set_to_predicate(const EntitySet& set, const Catalog& catalog, std::size_t in_list_limit) {
  const Table& t = catalog.table(set.base_table());
  MembershipPredicate p;
  p.table = t.name();
  if (set.provenance() && set.provenance()->filter) {
    p.uses_provenance = true;
    p.conjuncts = *set.provenance()->filter;
    return p;
  }
  if (set.empty()) throw Error(ErrorCode::InvalidArgument, "cannot push down an empty set without provenance");
  if (set.size() > in_list_limit) {
    throw Error(ErrorCode::SetTooLargeForInList, "set of " + std::to_string(set.size()) + " ids exceeds the IN-list limit of " +
                                                     std::to_string(in_list_limit));
  }
  p.id_column = t.identifier_name();
  p.in_ids = set.identifiers(t);
  return p;
}

}  // namespace xplore
