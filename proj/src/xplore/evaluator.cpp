#include "xplore/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "xplore/error.hpp"
#include "xplore/sql_compiler.hpp"

namespace xplore {

using nlohmann::json;

json ResultTable::to_json() const {
  json rs = json::array();
  for (const auto& r : rows) {
    json row = json::array();
    for (const auto& c : r) {
      if (is_missing(c)) row.push_back(nullptr);
      else if (const auto* d = std::get_if<double>(&c)) row.push_back(*d);
      else row.push_back(std::get<std::string>(c));
    }
    rs.push_back(std::move(row));
  }
  return {{"headers", headers}, {"rows", rs}};
}

namespace {

bool cells_close(const Cell& a, const Cell& b, double tol) {
  const auto* x = std::get_if<double>(&a);
  const auto* y = std::get_if<double>(&b);
  if (x && y) return std::fabs(*x - *y) <= tol * std::max({1.0, std::fabs(*x), std::fabs(*y)});
  return compare_cells(a, b) == 0;
}

// Coarse key so near-equal numbers sort together before the tolerant comparison.
std::string sort_key(const std::vector<Cell>& row) {
  std::string k;
  for (const auto& c : row) {
    if (const auto* d = std::get_if<double>(&c)) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "n%.6e", *d);
      k += buf;
    } else {
      k += cell_key(c);
    }
    k += '\x1f';
  }
  return k;
}

struct Scope {
  std::vector<const Table*> tables;

  std::size_t position(const std::string& name) const {
    for (std::size_t i = 0; i < tables.size(); ++i) {
      if (tables[i]->name() == name) return i;
    }
    throw Error(ErrorCode::InvalidAst, "table '" + name + "' not in scope");
  }
};

struct BoundColumn {
  std::size_t pos;
  std::size_t col;
};

using Tuple = std::vector<RowId>;

BoundColumn bind(const Scope& s, const ColumnRef& c) {
  auto pos = s.position(c.table);
  return {pos, s.tables[pos]->column_index(c.column)};
}

const Cell& fetch(const Scope& s, const Tuple& t, BoundColumn b) { return s.tables[b.pos]->cell(t[b.pos], b.col); }

std::vector<Tuple> matching_tuples(const QueryAst& ast, const Catalog& catalog, Scope& scope) {
  scope.tables.push_back(&catalog.table(ast.source));
  std::vector<Tuple> tuples;
  for (RowId r = 0; r < scope.tables[0]->row_count(); ++r) tuples.push_back({r});

  for (const auto& j : ast.joins) {
    std::size_t left_pos = scope.position(j.left_table);
    const Table& left = *scope.tables[left_pos];
    std::vector<std::size_t> left_cols;
    std::vector<std::string> right_cols;
    for (const auto& [lc, rc] : j.keys) {
      left_cols.push_back(left.column_index(lc));
      right_cols.push_back(rc);
    }
    const KeyIndex& index = catalog.key_index(j.right_table, right_cols);
    scope.tables.push_back(&catalog.table(j.right_table));
    std::vector<Tuple> next;
    for (const auto& t : tuples) {
      bool missing = std::any_of(left_cols.begin(), left_cols.end(),
                                 [&](auto c) { return is_missing(left.cell(t[left_pos], c)); });
      if (missing) continue;
      auto it = index.find(composite_key(left, t[left_pos], left_cols));
      if (it == index.end()) continue;
      for (RowId r : it->second) {
        Tuple n = t;
        n.push_back(r);
        next.push_back(std::move(n));
      }
    }
    tuples = std::move(next);
  }

  std::vector<std::pair<BoundColumn, const Comparison*>> preds;
  for (const auto& c : ast.filter) preds.emplace_back(bind(scope, c.column), &c);
  std::erase_if(tuples, [&](const Tuple& t) {
    return !std::all_of(preds.begin(), preds.end(),
                        [&](const auto& p) { return evaluate(fetch(scope, t, p.first), p.second->op, p.second->value); });
  });
  return tuples;
}

Cell aggregate(const Aggregate& ag, const Scope& scope, const std::vector<const Tuple*>& group) {
  if (!ag.column) return static_cast<double>(group.size());
  BoundColumn b = bind(scope, *ag.column);
  std::size_t n = 0;
  double sum = 0;
  Cell best;
  for (const auto* t : group) {
    const Cell& c = fetch(scope, *t, b);
    if (is_missing(c)) continue;
    ++n;
    if (const auto* d = std::get_if<double>(&c)) sum += *d;
    if (is_missing(best)) best = c;
    else if (ag.fn == AggregateFn::Min && compare_cells(c, best) < 0) best = c;
    else if (ag.fn == AggregateFn::Max && compare_cells(c, best) > 0) best = c;
  }
  switch (ag.fn) {
    case AggregateFn::Count: return static_cast<double>(n);
    case AggregateFn::Sum: return n == 0 ? Cell{} : Cell{sum};
    case AggregateFn::Avg: return n == 0 ? Cell{} : Cell{sum / static_cast<double>(n)};
    case AggregateFn::Min:
    case AggregateFn::Max: return best;
  }
  return {};
}

void apply_limit(std::vector<std::vector<Cell>>& rows, const std::optional<std::size_t>& limit) {
  if (limit && rows.size() > *limit) rows.resize(*limit);
}

}  // namespace

ResultTable eval_in_memory(const QueryAst& input, const Catalog& catalog) {
  const QueryAst ast = canonicalize(input, catalog);
  const bool qualify = !ast.joins.empty();
  Scope scope;
  std::vector<Tuple> tuples = matching_tuples(ast, catalog, scope);

  ResultTable out;
  for (const auto& p : *ast.projection) out.headers.push_back(qualify ? p.qualified() : p.column);
  for (const auto& ag : ast.aggregates) out.headers.push_back(aggregate_label(ag, qualify));

  if (!ast.is_aggregate()) {
    if (ast.order_by) {
      BoundColumn b = bind(scope, ast.order_by->column);
      bool desc = ast.order_by->descending;
      std::stable_sort(tuples.begin(), tuples.end(), [&](const Tuple& x, const Tuple& y) {
        int c = compare_cells(fetch(scope, x, b), fetch(scope, y, b));
        return desc ? c > 0 : c < 0;
      });
    }
    std::vector<BoundColumn> cols;
    for (const auto& p : *ast.projection) cols.push_back(bind(scope, p));
    for (const auto& t : tuples) {
      std::vector<Cell> row;
      for (auto b : cols) row.push_back(fetch(scope, t, b));
      out.rows.push_back(std::move(row));
      if (ast.limit && out.rows.size() >= *ast.limit) break;
    }
    apply_limit(out.rows, ast.limit);
    return out;
  }

  if (!ast.group_by) {
    std::vector<const Tuple*> all;
    for (const auto& t : tuples) all.push_back(&t);
    std::vector<Cell> row;
    for (const auto& ag : ast.aggregates) row.push_back(aggregate(ag, scope, all));
    out.rows.push_back(std::move(row));
    apply_limit(out.rows, ast.limit);
    return out;
  }

  BoundColumn g = bind(scope, *ast.group_by);
  auto less = [](const Cell& a, const Cell& b) { return compare_cells(a, b) < 0; };
  std::map<Cell, std::vector<const Tuple*>, decltype(less)> groups(less);
  for (const auto& t : tuples) groups[fetch(scope, t, g)].push_back(&t);
  for (const auto& [key, members] : groups) {
    std::vector<Cell> row{key};
    for (const auto& ag : ast.aggregates) row.push_back(aggregate(ag, scope, members));
    out.rows.push_back(std::move(row));
  }
  if (ast.order_by && ast.order_by->descending) std::reverse(out.rows.begin(), out.rows.end());
  apply_limit(out.rows, ast.limit);
  return out;
}

EntitySet ast_to_set(const QueryAst& input, const Catalog& catalog) {
  const QueryAst ast = canonicalize(input, catalog);
  const Table& source = catalog.table(ast.source);
  const ColumnRef id{ast.source, source.identifier_name()};
  if (ast.is_aggregate() || std::find(ast.projection->begin(), ast.projection->end(), id) == ast.projection->end()) {
    throw Error(ErrorCode::MissingIdentifierProjection,
                "query does not project identifier " + id.qualified() + " of its source table");
  }
  Scope scope;
  std::vector<Tuple> tuples = matching_tuples(ast, catalog, scope);
  if (ast.order_by) {
    BoundColumn b = bind(scope, ast.order_by->column);
    bool desc = ast.order_by->descending;
    std::stable_sort(tuples.begin(), tuples.end(), [&](const Tuple& x, const Tuple& y) {
      int c = compare_cells(fetch(scope, x, b), fetch(scope, y, b));
      return desc ? c > 0 : c < 0;
    });
  }
  if (ast.limit && tuples.size() > *ast.limit) tuples.resize(*ast.limit);
  std::vector<RowId> rows;
  for (const auto& t : tuples) rows.push_back(t[0]);
  EntitySet set(ast.source, std::move(rows));
  if (ast.joins.empty() && !ast.limit) set.set_provenance(Provenance{"", ast.filter});
  return set;
}

bool bag_equal(const ResultTable& a, const ResultTable& b, double tolerance) {
  if (a.headers.size() != b.headers.size() || a.rows.size() != b.rows.size()) return false;
  auto sorted = [](const ResultTable& t) {
    std::vector<std::pair<std::string, const std::vector<Cell>*>> v;
    for (const auto& r : t.rows) v.emplace_back(sort_key(r), &r);
    std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    return v;
  };
  auto x = sorted(a);
  auto y = sorted(b);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& r1 = *x[i].second;
    const auto& r2 = *y[i].second;
    if (r1.size() != r2.size()) return false;
    for (std::size_t c = 0; c < r1.size(); ++c) {
      if (!cells_close(r1[c], r2[c], tolerance)) return false;
    }
  }
  return true;
}

}  // namespace xplore
