#include <doctest.h>

#include <fstream>
#include <set>

#include "fixture.hpp"
#include "random_ast.hpp"
#include "xplore/error.hpp"
#include "xplore/explainer.hpp"
#include "xplore/nl_frontend.hpp"

using namespace xplore;
using nlohmann::json;
using xtest::ids;

namespace {

const Dataset& ds() { return *xtest::fixture(); }

std::string explain(const QueryAst& a) { return explain_query(a, ds().graph, ds().templates); }

}  // namespace

TEST_CASE("query explanations") {
  QueryAst fr = full_scan("projects");
  fr.filter = {{{"projects", "country"}, CompareOp::Eq, std::string("FR")}};
  CHECK(explain(fr) == "Find projects whose country is FR.");
  CHECK(explain(full_scan("projects")) == "Find all projects.");

  QueryAst facet;
  facet.source = "projects";
  facet.group_by = ColumnRef{"projects", "country"};
  facet.aggregates = {{AggregateFn::Count, std::nullopt}};
  CHECK(explain(facet) == "Count projects grouped by country.");

  QueryAst two = fr;
  two.filter.push_back({{"projects", "funding"}, CompareOp::Ge, 150.0});
  CHECK(explain(two) == "Find projects whose country is FR and funding is at least 150.");
}

TEST_CASE("relation explanations") {
  const auto& t = ds().templates;
  const auto& g = ds().graph;
  CHECK(explain_relation(ids("projects", {"p1", "p2"}), ids("projects", {"p2", "p3"}), g, t) ==
        "The two sets overlap in 1 item.");
  CHECK(explain_relation(ids("projects", {"p1", "p2", "p3"}), ids("projects", {"p2", "p3", "p4", "p5"}), g, t) ==
        "The two sets overlap in 2 items.");
  auto a = ids("projects", {"p1", "p4"});
  CHECK(explain_relation(a, a, g, t) == "The two sets are identical.");
  CHECK(explain_relation(ids("projects", {"p1"}), a, g, t) == "The first set is contained in the second.");
  CHECK(explain_relation(ids("projects", {"p5"}), a, g, t) == "The two sets are disjoint.");
  const auto cross = explain_relation(ids("projects", {"p1"}), ids("orgs", {"o1"}), g, t);
  CHECK(cross.find("are related through participation.") != std::string::npos);
  CHECK(cross.find("projects") != std::string::npos);
}

TEST_CASE("relation across unconnected tables") {
  Catalog c = ds().catalog;
  GraphConfig cfg = GraphConfig::from_catalog(c);
  cfg.joins.clear();
  auto g = build_schema_graph(c, cfg);
  try {
    explain_relation(ids("projects", {"p1"}), ids("orgs", {"o1"}), g, ds().templates);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoPathBetweenTables);
  }
}

TEST_CASE("templates file equals the built-in defaults") {
  std::ifstream in(std::filesystem::path(XPLORE_SOURCE_DIR) / "data/templates/en.json");
  const auto file = json::parse(in);
  CHECK(file == TemplateSet::defaults().to_json());
  CHECK_NOTHROW(TemplateSet::from_json(file).check_complete());
}

TEST_CASE("incomplete template sets are rejected") {
  json partial = TemplateSet::defaults().to_json();
  partial.erase("group");
  try {
    TemplateSet::from_json(partial).check_complete();
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingTemplate);
  }
  CHECK_NOTHROW(TemplateSet::from_json(partial, true).check_complete());
}

TEST_CASE("explanations only mention what the query binds") {
  xtest::AstGenerator gen(ds(), 41);
  const std::set<std::string> slot_names = {"table", "attribute", "value", "fn"};
  for (int i = 0; i < 300; ++i) {
    auto ast = gen.next();
    std::set<std::string> tables, attrs, values;
    for (const auto& t : ast.tables_in_scope()) {
      tables.insert(ds().graph.display_of(t));
      for (const auto& c : ds().catalog.table(t).columns()) {
        attrs.insert(ds().graph.display_of(t, c.name));
        attrs.insert(ds().graph.display_of(t) + " " + ds().graph.display_of(t, c.name));
      }
    }
    for (const auto& f : ast.filter) {
      values.insert(std::holds_alternative<double>(f.value) ? format_number(std::get<double>(f.value))
                                                             : std::get<std::string>(f.value));
    }
    if (ast.limit) values.insert(std::to_string(*ast.limit));
    auto e = explain_query_detailed(ast, ds().graph, ds().templates);
    CHECK(e.text == explain(ast));
    CHECK(!e.text.empty());
    for (const auto& [slot, fill] : e.slots) {
      INFO(e.text << " slot " << slot << "=" << fill);
      CHECK(slot_names.count(slot) == 1);
      CHECK(e.text.find(fill) != std::string::npos);
      if (slot == "table") CHECK(tables.count(fill) == 1);
      if (slot == "attribute") {
        // A list of attributes, joined with " and ".
        std::size_t from = 0;
        while (true) {
          const auto at = fill.find(" and ", from);
          CHECK(attrs.count(fill.substr(from, at == std::string::npos ? std::string::npos : at - from)) == 1);
          if (at == std::string::npos) break;
          from = at + 5;
        }
      }
      if (slot == "value") CHECK(values.count(fill) == 1);
    }
  }
}

TEST_CASE("corpus explanations name every bound node") {
  std::ifstream in(xtest::fixture_dir() / "nl_corpus.txt");
  for (std::string q; std::getline(in, q);) {
    if (q.empty()) continue;
    for (const auto& i : interpret(q, ds().graph, ds().catalog, 3, ds().nl)) {
      const auto text = explain(i.ast);
      for (const auto& b : i.bindings) {
        const auto& label = b.column.empty() ? ds().graph.display_of(b.table) : ds().graph.display_of(b.table, b.column);
        INFO(q << " -> " << text);
        CHECK(text.find(label) != std::string::npos);
      }
    }
  }
}
