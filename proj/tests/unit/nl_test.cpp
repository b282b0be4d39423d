#include <doctest.h>

#include <fstream>

#include "fixture.hpp"
#include "xplore/error.hpp"
#include "xplore/nl_frontend.hpp"
#include "xplore/sql_compiler.hpp"
#include "xplore/text.hpp"

using namespace xplore;

namespace {

const Dataset& ds() { return *xtest::fixture(); }

std::vector<Interpretation> run(const std::string& q, std::size_t n = 5) {
  return interpret(q, ds().graph, ds().catalog, n, ds().nl);
}

std::vector<std::string> corpus() {
  std::ifstream in(xtest::fixture_dir() / "nl_corpus.txt");
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// Suffix rules tried in order; the first whose result keeps three letters wins.
std::string stem_oracle(const std::string& w) {
  const std::pair<std::string, std::string> rules[] = {{"ies", "y"}, {"es", ""}, {"s", ""}, {"ing", ""}, {"ed", ""}};
  for (const auto& [suf, rep] : rules) {
    if (w.size() >= suf.size() && w.compare(w.size() - suf.size(), suf.size(), suf) == 0) {
      std::string s = w.substr(0, w.size() - suf.size()) + rep;
      if (s.size() >= 3) return s;
    }
  }
  return w;
}

}  // namespace

TEST_CASE("normalize examples") {
  auto t = normalize("Find all projects", ds().nl);
  std::vector<std::string> stems;
  for (const auto& tok : t) stems.push_back(tok.stem);
  CHECK(stems == std::vector<std::string>{"find", "all", "project"});
  CHECK(normalize("countries", ds().nl)[0].stem == "country");
  CHECK(normalize("", ds().nl).empty());
  CHECK(normalize("  ,;  ", ds().nl).empty());
  auto p = normalize("Projects, from FRANCE!", ds().nl);
  REQUIRE(p.size() == 3);
  CHECK(p[0].normalized == "projects");
  CHECK(p[2].normalized == "france");
  CHECK(p[1].stopword);
}

TEST_CASE("stemmer follows the rule table") {
  for (const char* w : {"projects", "countries", "boxes", "uses", "yes", "running", "funded", "is", "cities", "ties",
                        "trees", "sing", "bed", "class", "analytics", "organizations"}) {
    CHECK(text::stem(w) == stem_oracle(w));
  }
  CHECK(text::stem("uses") == "use");
  CHECK(text::stem("ties") == "tie");
}

TEST_CASE("match_terms examples") {
  auto m = match_terms(normalize("project france zzz", ds().nl), ds().graph, ds().catalog);
  bool project_table = false, france_value = false;
  for (const auto& span : m.spans) {
    for (const auto& b : span.options) {
      if (b.kind == BindingKind::Table && b.table == "projects" && span.begin == 0) project_table = true;
      if (b.kind == BindingKind::Value && b.table == "projects" && b.column == "country" && b.filter &&
          std::get<std::string>(b.filter->value) == "FR") {
        france_value = true;
      }
    }
  }
  CHECK(project_table);
  CHECK(france_value);
  CHECK(m.unmatched == std::vector<std::size_t>{2});
}

TEST_CASE("interpret examples") {
  auto all = run("Find all projects");
  REQUIRE(!all.empty());
  CHECK(all[0].ast == full_scan("projects"));
  CHECK(compile_to_sql(all[0].ast, ds().catalog) == "SELECT id, title, country, funding, year FROM projects");

  auto fr = run("show projects from France");
  REQUIRE(!fr.empty());
  REQUIRE(fr[0].ast.filter.size() == 1);
  CHECK(fr[0].ast.filter[0].column == ColumnRef{"projects", "country"});
  CHECK(std::get<std::string>(fr[0].ast.filter[0].value) == "FR");
  CHECK(fr.size() >= 2);

  try {
    run("purple elephant tango");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoInterpretation);
  }
  CHECK_THROWS_AS(run("Find all projects", 0), Error);
}

TEST_CASE("grouping and aggregates") {
  auto c = run("count projects by country");
  REQUIRE(!c.empty());
  CHECK(c[0].ast.group_by == ColumnRef{"projects", "country"});
  CHECK(c[0].ast.aggregates == std::vector<Aggregate>{{AggregateFn::Count, std::nullopt}});

  auto s = run("total budget of projects per nation");
  REQUIRE(!s.empty());
  CHECK(s[0].ast.group_by == ColumnRef{"projects", "country"});
  CHECK(s[0].ast.aggregates == std::vector<Aggregate>{{AggregateFn::Sum, ColumnRef{"projects", "funding"}}});

  auto g = run("projects with funding over 150");
  REQUIRE(!g.empty());
  REQUIRE(g[0].ast.filter.size() == 1);
  CHECK(g[0].ast.filter[0].op == CompareOp::Gt);
  CHECK(std::get<double>(g[0].ast.filter[0].value) == 150.0);
}

TEST_CASE("corpus is deterministic, sound and ranked") {
  const auto qs = corpus();
  REQUIRE(qs.size() == 20);
  for (const auto& q : qs) {
    INFO(q);
    auto a = run(q);
    auto b = run(q);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].ast == b[i].ast);
      CHECK(a[i].score == b[i].score);
      CHECK_NOTHROW(compile_to_sql(a[i].ast, ds().catalog));
      CHECK(!a[i].bindings.empty());
      CHECK(a[i].score >= 0.0);
      CHECK(a[i].score <= 1.0);
      if (i + 1 < a.size()) {
        CHECK(a[i].score >= a[i + 1].score);
        if (a[i].score == a[i + 1].score) CHECK(canonical_string(a[i].ast) < canonical_string(a[i + 1].ast));
        CHECK(!(a[i].ast == a[i + 1].ast));
      }
    }
  }
}

TEST_CASE("scores follow the weighting formula") {
  for (const auto& q : corpus()) {
    INFO(q);
    const auto toks = normalize(q, ds().nl);
    std::size_t content = 0;
    for (const auto& t : toks) content += !t.stopword;
    for (const auto& i : run(q)) {
      const double matched = static_cast<double>(content - i.unmatched.size()) / static_cast<double>(content);
      CHECK(i.score ==
            doctest::Approx(0.7 * matched + 0.3 / (1.0 + static_cast<double>(i.ast.joins.size()))).epsilon(1e-12));
      CHECK(i.join_edges == i.ast.joins.size());
    }
  }
}

TEST_CASE("binding terms are vocabulary entries") {
  for (const auto& q : corpus()) {
    for (const auto& i : run(q)) {
      for (const auto& b : i.bindings) {
        INFO(q << " / " << b.term);
        if (b.kind == BindingKind::Value) {
          CHECK(ds().graph.lookup_value(b.term) != nullptr);
        } else {
          CHECK(ds().graph.lookup(b.term) != nullptr);
        }
      }
    }
  }
}

TEST_CASE("an extra unmatched token never raises a score") {
  for (const auto& q : corpus()) {
    INFO(q);
    auto base = run(q, 10);
    auto noisy = run(q + " qqzx", 10);
    const double top = base.front().score;
    for (const auto& i : noisy) {
      CHECK(i.score <= top + 1e-12);
      for (const auto& j : base) {
        if (j.ast == i.ast) CHECK(i.score <= j.score + 1e-12);
      }
    }
  }
}
