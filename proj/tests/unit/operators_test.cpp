#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "fixture.hpp"
#include "oracles.hpp"
#include "xplore/error.hpp"
#include "xplore/operators.hpp"

using namespace xplore;
using xtest::ids;
using xtest::names;

namespace {

const Catalog& cat() { return xtest::fixture()->catalog; }
EntitySet all(const std::string& t) { return EntitySet::full(cat().table(t)); }

Comparison cmp(const std::string& attr, CompareOp op, Literal v) { return {{"projects", attr}, op, std::move(v)}; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

std::uint32_t mask(const EntitySet& s) {
  std::uint32_t m = 0;
  for (auto r : s.rows()) m |= 1u << r;
  return m;
}

}  // namespace

TEST_CASE("by_filter examples") {
  CHECK(names(by_filter(all("projects"), cmp("country", CompareOp::Eq, std::string("FR")), cat())) ==
        std::vector<std::string>{"p1", "p2", "p6"});
  CHECK(by_filter(all("projects"), cmp("funding", CompareOp::Lt, 0.0), cat()).empty());
  CHECK(by_filter(EntitySet("projects", {}), cmp("country", CompareOp::Eq, std::string("FR")), cat()).empty());
  CHECK(names(by_filter(all("projects"), cmp("title", CompareOp::Contains, std::string("Robot")), cat())) ==
        std::vector<std::string>{"p2"});
  CHECK(names(by_filter(all("projects"), cmp("year", CompareOp::Ge, 2020.0), cat())) ==
        std::vector<std::string>{"p4", "p5", "p6"});
}

TEST_CASE("by_filter errors") {
  CHECK(code_of([] { by_filter(all("projects"), cmp("nope", CompareOp::Eq, 1.0), cat()); }) ==
        ErrorCode::UnknownAttribute);
  CHECK(code_of([] { by_filter(all("projects"), cmp("funding", CompareOp::Eq, std::string("x")), cat()); }) ==
        ErrorCode::TypeMismatch);
  CHECK(code_of([] { by_filter(all("projects"), cmp("funding", CompareOp::Contains, std::string("1")), cat()); }) ==
        ErrorCode::TypeMismatch);
}

TEST_CASE("by_filter output is within the input and idempotent") {
  std::mt19937_64 rng(21);
  const CompareOp ops[] = {CompareOp::Eq, CompareOp::Ne, CompareOp::Lt, CompareOp::Le, CompareOp::Gt, CompareOp::Ge};
  for (int i = 0; i < 300; ++i) {
    auto in = xtest::random_subset(cat().table("projects"), rng);
    auto pred = cmp("funding", ops[rng() % 6], static_cast<double>(100 + rng() % 220));
    auto out = by_filter(in, pred, cat());
    if (!in.empty()) {
      auto rel = rcc_relation(out, in);
      CHECK((rel == RccRelation::PP || rel == RccRelation::EQ || out.empty()));
    }
    CHECK(by_filter(out, pred, cat()).same_members(out));
    // direct scan
    std::vector<RowId> expect;
    for (RowId r : in.rows()) {
      if (evaluate(cat().table("projects").cell(r, 3), pred.op, pred.value)) expect.push_back(r);
    }
    CHECK(out.rows() == expect);
  }
}

TEST_CASE("by_facet over all projects by country") {
  auto f = by_facet(all("projects"), "country", cat());
  REQUIRE(f.buckets.size() == 3);
  CHECK(render_cell(f.buckets[0].value) == "CH");
  CHECK(names(f.buckets[0].members) == std::vector<std::string>{"p5"});
  CHECK(f.buckets[0].count == 1);
  CHECK(render_cell(f.buckets[1].value) == "DE");
  CHECK(names(f.buckets[1].members) == std::vector<std::string>{"p3", "p4"});
  CHECK(render_cell(f.buckets[2].value) == "FR");
  CHECK(names(f.buckets[2].members) == std::vector<std::string>{"p1", "p2", "p6"});
  CHECK(f.buckets[2].count == 3);
}

TEST_CASE("by_facet singleton and missing bucket") {
  auto f = by_facet(ids("projects", {"p3"}), "country", cat());
  REQUIRE(f.buckets.size() == 1);
  CHECK(f.buckets[0].count == 1);

  Catalog c = cat();
  c.mutable_table("projects").set_cell(0, 2, std::monostate{});
  auto g = by_facet(EntitySet::full(c.table("projects")), "country", c);
  REQUIRE(g.buckets.size() == 4);
  CHECK(is_missing(g.buckets.back().value));
  CHECK(g.buckets.back().count == 1);
}

TEST_CASE("by_facet rejects text and unknown attributes") {
  CHECK(code_of([] { by_facet(all("projects"), "title", cat()); }) == ErrorCode::NonCategoricalAttribute);
  CHECK(code_of([] { by_facet(all("projects"), "nope", cat()); }) == ErrorCode::UnknownAttribute);
}

TEST_CASE("by_facet partitions random subsets") {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 100; ++i) {
    for (const auto& t : cat().tables()) {
      auto in = xtest::random_subset(t, rng);
      for (const auto& c : t.columns()) {
        if (c.kind != ColumnKind::Categorical) continue;
        auto f = by_facet(in, c.name, cat());
        EntitySet u(t.name(), {});
        for (std::size_t a = 0; a < f.buckets.size(); ++a) {
          CHECK(f.buckets[a].count == f.buckets[a].members.size());
          CHECK(!f.buckets[a].members.empty());
          for (std::size_t b = a + 1; b < f.buckets.size(); ++b) {
            CHECK(rcc_relation(f.buckets[a].members, f.buckets[b].members) == RccRelation::DR);
            CHECK(compare_cells(f.buckets[a].value, f.buckets[b].value) < 0);
          }
          u = set_algebra(u, f.buckets[a].members, SetOp::Union);
        }
        CHECK(rcc_relation(u, in) == RccRelation::EQ);
      }
    }
  }
}

TEST_CASE("by_example nearest to p1 on funding is p6") {
  SimilaritySpec spec;
  spec.features = {"funding"};
  spec.k = 1;
  auto r = by_example(ids("projects", {"p1"}), spec, cat());
  REQUIRE(r.size() == 1);
  CHECK(cat().table("projects").identifier_of(r[0].row) == "p6");
}

TEST_CASE("by_example pool edge cases") {
  SimilaritySpec spec;
  spec.features = {"funding"};
  spec.k = 3;
  CHECK(by_example(all("projects"), spec, cat()).empty());
  spec.k = 50;
  CHECK(by_example(ids("projects", {"p1"}), spec, cat()).size() == 5);
  CHECK(code_of([&] { by_example(EntitySet("projects", {}), spec, cat()); }) == ErrorCode::EmptyExamples);
  spec.features = {"title"};
  CHECK(code_of([&] { by_example(ids("projects", {"p1"}), spec, cat()); }) == ErrorCode::NoNumericFeatures);
  spec.features = {};
  spec.metric = Metric::Semantic;
  CHECK(code_of([&] { by_example(ids("projects", {"p1"}), spec, cat()); }) == ErrorCode::MissingTaxonomy);
}

TEST_CASE("by_example matches a brute-force z-scored distance") {
  const Table& t = cat().table("projects");
  const std::vector<std::size_t> cols = {t.column_index("funding"), t.column_index("year")};
  std::vector<double> mean(2), sd(2);
  for (int i = 0; i < 2; ++i) {
    double s = 0;
    for (RowId r = 0; r < 6; ++r) s += std::get<double>(t.cell(r, cols[i]));
    mean[i] = s / 6;
    double v = 0;
    for (RowId r = 0; r < 6; ++r) v += std::pow(std::get<double>(t.cell(r, cols[i])) - mean[i], 2);
    sd[i] = std::sqrt(v / 6);
  }
  auto zrow = [&](RowId r) {
    return std::vector<double>{(std::get<double>(t.cell(r, cols[0])) - mean[0]) / sd[0],
                               (std::get<double>(t.cell(r, cols[1])) - mean[1]) / sd[1]};
  };
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    auto ex = xtest::random_subset(t, rng);
    if (ex.empty() || ex.size() == t.row_count()) continue;
    std::vector<double> c(2, 0);
    for (RowId r : ex.rows()) {
      auto z = zrow(r);
      c[0] += z[0] / static_cast<double>(ex.size());
      c[1] += z[1] / static_cast<double>(ex.size());
    }
    for (Metric m : {Metric::Euclidean, Metric::Manhattan, Metric::Cosine}) {
      std::vector<std::pair<double, RowId>> expect;
      for (RowId r = 0; r < 6; ++r) {
        if (ex.contains(r)) continue;
        auto z = zrow(r);
        double d;
        if (m == Metric::Euclidean) {
          d = std::hypot(z[0] - c[0], z[1] - c[1]);
        } else if (m == Metric::Manhattan) {
          d = std::abs(z[0] - c[0]) + std::abs(z[1] - c[1]);
        } else {
          const double dot = z[0] * c[0] + z[1] * c[1];
          const double n = std::hypot(z[0], z[1]) * std::hypot(c[0], c[1]);
          d = n == 0 ? 1.0 : 1.0 - dot / n;
        }
        expect.push_back({d, r});
      }
      SimilaritySpec spec;
      spec.features = {"funding", "year"};
      spec.metric = m;
      spec.k = expect.size();
      auto got = by_example(ex, spec, cat());
      REQUIRE(got.size() == expect.size());
      auto sorted = expect;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].distance == doctest::Approx(sorted[i].first).epsilon(1e-9));
        if (i + 1 < got.size()) CHECK(got[i].distance <= got[i + 1].distance);
      }
      // prefix property
      for (std::size_t k = 1; k < got.size(); ++k) {
        spec.k = k;
        auto shorter = by_example(ex, spec, cat());
        CHECK(std::equal(shorter.begin(), shorter.end(), got.begin()));
      }
    }
  }
}

TEST_CASE("semantic by_example uses tree path length") {
  const auto* tax = xtest::fixture()->find_taxonomy("field");
  REQUIRE(tax != nullptr);
  SimilaritySpec spec;
  spec.metric = Metric::Semantic;
  spec.taxonomy = tax;
  spec.k = 10;
  // p3 is energy; p6 shares the node, p2/p5 are siblings under engineering.
  auto r = by_example(ids("projects", {"p3"}), spec, cat());
  REQUIRE(r.size() == 5);
  CHECK(cat().table("projects").identifier_of(r[0].row) == "p6");
  CHECK(r[0].distance == 0.0);
  CHECK(r[1].distance == 2.0);
  CHECK(r[2].distance == 2.0);
  CHECK(r[1].row < r[2].row);
  CHECK(r[3].distance == 4.0);
}

TEST_CASE("by_overlap delegates to the index") {
  OverlapIndex idx;
  idx.register_set(ids("projects", {"p1", "p2", "p6"}));
  idx.register_set(ids("projects", {"p2", "p3"}));
  idx.register_set(ids("projects", {"p5"}));
  auto hits = by_overlap(ids("projects", {"p1", "p2", "p6"}), idx, 1);
  REQUIRE(hits.size() == 1);
  CHECK(names(hits[0].set) == std::vector<std::string>{"p2", "p3"});
  CHECK(hits[0].overlap == 1);
  CHECK(by_overlap(ids("projects", {"p5"}), idx, 2).empty());

  const auto before = idx.size();
  auto fresh = by_overlap(ids("projects", {"p3", "p4"}), idx, 1);
  CHECK(idx.size() == before + 1);
  REQUIRE(fresh.size() == 1);
  CHECK(names(fresh[0].set) == std::vector<std::string>{"p2", "p3"});
}

TEST_CASE("by_join walks participation to orgs") {
  const auto& g = xtest::fixture()->graph;
  std::vector<JoinHop> path = {{"projects", "participation"}, {"participation", "orgs"}};
  CHECK(names(by_join(ids("projects", {"p1"}), path, g, cat())) == std::vector<std::string>{"o1", "o4"});
  CHECK(names(by_join(ids("projects", {"p4", "p5"}), path, g, cat())) == std::vector<std::string>{"o2", "o3"});
  CHECK(by_join(EntitySet("projects", {}), path, g, cat()).empty());
  std::vector<JoinHop> broken = {{"projects", "orgs"}};
  CHECK(code_of([&] { by_join(ids("projects", {"p1"}), broken, g, cat()); }) == ErrorCode::BrokenJoinPath);
  std::vector<JoinHop> detached = {{"participation", "orgs"}};
  CHECK(code_of([&] { by_join(ids("projects", {"p1"}), detached, g, cat()); }) == ErrorCode::BrokenJoinPath);
}

TEST_CASE("by_join equals a nested-loop walk on random subsets") {
  const auto& g = xtest::fixture()->graph;
  std::vector<JoinHop> path = {{"projects", "participation"}, {"participation", "orgs"}};
  const Table& pr = cat().table("projects");
  const Table& pa = cat().table("participation");
  std::mt19937_64 rng(24);
  for (int i = 0; i < 100; ++i) {
    auto in = xtest::random_subset(pr, rng);
    std::set<std::string> expect;
    for (RowId p : in.rows()) {
      for (RowId q = 0; q < pa.row_count(); ++q) {
        if (std::get<std::string>(pa.cell(q, 1)) == pr.identifier_of(p)) expect.insert(std::get<std::string>(pa.cell(q, 2)));
      }
    }
    auto got = names(by_join(in, path, g, cat()));
    CHECK(std::set<std::string>(got.begin(), got.end()) == expect);
  }
}

TEST_CASE("by_superset worked example and edge cases") {
  auto target = ids("projects", {"p1", "p2", "p3"});
  std::vector<EntitySet> cands = {ids("projects", {"p1", "p2"}), ids("projects", {"p2", "p3"}), ids("projects", {"p3"})};
  auto r = by_superset(target, cands);
  CHECK(r.cover == std::vector<std::size_t>{0, 1});
  CHECK(r.uncovered.empty());

  std::vector<EntitySet> one = {ids("projects", {"p4"}), ids("projects", {"p1", "p2", "p3", "p4"})};
  CHECK(by_superset(target, one).cover == std::vector<std::size_t>{1});

  std::vector<EntitySet> none = {ids("projects", {"p4"}), ids("projects", {"p5"})};
  auto z = by_superset(target, none);
  CHECK(z.cover.empty());
  CHECK(z.uncovered.same_members(target));

  std::vector<EntitySet> mixed = {ids("orgs", {"o1"})};
  CHECK(code_of([&] { by_superset(target, mixed); }) == ErrorCode::BaseTableMismatch);
}

TEST_CASE("greedy cover stays within the logarithmic bound") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    std::vector<EntitySet> cands;
    std::vector<std::uint32_t> masks;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<RowId> rows;
      for (RowId r = 0; r < 16; ++r) {
        if (rng() % 4 == 0) rows.push_back(r);
      }
      cands.emplace_back("u", rows);
      masks.push_back(mask(cands.back()));
    }
    std::vector<RowId> t;
    for (RowId r = 0; r < 16; ++r) {
      if (rng() % 2) t.push_back(r);
    }
    EntitySet target("u", t);
    auto r = by_superset(target, cands);
    const auto opt = oracle::min_cover(masks, mask(target));
    CHECK(static_cast<double>(r.cover.size()) <= (1 + std::log(16.0)) * static_cast<double>(opt) + 1e-9);
    std::uint32_t covered = 0;
    for (auto i : r.cover) covered |= masks[i];
    CHECK((mask(r.uncovered) & covered) == 0);
    CHECK(((covered & mask(target)) | mask(r.uncovered)) == mask(target));
  }
}

TEST_CASE("by_analytics examples") {
  auto fr = ids("projects", {"p1", "p2", "p6"});
  auto de = ids("projects", {"p3", "p4"});
  std::vector<EntitySet> cands = {de, fr};
  auto sim = by_analytics(fr, "country", cands, AnalyticsMode::Similar, cat());
  REQUIRE(sim.size() == 2);
  CHECK(sim[0].candidate == 1);
  CHECK(sim[0].divergence == 0.0);
  CHECK(sim[1].divergence == doctest::Approx(1.0));
  auto dis = by_analytics(fr, "country", cands, AnalyticsMode::Dissimilar, cat());
  CHECK(dis[0].candidate == 0);
  CHECK(dis[1].candidate == 1);
}

TEST_CASE("by_analytics on numeric attributes and empty distributions") {
  Catalog c = cat();
  for (RowId r = 0; r < 6; ++r) c.mutable_table("projects").set_cell(r, 3, std::monostate{});
  std::vector<EntitySet> cands = {ids("projects", {"p1"})};
  CHECK(code_of([&] { by_analytics(ids("projects", {"p1"}), "funding", cands, AnalyticsMode::Similar, c); }) ==
        ErrorCode::EmptyDistribution);
  auto d = value_distribution(ids("projects", {"p1", "p4"}), "funding", cat());
  REQUIRE(d.size() == kHistogramBins);
  CHECK(d.front() == doctest::Approx(0.5));
  CHECK(d.back() == doctest::Approx(0.5));
}

TEST_CASE("total variation is symmetric and zero only on equal vectors") {
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> p(5), q(5);
    double sp = 0, sq = 0;
    for (int k = 0; k < 5; ++k) {
      p[k] = u(rng);
      q[k] = rng() % 3 == 0 ? p[k] : u(rng);
      sp += p[k];
      sq += q[k];
    }
    for (int k = 0; k < 5; ++k) {
      p[k] /= sp;
      q[k] /= sq;
    }
    const double a = total_variation(p, q);
    CHECK(a == total_variation(q, p));
    CHECK(a >= 0.0);
    CHECK(a <= 1.0 + 1e-12);
    double l1 = 0;
    for (int k = 0; k < 5; ++k) l1 += std::abs(p[k] - q[k]);
    CHECK(a == doctest::Approx(l1 / 2));
    CHECK(total_variation(p, p) == 0.0);
  }
}
