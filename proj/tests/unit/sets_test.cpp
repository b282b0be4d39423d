#include <doctest.h>

#include <random>

#include "fixture.hpp"
#include "oracles.hpp"
#include "xplore/error.hpp"
#include "xplore/overlap_index.hpp"

using namespace xplore;
using xtest::ids;
using xtest::names;

namespace {

oracle::Ids plain(const EntitySet& s) { return {s.rows().begin(), s.rows().end()}; }

EntitySet random_set(std::mt19937_64& rng, std::size_t universe) {
  std::vector<RowId> rows;
  const std::size_t n = rng() % (universe + 1);
  for (std::size_t i = 0; i < n; ++i) rows.push_back(static_cast<RowId>(rng() % universe));
  return EntitySet("t", rows);
}

}  // namespace

TEST_CASE("entity sets are sorted and deduplicated") {
  EntitySet s("t", {5, 1, 3, 1, 5});
  CHECK(s.rows() == std::vector<RowId>{1, 3, 5});
}

TEST_CASE("set algebra on fixture ids") {
  auto a = ids("projects", {"p1", "p2"});
  auto b = ids("projects", {"p2", "p3"});
  CHECK(names(set_algebra(a, b, SetOp::Intersect)) == std::vector<std::string>{"p2"});
  CHECK(names(set_algebra(a, b, SetOp::Union)) == std::vector<std::string>{"p1", "p2", "p3"});
  CHECK(names(set_algebra(a, b, SetOp::Difference)) == std::vector<std::string>{"p1"});
  EntitySet empty("projects", {});
  CHECK(set_algebra(a, empty, SetOp::Union).same_members(a));
}

TEST_CASE("set algebra across base tables is rejected") {
  auto a = ids("projects", {"p1"});
  auto b = ids("orgs", {"o1"});
  CHECK_THROWS_AS(set_algebra(a, b, SetOp::Union), Error);
  try {
    rcc_relation(a, b);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BaseTableMismatch);
  }
}

TEST_CASE("unknown identifiers are rejected") {
  CHECK_THROWS_AS(ids("projects", {"p99"}), Error);
}

TEST_CASE("rcc examples") {
  CHECK(rcc_relation(ids("projects", {"p1"}), ids("projects", {"p1"})) == RccRelation::EQ);
  CHECK(rcc_relation(ids("projects", {"p1"}), ids("projects", {"p2"})) == RccRelation::DR);
  CHECK(rcc_relation(ids("projects", {"p1"}), ids("projects", {"p1", "p2"})) == RccRelation::PP);
  CHECK(rcc_relation(ids("projects", {"p1", "p2"}), ids("projects", {"p1"})) == RccRelation::PPi);
  CHECK(rcc_relation(ids("projects", {"p1", "p2"}), ids("projects", {"p2", "p3"})) == RccRelation::PO);
  CHECK(rcc_relation(EntitySet("projects", {}), ids("projects", {"p1"})) == RccRelation::DR);
}

TEST_CASE("jaccard examples") {
  auto a = ids("projects", {"p1", "p2"});
  CHECK(jaccard(a, ids("projects", {"p2", "p3"})) == doctest::Approx(1.0 / 3));
  CHECK(jaccard(a, a) == 1.0);
  CHECK(jaccard(a, ids("projects", {"p5"})) == 0.0);
  try {
    jaccard(EntitySet("projects", {}), EntitySet("projects", {}));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BothEmpty);
  }
}

TEST_CASE("rcc agrees with a cardinality classifier on random sets") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    auto a = random_set(rng, 64);
    auto b = random_set(rng, 64);
    CHECK(rcc_name(rcc_relation(a, b)) == oracle::rcc(plain(a), plain(b)));
  }
}

TEST_CASE("jaccard is symmetric and tracks EQ and DR") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    auto a = random_set(rng, 16);
    auto b = random_set(rng, 16);
    if (a.empty() || b.empty()) continue;
    const double j = jaccard(a, b);
    CHECK(j == jaccard(b, a));
    CHECK(j == doctest::Approx(oracle::jaccard(plain(a), plain(b))));
    CHECK((j == 1.0) == (rcc_relation(a, b) == RccRelation::EQ));
    CHECK((j == 0.0) == (rcc_relation(a, b) == RccRelation::DR));
  }
}

TEST_CASE("overlap index example") {
  OverlapIndex idx;
  auto s1 = idx.register_set(ids("projects", {"p1", "p2", "p6"}));
  auto s2 = idx.register_set(ids("projects", {"p2", "p3"}));
  auto s3 = idx.register_set(ids("projects", {"p5"}));
  CHECK(idx.query_overlaps(s1, 1) == std::vector<OverlapHit>{{s2, 1}});
  CHECK(idx.query_overlaps(s3, 1).empty());
  CHECK(idx.overlap(s1, s2) == 1);
  CHECK(idx.overlap(s1, s1) == 3);
  CHECK(idx.find(ids("projects", {"p2", "p3"})) == s2);
  CHECK_THROWS_AS(idx.query_overlaps(42, 1), Error);
}

TEST_CASE("overlap index matches recomputation after random registrations") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    OverlapIndex idx;
    std::vector<SetId> reg;
    std::vector<oracle::Ids> direct;
    const std::size_t n = 1 + rng() % 50;
    for (std::size_t i = 0; i < n; ++i) {
      auto s = random_set(rng, 40);
      reg.push_back(idx.register_set(s));
      direct.push_back(plain(s));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(idx.overlap(reg[i], reg[j]) == oracle::inter(direct[i], direct[j]));
        CHECK(idx.overlap(reg[i], reg[j]) == idx.overlap(reg[j], reg[i]));
      }
    }
  }
}

TEST_CASE("sets over different tables never overlap in the index") {
  OverlapIndex idx;
  auto a = idx.register_set(ids("projects", {"p1"}));
  auto b = idx.register_set(ids("orgs", {"o1"}));
  CHECK(idx.overlap(a, b) == 0);
  CHECK(idx.query_overlaps(a, 1).empty());
}
