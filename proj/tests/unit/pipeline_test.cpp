#include <doctest.h>

#include <filesystem>
#include <random>

#include "fixture.hpp"
#include "oracles.hpp"
#include "xplore/error.hpp"
#include "xplore/pipeline.hpp"
#include "xplore/session.hpp"
#include "xplore/session_log.hpp"

using namespace xplore;
using nlohmann::json;
using xtest::ids;
using xtest::names;

namespace {

const Dataset& ds() { return *xtest::fixture(); }

Dep fixture_dep() { return read_dep(xtest::fixture_dir() / "fixture_dep.json"); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

SessionLog interactions(std::size_t n) {
  SessionLog log;
  log.session_id = "x";
  for (std::size_t i = 0; i < n; ++i) {
    Event e;
    e.timestamp_ms = static_cast<std::int64_t>(i);
    e.kind = i % 2 ? EventKind::Backtrack : EventKind::OperatorApplied;
    log.events.push_back(e);
  }
  return log;
}

}  // namespace

TEST_CASE("fixture dep yields the French year buckets") {
  auto run = run_dep(fixture_dep(), ds());
  REQUIRE(!run.failure);
  REQUIRE(run.outputs.size() == 3);
  CHECK(run.outputs[0].set->size() == 6);
  CHECK(names(*run.outputs[1].set) == std::vector<std::string>{"p1", "p2", "p6"});
  const auto& f = *run.outputs[2].facets;
  REQUIRE(f.buckets.size() == 3);
  CHECK(render_cell(f.buckets[0].value) == "2018");
  CHECK(names(f.buckets[0].members) == std::vector<std::string>{"p1"});
  CHECK(render_cell(f.buckets[1].value) == "2019");
  CHECK(names(f.buckets[1].members) == std::vector<std::string>{"p2"});
  CHECK(render_cell(f.buckets[2].value) == "2021");
  CHECK(names(f.buckets[2].members) == std::vector<std::string>{"p6"});
  CHECK(run.metrics.step_count == 3);
  CHECK(run.metrics.steps[2].result_size == 3);
}

TEST_CASE("empty dep and unknown operators") {
  auto empty = run_dep(Dep{}, ds());
  CHECK(empty.outputs.empty());
  CHECK(empty.metrics.total_latency_ms == 0.0);
  CHECK(empty.metrics.step_count == 0);

  Dep bad = fixture_dep();
  bad.steps[1].op = "by_magic";
  auto run = run_dep(bad, ds());
  REQUIRE(run.failure);
  CHECK(run.failure->step_id == "s2");
  CHECK(run.failure->code == ErrorCode::UnknownOperator);
  CHECK(run.outputs.size() == 1);
  try {
    run.throw_if_failed();
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StepFailure);
    CHECK(e.location() == std::optional<std::string>("s2"));
  }
}

TEST_CASE("dep file round trip and schema errors") {
  const Dep d = fixture_dep();
  const auto path = std::filesystem::temp_directory_path() / "xplore_roundtrip_dep.json";
  write_dep(d, path);
  CHECK(read_dep(path) == d);
  std::filesystem::remove(path);
  CHECK(Dep::from_json(d.to_json()) == d);

  json v99 = d.to_json();
  v99["version"] = "v99";
  CHECK(code_of([&] { Dep::from_json(v99); }) == ErrorCode::UnknownVersion);
  json noop = d.to_json();
  noop["steps"][1].erase("op");
  CHECK(code_of([&] { Dep::from_json(noop); }) == ErrorCode::SchemaViolation);
  json dup = d.to_json();
  dup["steps"][2]["id"] = "s1";
  CHECK(code_of([&] { Dep::from_json(dup); }) == ErrorCode::SchemaViolation);
  json fwd = d.to_json();
  fwd["steps"][1]["inputs"] = {"s3"};
  CHECK(code_of([&] { Dep::from_json(fwd); }) == ErrorCode::SchemaViolation);
  CHECK(code_of([&] { read_dep("/nonexistent/dep.json"); }) == ErrorCode::IoError);
}

TEST_CASE("every registered operator runs from a dep") {
  json j = {{"version", "1"},
            {"steps",
             {{{"id", "all"}, {"op", "scan"}, {"params", {{"table", "projects"}}}, {"inputs", {"catalog"}}},
              {{"id", "fr"}, {"op", "by_filter"}, {"params", {{"attribute", "country"}, {"op", "="}, {"value", "FR"}}},
               {"inputs", {"all"}}},
              {{"id", "q"},
               {"op", "query"},
               {"params", {{"ast", full_scan("projects").to_json()}}},
               {"inputs", {"catalog"}}},
              {{"id", "two"}, {"op", "set"}, {"params", {{"set", {{"base_table", "projects"}, {"ids", {"p2", "p3"}}}}}}},
              {{"id", "both"}, {"op", "set_algebra"}, {"params", {{"op", "intersect"}}}, {"inputs", {"fr", "two"}}},
              {{"id", "fc"}, {"op", "by_facet"}, {"params", {{"attribute", "country"}}}, {"inputs", {"all"}}},
              {{"id", "near"},
               {"op", "by_example"},
               {"params", {{"features", {"funding"}}, {"k", 2}}},
               {"inputs", {"fr"}}},
              {{"id", "sem"},
               {"op", "by_example"},
               {"params", {{"metric", "semantic"}, {"taxonomy", "field"}, {"k", 2}}},
               {"inputs", {"two"}}},
              {{"id", "ov"}, {"op", "by_overlap"}, {"params", {{"min_overlap", 1}}}, {"inputs", {"fr"}}},
              {{"id", "orgs"}, {"op", "by_join"}, {"params", {{"to", "orgs"}}}, {"inputs", {"fr"}}},
              {{"id", "cov"}, {"op", "by_superset"}, {"inputs", {"all", "fr", "two", "fc:DE", "fc:CH"}}},
              {{"id", "an"},
               {"op", "by_analytics"},
               {"params", {{"attribute", "country"}, {"mode", "dissimilar"}}},
               {"inputs", {"fr", "two", "fc:DE", "all"}}}}}};
  auto run = run_dep(Dep::from_json(j), ds());
  INFO((run.failure ? run.failure->message : std::string()));
  REQUIRE(!run.failure);
  auto out = [&](const std::string& id) -> const StepOutput& {
    for (const auto& o : run.outputs) {
      if (o.step_id == id) return o;
    }
    FAIL("missing step " << id);
    return run.outputs.front();
  };
  CHECK(names(*out("both").set) == std::vector<std::string>{"p2"});
  CHECK(out("near").ranking.size() == 2);
  CHECK(out("sem").ranking.size() == 2);
  CHECK(!out("ov").ranked_sets.empty());
  CHECK(names(*out("orgs").set) == std::vector<std::string>{"o1", "o4", "o5"});
  CHECK(out("cov").cover->uncovered.empty());
  CHECK(out("an").ranked_sets.front().score == doctest::Approx(1.0));
  CHECK(out("fr").set->provenance()->step_id == "fr");
  for (const auto& o : run.outputs) {
    CHECK(!o.digest(ds().catalog).empty());
    CHECK(o.memory_bytes_estimate() > 0);
  }
}

TEST_CASE("bad references fail at the step") {
  Dep d = fixture_dep();
  d.steps[2].inputs = {"s2:nothing"};
  auto run = run_dep(d, ds());
  REQUIRE(run.failure);
  CHECK(run.failure->step_id == "s3");
}

TEST_CASE("run_dep is deterministic and metrics aggregate") {
  auto a = run_dep(fixture_dep(), ds());
  auto b = run_dep(fixture_dep(), ds());
  REQUIRE(a.outputs.size() == b.outputs.size());
  for (std::size_t i = 0; i < a.outputs.size(); ++i) {
    CHECK(a.outputs[i].digest(ds().catalog) == b.outputs[i].digest(ds().catalog));
    CHECK(a.outputs[i].cardinality() == b.outputs[i].cardinality());
  }
  double total = 0;
  std::size_t peak = 0;
  for (const auto& s : a.metrics.steps) {
    total += s.latency_ms;
    peak = std::max(peak, s.memory_bytes_estimate);
    CHECK(s.latency_ms >= 0.0);
  }
  CHECK(a.metrics.total_latency_ms == doctest::Approx(total));
  CHECK(a.metrics.peak_memory_bytes == peak);
  auto r = a.metrics.recomputed();
  CHECK(r.total_latency_ms == doctest::Approx(a.metrics.total_latency_ms));
  CHECK(r.peak_memory_bytes == a.metrics.peak_memory_bytes);
  CHECK(r.step_count == a.metrics.step_count);
}

TEST_CASE("accuracy examples") {
  auto a = accuracy(ids("projects", {"p1", "p2"}), ids("projects", {"p2", "p3"}));
  CHECK(a.precision == 0.5);
  CHECK(a.recall == 0.5);
  CHECK(a.f1 == 0.5);
  auto same = accuracy(ids("projects", {"p1"}), ids("projects", {"p1"}));
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f1 == 1.0);
  auto off = accuracy(ids("projects", {"p1"}), ids("projects", {"p2"}));
  CHECK(off.precision == 0.0);
  CHECK(off.recall == 0.0);
  CHECK(off.f1 == 0.0);
  CHECK(code_of([] { accuracy(ids("projects", {"p1"}), EntitySet("projects", {})); }) == ErrorCode::EmptyGold);
  CHECK(code_of([] { accuracy(ids("projects", {"p1"}), ids("orgs", {"o1"})); }) == ErrorCode::BaseTableMismatch);
}

TEST_CASE("accuracy matches the oracle and the harmonic-mean identity") {
  std::mt19937_64 rng(61);
  for (int i = 0; i < 1000; ++i) {
    std::vector<RowId> r, g;
    for (RowId x = 0; x < 30; ++x) {
      if (rng() % 3 == 0) r.push_back(x);
      if (rng() % 3 == 0) g.push_back(x);
    }
    if (g.empty()) continue;
    EntitySet rs("t", r), gs("t", g);
    auto got = accuracy(rs, gs);
    auto expect = oracle::accuracy({r.begin(), r.end()}, {g.begin(), g.end()});
    CHECK(got.precision == doctest::Approx(expect->p));
    CHECK(got.recall == doctest::Approx(expect->r));
    CHECK(got.f1 == doctest::Approx(expect->f));
    CHECK(got.f1 * (got.precision + got.recall) == doctest::Approx(2 * got.precision * got.recall));
    CHECK(got.precision >= 0.0);
    CHECK(got.precision <= 1.0);
    CHECK(got.recall >= 0.0);
    CHECK(got.recall <= 1.0);
  }
}

TEST_CASE("controllability") {
  CHECK(controllability(interactions(4)) == 0.25);
  CHECK(controllability(interactions(1)) == 1.0);
  CHECK(!controllability(interactions(0)));
  for (std::size_t n = 1; n < 30; ++n) CHECK(*controllability(interactions(n + 1)) < *controllability(interactions(n)));

  SessionLog shown = interactions(2);
  Event e;
  e.timestamp_ms = 10;
  e.kind = EventKind::RecommendationShown;
  shown.events.push_back(e);
  CHECK(controllability(shown) == 0.5);
}

TEST_CASE("signatures") {
  CHECK(Signature::parse("by_facet(country)") == Signature{"by_facet", "country"});
  CHECK(Signature::parse("by_overlap") == Signature{"by_overlap", ""});
  CHECK(Signature{"by_facet", "country"}.name() == "by_facet(country)");
  const Dep d = fixture_dep();
  CHECK(step_signature(d.steps[0]).name() == "scan(projects)");
  CHECK(step_signature(d.steps[1]).name() == "by_filter(country)");
  CHECK(step_signature(d.steps[2]).name() == "by_facet(year)");
}

TEST_CASE("session log jsonl round trip and validation") {
  CHECK(SessionLog::from_jsonl("").events.empty());
  SessionLog l = interactions(3);
  auto back = SessionLog::from_jsonl(l.to_jsonl());
  CHECK(back.session_id == "x");
  REQUIRE(back.events.size() == 3);
  CHECK(back.events[1].kind == EventKind::Backtrack);
  CHECK_NOTHROW(back.validate());

  CHECK(code_of([] { SessionLog::from_jsonl(read_file(xtest::fixture_dir() / "training_sessions.jsonl")); }) ==
        ErrorCode::SchemaViolation);
  CHECK(code_of([] { SessionLog::from_jsonl("{not json}\n"); }) == ErrorCode::SchemaViolation);
  SessionLog bad = interactions(3);
  bad.events[2].timestamp_ms = -5;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::SchemaViolation);
}

TEST_CASE("replay of the recorded fixture sessions") {
  const auto text = read_file(xtest::fixture_dir() / "training_sessions.jsonl");
  std::map<std::string, std::string> by_session;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    by_session[json::parse(line)["session_id"].get<std::string>()] += line + "\n";
  }
  REQUIRE(by_session.size() >= 2);
  for (const auto& [id, lines] : by_session) {
    INFO(id);
    auto log = SessionLog::from_jsonl(lines);
    auto a = replay(log, ds());
    auto b = replay(log, ds());
    REQUIRE(a.outputs.size() == b.outputs.size());
    CHECK(!a.outputs.empty());
    for (std::size_t i = 0; i < a.outputs.size(); ++i) {
      CHECK(a.outputs[i].digest(ds().catalog) == b.outputs[i].digest(ds().catalog));
    }
    Catalog changed = ds().catalog;
    changed.mutable_table("projects").set_cell(0, 2, std::string("DE"));
    const Dataset mutated = ds().with_catalog(std::move(changed));
    CHECK(code_of([&] { replay(log, mutated); }) == ErrorCode::ReplayDivergence);
  }
  CHECK(replay(SessionLog{}, ds()).outputs.empty());
}
