#include <doctest.h>
#include <httplib.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "fixture.hpp"
#include "xplore/catalog.hpp"
#include "xplore/gateway.hpp"
#include "xplore/session_log.hpp"

using namespace xplore;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Reply {
  int status;
  json body;
};

class Api {
 public:
  explicit Api(ServiceConfig cfg = {}) : service(cfg, {xtest::fixture()}, nullptr) {}
  Api(ServiceConfig cfg, std::shared_ptr<const TransitionModel> model)
      : service(cfg, {xtest::fixture()}, std::move(model)) {}

  Reply call(const std::string& method, const std::string& path, const json& body = nullptr,
             std::map<std::string, std::string> query = {}) {
    auto r = service.handle(method, path, query, body.is_null() ? "" : body.dump());
    json parsed = r.content_type == "application/json" ? json::parse(r.body) : json(r.body);
    return {r.status, parsed};
  }
  Reply get(const std::string& path, std::map<std::string, std::string> query = {}) {
    return call("GET", path, nullptr, std::move(query));
  }
  Reply post(const std::string& path, const json& body = json::object()) { return call("POST", path, body); }

  std::string open() { return post("/sessions").body.at("session_id").get<std::string>(); }
  std::size_t events(const std::string& id) {
    auto r = service.handle("GET", "/sessions/" + id + "/log", {}, "");
    return SessionLog::from_jsonl(r.body).events.size();
  }

  Service service;
};

void check_error(const Reply& r, int status, const std::string& code) {
  CHECK(r.status == status);
  CHECK(r.body.at("code") == code);
  CHECK(r.body.at("message").is_string());
  CHECK(!r.body.at("message").get<std::string>().empty());
  for (const auto& [k, _] : r.body.items()) CHECK((k == "code" || k == "message" || k == "location"));
}

std::size_t row_count(const json& step) { return step.at("result").at("rows").at("rows").size(); }

json filter_fr() { return json{{"op", "by_filter"}, {"params", {{"attribute", "country"}, {"op", "="}, {"value", "FR"}}}}; }

// The three interactions of the basic walkthrough: query, choose, filter.
void walkthrough(Api& api, const std::string& id) {
  auto q = api.post("/sessions/" + id + "/query", {{"question", "Find all projects"}});
  REQUIRE(q.status == 200);
  REQUIRE(api.post("/sessions/" + id + "/choose", {{"interpretation_index", 0}}).status == 200);
  REQUIRE(api.post("/sessions/" + id + "/steps", filter_fr()).status == 200);
}

// The recorded fixture sessions, one log per session id.
std::shared_ptr<const TransitionModel> trained_model() {
  std::vector<SessionLog> logs;
  std::istringstream in(read_file(xtest::fixture_dir() / "training_sessions.jsonl"));
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    const auto sid = j["session_id"].get<std::string>();
    if (logs.empty() || logs.back().session_id != sid) logs.push_back(SessionLog{sid, {}});
    logs.back().events.push_back(Event::from_json(j));
  }
  REQUIRE(logs.size() == 3);
  return std::make_shared<const TransitionModel>(train_transitions(logs, 0.1));
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("xplore-test-" + name + "-" + std::to_string(std::random_device{}()));
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("health, datasets and schema") {
  Api api;
  CHECK(api.get("/health").body == json{{"status", "ok"}});
  CHECK(api.get("/datasets").body == json{{"datasets", {"fixture"}}});
  auto schema = api.get("/datasets/fixture/schema");
  CHECK(schema.status == 200);
  CHECK(schema.body.dump().find("projects") != std::string::npos);
  check_error(api.get("/datasets/nope/schema"), 400, "InvalidArgument");
}

TEST_CASE("unknown routes and sessions are 404") {
  Api api;
  check_error(api.get("/nope"), 404, "UnknownRoute");
  check_error(api.get("/"), 404, "UnknownRoute");
  check_error(api.call("DELETE", "/sessions"), 404, "UnknownRoute");
  check_error(api.get("/sessions/sess-99"), 404, "UnknownSession");
  check_error(api.post("/sessions/sess-99/query", {{"question", "Find all projects"}}), 404, "UnknownSession");
  const auto id = api.open();
  check_error(api.get("/sessions/" + id + "/frobnicate"), 404, "UnknownRoute");
  check_error(api.post("/sessions/" + id + "/backtrack", {{"step_id", "s9"}}), 404, "UnknownStep");
}

TEST_CASE("request validation errors") {
  Api api;
  const auto id = api.open();
  auto bad = api.service.handle("POST", "/sessions/" + id + "/query", {}, "{not json");
  CHECK(bad.status == 400);
  CHECK(json::parse(bad.body)["code"] == "SchemaViolation");
  check_error(api.post("/sessions/" + id + "/query", json::object()), 400, "SchemaViolation");
  check_error(api.post("/sessions/" + id + "/query", {{"question", "purple elephant tango"}}), 400, "NoInterpretation");
  check_error(api.post("/sessions/" + id + "/choose", {{"interpretation_index", 0}}), 400, "InvalidArgument");
  check_error(api.post("/sessions/" + id + "/steps", {{"op", "by_magic"}}), 400, "UnknownOperator");
  CHECK(api.events(id) == 0);
}

TEST_CASE("walkthrough over the handler") {
  Api api;
  const auto id = api.open();
  auto q = api.post("/sessions/" + id + "/query", {{"question", "Find all projects"}});
  REQUIRE(q.status == 200);
  const auto& interps = q.body.at("interpretations");
  REQUIRE(interps.size() >= 1);
  CHECK(interps[0]["sql"] == "SELECT id, title, country, funding, year FROM projects");
  CHECK(interps[0]["nl_explanation"] == "Find all projects.");

  auto c = api.post("/sessions/" + id + "/choose", {{"interpretation_index", 0}});
  REQUIRE(c.status == 200);
  CHECK(row_count(c.body) == 6);
  CHECK(c.body["explanation"] == "Find all projects.");

  auto f = api.post("/sessions/" + id + "/steps", filter_fr());
  REQUIRE(f.status == 200);
  CHECK(row_count(f.body) == 3);
  const auto text = f.body["explanation"].get<std::string>();
  CHECK(text.find("projects") != std::string::npos);
  CHECK(text.find("country") != std::string::npos);

  auto m = api.get("/sessions/" + id + "/metrics");
  CHECK(m.body["interaction_count"] == 3);
  CHECK(m.body["controllability"].get<double>() == 1.0 / 3.0);

  auto p = api.get("/sessions/" + id + "/pipeline");
  CHECK(p.body["steps"].size() == 2);
  auto s = api.get("/sessions/" + id);
  CHECK(s.body["current"] == f.body["step_id"]);
}

TEST_CASE("every mutation appends exactly one event") {
  Api api(ServiceConfig{}, trained_model());
  const auto id = api.open();
  const std::string base = "/sessions/" + id;
  std::size_t expected = 0;
  auto mutation = [&](const Reply& r) {
    INFO(r.body.dump());
    REQUIRE(r.status == 200);
    CHECK(api.events(id) == ++expected);
  };
  auto read_only = [&](const Reply& r) {
    CHECK(r.status == 200);
    CHECK(api.events(id) == expected);
  };
  mutation(api.post(base + "/query", {{"question", "show projects from France"}}));
  mutation(api.post(base + "/choose", {{"interpretation_index", 0}}));
  mutation(api.post(base + "/steps", {{"op", "by_facet"}, {"params", {{"attribute", "year"}}}}));
  read_only(api.get(base));
  read_only(api.get(base + "/pipeline"));
  read_only(api.get(base + "/metrics"));
  read_only(api.get(base + "/log"));
  mutation(api.get(base + "/recommendations", {{"k", "3"}}));
  mutation(api.post(base + "/recommendations/reject", {{"index", 0}}));
  mutation(api.post(base + "/recommendations/accept", {{"index", 0}}));
  mutation(api.post(base + "/backtrack", {{"step_id", "s1"}}));
  mutation(api.post(base + "/steps", {{"op", "by_facet"}, {"params", {{"attribute", "country"}}}, {"inputs", {"s1"}}}));

  auto log = SessionLog::from_jsonl(api.service.handle("GET", base + "/log", {}, "").body);
  CHECK_NOTHROW(log.validate());
  CHECK(log.count(EventKind::RecommendationShown) == 1);
  CHECK(log.interaction_count() == expected - 1);
  auto m = api.get(base + "/metrics");
  CHECK(m.body["controllability"].get<double>() == 1.0 / static_cast<double>(expected - 1));

  // Failures leave the log untouched.
  api.post(base + "/steps", {{"op", "by_filter"}, {"params", {{"attribute", "nope"}, {"op", "="}, {"value", 1}}}});
  api.post(base + "/recommendations/accept", {{"index", 99}});
  CHECK(api.events(id) == expected);
}

TEST_CASE("a fresh session gets cold start recommendations") {
  Api api;
  const auto id = api.open();
  auto r = api.get("/sessions/" + id + "/recommendations", {{"k", "10"}});
  REQUIRE(r.status == 200);
  CHECK(r.body["mode"] == "cold_start");
  bool country = false;
  for (const auto& rec : r.body["recommendations"]) {
    if (rec["payload"].value("facet", "") == "projects.country") country = true;
  }
  CHECK(country);
  auto a = api.post("/sessions/" + id + "/recommendations/accept", {{"index", 0}});
  CHECK(a.status == 200);
  check_error(api.get("/sessions/" + id + "/recommendations", {{"lambda", "2"}}), 400, "InvalidArgument");
}

TEST_CASE("warm start uses the trained model") {
  Api api(ServiceConfig{}, trained_model());
  const auto id = api.open();
  REQUIRE(api.post("/sessions/" + id + "/steps", {{"op", "scan"}, {"params", {{"table", "projects"}}}}).status == 200);
  REQUIRE(api.post("/sessions/" + id + "/steps", filter_fr()).status == 200);
  auto r = api.get("/sessions/" + id + "/recommendations", {{"lambda", "0"}});
  CHECK(r.body["mode"] == "warm_start");
  REQUIRE(!r.body["recommendations"].empty());
  const auto top = r.body["recommendations"][0]["payload"]["signature"].get<std::string>();
  CHECK((top == "by_facet(country)" || top == "by_join(orgs)"));
}

TEST_CASE("sessions persist and restore to the same state") {
  const auto dir = temp_dir("persist");
  ServiceConfig cfg;
  cfg.persist_dir = dir.string();
  json pipeline, log, metrics, info;
  {
    Api api(cfg);
    const auto id = api.open();
    CHECK(id == "sess-1");
    walkthrough(api, id);
    api.get("/sessions/" + id + "/recommendations");
    pipeline = api.get("/sessions/sess-1/pipeline").body;
    log = api.get("/sessions/sess-1/log").body;
    metrics = api.get("/sessions/sess-1/metrics").body;
    info = api.get("/sessions/sess-1").body;
  }
  CHECK(fs::exists(dir / "sess-1.jsonl"));
  CHECK(fs::exists(dir / "sess-1.meta.json"));
  CHECK(fs::exists(dir / "sess-1.dep.json"));
  {
    Api api(cfg);
    CHECK(api.service.restore_persisted() == 1);
    CHECK(api.get("/sessions/sess-1/pipeline").body == pipeline);
    CHECK(api.get("/sessions/sess-1/log").body == log);
    CHECK(api.get("/sessions/sess-1/metrics").body == metrics);
    CHECK(api.get("/sessions/sess-1").body == info);
    CHECK(api.open() == "sess-2");
    // The restored session keeps working.
    auto f = api.post("/sessions/sess-1/steps", {{"op", "by_facet"}, {"params", {{"attribute", "year"}}}});
    CHECK(f.status == 200);
  }
  fs::remove_all(dir);
}

TEST_CASE("a mutation on a busy session is a 409") {
  Api api;
  const auto id = api.open();
  {
    auto lock = api.service.hold_session(id);
    check_error(api.post("/sessions/" + id + "/query", {{"question", "Find all projects"}}), 409, "ConcurrentMutation");
    check_error(api.get("/sessions/" + id + "/recommendations"), 409, "ConcurrentMutation");
  }
  CHECK(api.events(id) == 0);
  CHECK(api.post("/sessions/" + id + "/query", {{"question", "Find all projects"}}).status == 200);
}

TEST_CASE("the engine cross-check rides along with choose") {
  ServiceConfig cfg;
  cfg.engine_url = "sqlite::memory:";
  Api api(cfg);
  const auto id = api.open();
  api.post("/sessions/" + id + "/query", {{"question", "show projects from France"}});
  auto c = api.post("/sessions/" + id + "/choose", {{"interpretation_index", 0}});
  INFO(c.body.dump());
  REQUIRE(c.status == 200);
  CHECK(c.body["engine_check"]["rows_match"] == true);
}

TEST_CASE("http server end to end") {
  Api api;
  HttpServer server(api.service);
  const int port = server.start("127.0.0.1", 0);
  REQUIRE(port > 0);
  httplib::Client client("127.0.0.1", port);
  auto h = client.Get("/health");
  REQUIRE(h);
  CHECK(h->status == 200);

  auto s = client.Post("/sessions", "{}", "application/json");
  REQUIRE(s);
  const auto id = json::parse(s->body)["session_id"].get<std::string>();
  auto q = client.Post("/sessions/" + id + "/query", json{{"question", "Find all projects"}}.dump(), "application/json");
  REQUIRE(q);
  CHECK(q->status == 200);
  auto c = client.Post("/sessions/" + id + "/choose", R"({"interpretation_index":0})", "application/json");
  REQUIRE(c);
  CHECK(row_count(json::parse(c->body)) == 6);
  auto f = client.Post("/sessions/" + id + "/steps", filter_fr().dump(), "application/json");
  REQUIRE(f);
  CHECK(row_count(json::parse(f->body)) == 3);

  auto r = client.Get("/sessions/" + id + "/recommendations?k=2&lambda=0.5");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(json::parse(r->body)["recommendations"].size() <= 2);

  auto m = client.Get("/sessions/" + id + "/metrics");
  REQUIRE(m);
  CHECK(json::parse(m->body)["controllability"].get<double>() == 1.0 / 3.0);

  auto missing = client.Get("/nope");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(json::parse(missing->body)["code"] == "UnknownRoute");
  server.stop();
}
