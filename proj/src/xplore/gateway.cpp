#include "xplore/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "xplore/evaluator.hpp"
#include "xplore/sql_compiler.hpp"

namespace xplore {

using nlohmann::json;
namespace fs = std::filesystem;

// --- configuration ---

namespace {

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return (v != nullptr && *v != '\0') ? v : nullptr;
}

template <typename T>
T parse_env_number(const char* name, const char* text) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      return std::stod(text);
    } else {
      return static_cast<T>(std::stoll(text));
    }
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, std::string(name) + " is not a number: " + text);
  }
}

}  // namespace

ServiceConfig ServiceConfig::from_json(const json& j, const fs::path& base) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "service config must be a JSON object");
  ServiceConfig c;
  try {
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    if (j.contains("datasets")) {
      c.datasets.clear();
      for (const auto& d : j["datasets"]) c.datasets.push_back(resolve(base, d.get<std::string>()));
    } else {
      for (auto& d : c.datasets) d = resolve(base, d);
    }
    c.engine_url = j.value("engine_url", c.engine_url);
    c.lambda = j.value("lambda", c.lambda);
    if (j.contains("in_list_cap")) c.in_list_cap = j["in_list_cap"].get<std::size_t>();
    c.persist_dir = resolve(base, j.value("persist_dir", c.persist_dir));
    c.static_dir = resolve(base, j.value("static_dir", c.static_dir));
    for (const auto& t : j.value("training_logs", json::array())) c.training_logs.push_back(resolve(base, t.get<std::string>()));
    c.model = resolve(base, j.value("model", c.model));
    c.alpha = j.value("alpha", c.alpha);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed service config: ") + e.what());
  }
  if (c.lambda < 0.0 || c.lambda > 1.0) throw Error(ErrorCode::InvalidConfig, "lambda must be in [0, 1]");
  return c;
}

ServiceConfig ServiceConfig::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

void ServiceConfig::apply_env() {
  if (auto v = env("XPLORE_HOST")) host = v;
  if (auto v = env("XPLORE_PORT")) port = parse_env_number<int>("XPLORE_PORT", v);
  if (auto v = env("XPLORE_DATASETS")) datasets = split_list(v);
  if (auto v = env("XPLORE_ENGINE_URL")) engine_url = v;
  if (auto v = env("XPLORE_LAMBDA")) lambda = parse_env_number<double>("XPLORE_LAMBDA", v);
  if (auto v = env("XPLORE_IN_LIST_CAP")) in_list_cap = parse_env_number<std::size_t>("XPLORE_IN_LIST_CAP", v);
  if (auto v = env("XPLORE_PERSIST_DIR")) persist_dir = v;
  if (auto v = env("XPLORE_STATIC_DIR")) static_dir = v;
  if (auto v = env("XPLORE_TRAINING_LOGS")) training_logs = split_list(v);
  if (auto v = env("XPLORE_MODEL")) model = v;
  if (lambda < 0.0 || lambda > 1.0) throw Error(ErrorCode::InvalidConfig, "lambda must be in [0, 1]");
}

json ServiceConfig::to_json() const {
  return json{{"host", host},
              {"port", port},
              {"datasets", datasets},
              {"engine_url", engine_url},
              {"lambda", lambda},
              {"in_list_cap", in_list_cap ? json(*in_list_cap) : json(nullptr)},
              {"persist_dir", persist_dir},
              {"static_dir", static_dir},
              {"training_logs", training_logs},
              {"model", model},
              {"alpha", alpha}};
}

// --- errors ---

int http_status_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownStep:
    case ErrorCode::UnknownRoute:
      return 404;
    case ErrorCode::ConcurrentMutation:
      return 409;
    case ErrorCode::EngineError:
      return 502;
    case ErrorCode::IoError:
    case ErrorCode::Internal:
      return 500;
    default:
      return 400;
  }
}

json error_body(const Error& e) {
  json j{{"code", error_code_name(e.code())}, {"message", e.what()}};
  if (e.location()) j["location"] = *e.location();
  return j;
}

namespace {

HttpResponse ok(const json& body) { return HttpResponse{200, body.dump(), "application/json"}; }

HttpResponse fail(const Error& e) { return HttpResponse{http_status_for(e.code()), error_body(e).dump(), "application/json"}; }

std::string require_string(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string()) {
    throw Error(ErrorCode::SchemaViolation, std::string("request body needs string field '") + key + "'");
  }
  return body[key].get<std::string>();
}

std::size_t require_index(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_number_integer() || body[key].get<long long>() < 0) {
    throw Error(ErrorCode::SchemaViolation, std::string("request body needs non-negative integer field '") + key + "'");
  }
  return body[key].get<std::size_t>();
}

std::optional<std::size_t> query_size(const std::map<std::string, std::string>& q, const char* key) {
  auto it = q.find(key);
  if (it == q.end() || it->second.empty()) return std::nullopt;
  try {
    std::size_t pos = 0;
    long long v = std::stoll(it->second, &pos);
    if (pos != it->second.size() || v < 0) throw std::invalid_argument(key);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("query parameter '") + key + "' must be a non-negative integer");
  }
}

std::optional<double> query_real(const std::map<std::string, std::string>& q, const char* key) {
  auto it = q.find(key);
  if (it == q.end() || it->second.empty()) return std::nullopt;
  try {
    std::size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("query parameter '") + key + "' must be a number");
  }
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

void write_text(const fs::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp);
    out << text;
  }
  fs::rename(tmp, path);
}

std::shared_ptr<const TransitionModel> load_model(const ServiceConfig& c) {
  if (!c.model.empty()) {
    return std::make_shared<const TransitionModel>(TransitionModel::from_json(json::parse(read_file(c.model))));
  }
  std::vector<SessionLog> logs;
  for (const auto& p : c.training_logs) {
    // A file may hold several sessions; split on session id.
    std::map<std::string, std::string> by_session;
    std::vector<std::string> order;
    std::istringstream in(read_file(p));
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto sid = json::parse(line).value("session_id", std::string{});
      if (!by_session.count(sid)) order.push_back(sid);
      by_session[sid] += line + "\n";
    }
    for (const auto& sid : order) logs.push_back(SessionLog::from_jsonl(by_session[sid]));
  }
  return std::make_shared<const TransitionModel>(train_transitions(logs, c.alpha));
}

std::vector<std::shared_ptr<const Dataset>> load_datasets(const ServiceConfig& c) {
  std::vector<std::shared_ptr<const Dataset>> out;
  for (const auto& path : c.datasets) {
    Dataset d = load_dataset(path);
    if (c.in_list_cap) d.in_list_limit = *c.in_list_cap;
    out.push_back(std::make_shared<const Dataset>(std::move(d)));
  }
  return out;
}

json schema_json(const Dataset& d) {
  json tables = json::array();
  for (const auto& t : d.catalog.tables()) {
    json cols = json::array();
    for (const auto& c : t.columns()) {
      cols.push_back(json{{"name", c.name}, {"kind", column_kind_name(c.kind)}, {"display", d.graph.display_of(t.name(), c.name)}});
    }
    tables.push_back(json{{"name", t.name()},
                          {"identifier", t.identifier_name()},
                          {"rows", t.row_count()},
                          {"display", d.graph.display_of(t.name())},
                          {"columns", cols}});
  }
  json joins = json::array();
  for (const auto& e : d.graph.joins()) joins.push_back(json{{"from", e.from}, {"to", e.to}, {"keys", e.keys}});
  json profiles = json::array();
  for (const auto& p : d.profiles) profiles.push_back(p.to_json());
  json taxonomies = json::array();
  for (const auto& t : d.taxonomies) taxonomies.push_back(json{{"name", t.name()}, {"table", t.table()}});
  return json{{"name", d.name}, {"tables", tables}, {"joins", joins}, {"profiles", profiles}, {"taxonomies", taxonomies}};
}

}  // namespace

// --- service ---

Service::Service(const ServiceConfig& config) : Service(config, load_datasets(config), load_model(config)) {}

Service::Service(const ServiceConfig& config, std::vector<std::shared_ptr<const Dataset>> datasets,
                 std::shared_ptr<const TransitionModel> model)
    : config_(config), datasets_(std::move(datasets)), model_(std::move(model)) {
  if (datasets_.empty()) throw Error(ErrorCode::InvalidConfig, "service needs at least one dataset");
  if (!model_) model_ = std::make_shared<const TransitionModel>(config_.alpha);
  session_options_.default_lambda = config_.lambda;
  if (!config_.persist_dir.empty()) {
    std::error_code ec;
    fs::create_directories(config_.persist_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + config_.persist_dir + ": " + ec.message());
  }
  if (!config_.engine_url.empty()) {
    for (const auto& d : datasets_) engines_[d->name] = open_engine(config_.engine_url, d->catalog);
  }
}

Service::~Service() = default;

std::shared_ptr<const Dataset> Service::dataset(const std::string& name) const {
  if (name.empty()) return datasets_.front();
  for (const auto& d : datasets_) {
    if (d->name == name) return d;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown dataset '" + name + "'");
}

std::shared_ptr<Service::Slot> Service::slot(const std::string& id) const {
  std::shared_lock lk(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no session '" + id + "'", id);
  return it->second;
}

std::vector<std::string> Service::session_ids() const {
  std::shared_lock lk(sessions_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : sessions_) ids.push_back(id);
  return ids;
}

std::unique_lock<std::mutex> Service::hold_session(const std::string& id) {
  return std::unique_lock<std::mutex>(slot(id)->session->mutex());
}

void Service::persist(const std::string& id, Slot& s) {
  if (config_.persist_dir.empty()) return;
  const fs::path dir(config_.persist_dir);
  write_text(dir / (id + ".jsonl"), s.session->log().to_jsonl());
  write_text(dir / (id + ".meta.json"), json{{"session_id", id}, {"dataset", s.dataset}}.dump() + "\n");
  write_text(dir / (id + ".dep.json"), s.session->pipeline().to_json().dump(2) + "\n");
}

std::size_t Service::restore_persisted() {
  if (config_.persist_dir.empty()) return 0;
  std::size_t restored = 0;
  std::vector<fs::path> metas;
  for (const auto& entry : fs::directory_iterator(config_.persist_dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > 10 && name.ends_with(".meta.json")) metas.push_back(entry.path());
  }
  std::sort(metas.begin(), metas.end());
  for (const auto& meta_path : metas) {
    const json meta = json::parse(read_file(meta_path));
    const auto id = meta.at("session_id").get<std::string>();
    const auto ds_name = meta.value("dataset", std::string{});
    const auto log_path = fs::path(config_.persist_dir) / (id + ".jsonl");
    SessionLog log = fs::exists(log_path) ? SessionLog::from_jsonl(read_file(log_path)) : SessionLog{};
    log.session_id = id;
    auto ds = dataset(ds_name);
    auto session = Session::restore(log, ds, model_, session_options_);
    {
      std::unique_lock lk(sessions_mutex_);
      sessions_[id] = std::make_shared<Slot>(Slot{ds->name, std::move(session)});
    }
    if (id.starts_with("sess-")) {
      try {
        const auto n = std::stoull(id.substr(5));
        if (n >= next_session_) next_session_ = n + 1;
      } catch (const std::exception&) {
      }
    }
    ++restored;
  }
  return restored;
}

HttpResponse Service::mutate(const std::string& id, const std::function<json(Session&)>& fn) {
  auto s = slot(id);
  std::unique_lock lk(s->session->mutex(), std::try_to_lock);
  if (!lk.owns_lock()) {
    throw Error(ErrorCode::ConcurrentMutation, "session '" + id + "' is busy with another request", id);
  }
  json result = fn(*s->session);
  persist(id, *s);
  return ok(result);
}

HttpResponse Service::read(const std::string& id, const std::function<HttpResponse(Session&)>& fn) {
  auto s = slot(id);
  std::unique_lock lk(s->session->mutex());
  return fn(*s->session);
}

json Service::engine_check(const Dataset& ds, const json& step_result) {
  std::lock_guard lk(engine_mutex_);
  auto it = engines_.find(ds.name);
  if (it == engines_.end() || !it->second) return nullptr;
  const auto& step = step_result;
  if (!step.contains("ast")) return nullptr;
  QueryAst ast = QueryAst::from_json(step["ast"]);
  const auto sql = compile_to_sql(ast, ds.catalog);
  ResultTable engine_rows = it->second->execute(sql);
  ResultTable memory_rows = eval_in_memory(ast, ds.catalog);
  return json{{"engine", it->second->name()}, {"sql", sql}, {"rows_match", bag_equal(engine_rows, memory_rows)}};
}

HttpResponse Service::handle(const std::string& method, const std::string& path,
                             const std::map<std::string, std::string>& query, const std::string& body) {
  try {
    json parsed = json::object();
    if (body.find_first_not_of(" \t\r\n") != std::string::npos) {
      try {
        parsed = json::parse(body);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaViolation, std::string("request body is not JSON: ") + e.what());
      }
      if (!parsed.is_object()) throw Error(ErrorCode::SchemaViolation, "request body must be a JSON object");
    }
    return route(method, split_path(path), query, parsed);
  } catch (const Error& e) {
    return fail(e);
  } catch (const json::exception& e) {
    return fail(Error(ErrorCode::SchemaViolation, e.what()));
  } catch (const std::exception& e) {
    return fail(Error(ErrorCode::Internal, e.what()));
  }
}

HttpResponse Service::route(const std::string& method, const std::vector<std::string>& parts,
                            const std::map<std::string, std::string>& query, const json& body) {
  const bool get = method == "GET";
  const bool post = method == "POST";
  auto not_found = [&] {
    return fail(Error(ErrorCode::UnknownRoute, "no route for " + method + " /" + [&] {
                  std::string p;
                  for (const auto& s : parts) p += (p.empty() ? "" : "/") + s;
                  return p;
                }()));
  };
  if (parts.empty()) return not_found();

  if (parts[0] == "health" && parts.size() == 1 && get) return ok(json{{"status", "ok"}});

  if (parts[0] == "datasets") {
    if (parts.size() == 1 && get) {
      json names = json::array();
      for (const auto& d : datasets_) names.push_back(d->name);
      return ok(json{{"datasets", names}});
    }
    if (parts.size() == 3 && parts[2] == "schema" && get) return ok(schema_json(*dataset(parts[1])));
    return not_found();
  }

  if (parts[0] != "sessions") return not_found();

  if (parts.size() == 1) {
    if (get) return ok(json{{"sessions", session_ids()}});
    if (!post) return not_found();
    auto ds = dataset(body.value("dataset", std::string{}));
    const std::string id = "sess-" + std::to_string(next_session_++);
    auto s = std::make_shared<Slot>(Slot{ds->name, std::make_unique<Session>(id, ds, model_, session_options_)});
    {
      std::unique_lock lk(sessions_mutex_);
      sessions_[id] = s;
    }
    persist(id, *s);
    return ok(json{{"session_id", id}, {"dataset", ds->name}});
  }

  const std::string& id = parts[1];
  if (parts.size() == 2 && get) {
    return read(id, [&](Session& s) {
      return ok(json{{"session_id", id},
                     {"dataset", s.dataset().name},
                     {"current", s.current_ref() ? json(*s.current_ref()) : json(nullptr)},
                     {"steps", s.outputs().size()}});
    });
  }
  if (parts.size() < 3) return not_found();
  const std::string& action = parts[2];

  if (post && parts.size() == 3) {
    if (action == "query") {
      const auto question = require_string(body, "question");
      std::optional<std::size_t> n;
      if (body.contains("n")) n = require_index(body, "n");
      return mutate(id, [&](Session& s) { return s.query(question, n); });
    }
    if (action == "choose") {
      const auto index = require_index(body, "interpretation_index");
      return mutate(id, [&](Session& s) {
        json r = s.choose(index);
        const auto step = s.pipeline().steps.back();
        if (auto check = engine_check(s.dataset(), step.params); !check.is_null()) r["engine_check"] = check;
        return r;
      });
    }
    if (action == "steps") {
      const auto op = require_string(body, "op");
      const json params = body.value("params", json::object());
      std::optional<std::vector<std::string>> inputs;
      if (body.contains("inputs")) inputs = body["inputs"].get<std::vector<std::string>>();
      return mutate(id, [&](Session& s) { return s.apply(op, params, inputs); });
    }
    if (action == "backtrack") {
      const auto ref = require_string(body, "step_id");
      return mutate(id, [&](Session& s) { return s.backtrack(ref); });
    }
  }
  if (action == "recommendations") {
    if (get && parts.size() == 3) {
      const auto k = query_size(query, "k");
      const auto lambda = query_real(query, "lambda");
      return mutate(id, [&](Session& s) { return s.recommendations(k, lambda); });
    }
    if (post && parts.size() == 4 && (parts[3] == "accept" || parts[3] == "reject")) {
      const auto index = require_index(body, "index");
      const bool accept = parts[3] == "accept";
      return mutate(id, [&](Session& s) { return accept ? s.accept(index) : s.reject(index); });
    }
  }
  if (get && parts.size() == 3) {
    if (action == "pipeline") return read(id, [](Session& s) { return ok(s.pipeline().to_json()); });
    if (action == "metrics") return read(id, [](Session& s) { return ok(s.metrics_json()); });
    if (action == "log") {
      return read(id, [](Session& s) { return HttpResponse{200, s.log().to_jsonl(), "application/x-ndjson"}; });
    }
  }
  return not_found();
}

// --- HTTP server ---

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(Service& s) : service(s) {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> q;
      for (const auto& [k, v] : req.params) q[k] = v;
      HttpResponse r = service.handle(req.method, req.path, q, req.body);
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server.Get("/health", forward);
    server.Get("/datasets.*", forward);
    server.Get("/sessions.*", forward);
    server.Post("/sessions.*", forward);
    if (!service.config().static_dir.empty()) server.set_mount_point("/", service.config().static_dir);
    server.set_error_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (res.status != 404 || !res.body.empty()) return;
      HttpResponse r = service.handle(req.method, req.path, {}, req.body);
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    });
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw Error(ErrorCode::IoError, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace xplore
