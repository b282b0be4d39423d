#include "xplore/xplore.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "xplore/dataset.hpp"
#include "xplore/error.hpp"
#include "xplore/evaluator.hpp"
#include "xplore/explainer.hpp"
#include "xplore/gateway.hpp"
#include "xplore/guide.hpp"
#include "xplore/nl_frontend.hpp"
#include "xplore/pipeline.hpp"
#include "xplore/session.hpp"
#include "xplore/sql_compiler.hpp"

using nlohmann::json;
using xplore::Error;
using xplore::ErrorCode;

static_assert(XPLORE_MALFORMED_CSV == static_cast<int>(ErrorCode::MalformedCsv));
static_assert(XPLORE_STEP_FAILURE == static_cast<int>(ErrorCode::StepFailure));
static_assert(XPLORE_CONCURRENT_MUTATION == static_cast<int>(ErrorCode::ConcurrentMutation));
static_assert(XPLORE_INTERNAL == static_cast<int>(ErrorCode::Internal));

struct xplore_dataset {
  std::shared_ptr<const xplore::Dataset> dataset;
};

struct xplore_service {
  std::unique_ptr<xplore::Service> service;
  std::unique_ptr<xplore::HttpServer> server;
};

namespace {

struct LastError {
  std::string message;
  std::string location;
  std::string json_text;
};

thread_local LastError g_last;

void clear_error() {
  g_last.message.clear();
  g_last.location.clear();
  g_last.json_text.clear();
}

xplore_status record(const Error& e) {
  g_last.message = e.what();
  g_last.location = e.location().value_or("");
  g_last.json_text = xplore::error_body(e).dump();
  return static_cast<xplore_status>(e.code());
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p != nullptr) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
xplore_status guarded(Fn&& fn) {
  clear_error();
  try {
    fn();
    return XPLORE_OK;
  } catch (const Error& e) {
    return record(e);
  } catch (const json::exception& e) {
    return record(Error(ErrorCode::SchemaViolation, e.what()));
  } catch (const std::bad_alloc&) {
    return record(Error(ErrorCode::Internal, "out of memory"));
  } catch (const std::exception& e) {
    return record(Error(ErrorCode::Internal, e.what()));
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

json parse_arg(const char* text, const char* what) {
  need(text, what);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, std::string(what) + " is not valid JSON: " + e.what());
  }
}

const xplore::Dataset& ds(const xplore_dataset* d) {
  need(d, "dataset");
  return *d->dataset;
}

json describe(const xplore::Dataset& d) {
  json tables = json::array();
  for (const auto& t : d.catalog.tables()) {
    json cols = json::array();
    for (const auto& c : t.columns()) cols.push_back(json{{"name", c.name}, {"kind", xplore::column_kind_name(c.kind)}});
    tables.push_back(json{{"name", t.name()}, {"identifier", t.identifier_name()}, {"rows", t.row_count()}, {"columns", cols}});
  }
  json joins = json::array();
  for (const auto& e : d.graph.joins()) joins.push_back(json{{"from", e.from}, {"to", e.to}, {"keys", e.keys}});
  json profiles = json::array();
  for (const auto& p : d.profiles) profiles.push_back(p.to_json());
  return json{{"name", d.name},
              {"tables", tables},
              {"joins", joins},
              {"vocabulary_terms", d.graph.vocabulary().size()},
              {"value_terms", d.graph.values().size()},
              {"profiles", profiles}};
}

json run_json(const xplore::DepRun& run, const xplore::Catalog& catalog) {
  json outputs = json::array();
  for (const auto& o : run.outputs) outputs.push_back(o.to_json(catalog));
  json j{{"outputs", outputs}, {"metrics", run.metrics.to_json()}};
  if (run.failure) {
    j["failure"] = json{{"step_id", run.failure->step_id},
                        {"code", xplore::error_code_name(run.failure->code)},
                        {"message", run.failure->message}};
  }
  return j;
}

}  // namespace

extern "C" {

const char* xplore_version(void) { return "1.0.0"; }

const char* xplore_status_name(xplore_status status) {
  if (status == XPLORE_OK) return "OK";
  if (status < XPLORE_MALFORMED_CSV || status > XPLORE_INTERNAL) return "Unknown";
  return xplore::error_code_name(static_cast<ErrorCode>(status)).data();
}

const char* xplore_last_error_message(void) { return g_last.message.c_str(); }
const char* xplore_last_error_location(void) { return g_last.location.c_str(); }
const char* xplore_last_error_json(void) { return g_last.json_text.c_str(); }

void xplore_string_free(char* s) { std::free(s); }

xplore_status xplore_dataset_open(const char* manifest_path, xplore_dataset** out) {
  return guarded([&] {
    need(manifest_path, "manifest_path");
    need(out, "out");
    *out = nullptr;
    auto d = std::make_shared<const xplore::Dataset>(xplore::load_dataset(manifest_path));
    *out = new xplore_dataset{std::move(d)};
  });
}

xplore_status xplore_dataset_from_csv(const char* csv_path, const char* schema_path, xplore_dataset** out) {
  return guarded([&] {
    need(csv_path, "csv_path");
    need(schema_path, "schema_path");
    need(out, "out");
    *out = nullptr;
    json schema_j;
    try {
      schema_j = json::parse(xplore::read_file(schema_path));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::InvalidConfig, std::string(schema_path) + ": " + e.what());
    }
    auto schema = xplore::TableSchema::from_json(schema_j);
    xplore::Catalog catalog;
    catalog.add(xplore::ingest_csv(csv_path, schema), schema);
    auto d = std::make_shared<const xplore::Dataset>(xplore::build_dataset(schema.table, std::move(catalog)));
    *out = new xplore_dataset{std::move(d)};
  });
}

void xplore_dataset_close(xplore_dataset* dataset) { delete dataset; }

xplore_status xplore_dataset_describe(const xplore_dataset* dataset, char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    *out_json = dup(describe(ds(dataset)).dump());
  });
}

xplore_status xplore_query(const xplore_dataset* dataset, const char* question, size_t n, char** out_json) {
  return guarded([&] {
    need(question, "question");
    need(out_json, "out_json");
    const auto& d = ds(dataset);
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
    auto list = xplore::interpret(question, d.graph, d.catalog, n, d.nl);
    json items = json::array();
    for (const auto& i : list) {
      json item = i.to_json();
      item["sql"] = xplore::compile_to_sql(i.ast, d.catalog);
      item["nl_explanation"] = xplore::explain_query(i.ast, d.graph, d.templates);
      items.push_back(std::move(item));
    }
    *out_json = dup(json{{"interpretations", items}}.dump());
  });
}

xplore_status xplore_compile_sql(const xplore_dataset* dataset, const char* ast_json, char** out_sql) {
  return guarded([&] {
    need(out_sql, "out_sql");
    auto ast = xplore::QueryAst::from_json(parse_arg(ast_json, "ast_json"));
    *out_sql = dup(xplore::compile_to_sql(ast, ds(dataset).catalog));
  });
}

xplore_status xplore_explain(const xplore_dataset* dataset, const char* ast_json, char** out_text) {
  return guarded([&] {
    need(out_text, "out_text");
    const auto& d = ds(dataset);
    auto ast = xplore::QueryAst::from_json(parse_arg(ast_json, "ast_json"));
    xplore::validate(ast, d.catalog);
    *out_text = dup(xplore::explain_query(ast, d.graph, d.templates));
  });
}

xplore_status xplore_evaluate(const xplore_dataset* dataset, const char* ast_json, char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    auto ast = xplore::QueryAst::from_json(parse_arg(ast_json, "ast_json"));
    *out_json = dup(xplore::eval_in_memory(ast, ds(dataset).catalog).to_json().dump());
  });
}

xplore_status xplore_run_dep(const xplore_dataset* dataset, const char* dep_json, char** out_json) {
  std::string out;
  auto st = guarded([&] {
    need(out_json, "out_json");
    *out_json = nullptr;
    const auto& d = ds(dataset);
    auto dep = xplore::Dep::from_json(parse_arg(dep_json, "dep_json"));
    auto run = xplore::run_dep(dep, d);
    out = run_json(run, d.catalog).dump();
    run.throw_if_failed();
  });
  if (out_json != nullptr && !out.empty()) *out_json = dup(out);
  return st;
}

xplore_status xplore_eval(const xplore_dataset* dataset, const char* dep_json, const char* gold_json,
                          const char* log_jsonl, char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    need(gold_json, "gold_json");
    const auto& d = ds(dataset);
    if (std::string_view(gold_json).find_first_not_of(" \t\r\n") == std::string_view::npos) {
      throw Error(ErrorCode::EmptyGold, "gold file is empty");
    }
    auto gold_j = parse_arg(gold_json, "gold_json");
    if (gold_j.is_object() && gold_j.contains("ids") && gold_j["ids"].is_array() && gold_j["ids"].empty()) {
      throw Error(ErrorCode::EmptyGold, "gold set has no ids");
    }
    auto gold = xplore::EntitySet::from_json(gold_j, d.catalog);
    auto dep = xplore::Dep::from_json(parse_arg(dep_json, "dep_json"));
    auto run = xplore::run_dep(dep, d);
    run.throw_if_failed();
    const xplore::StepOutput* last = nullptr;
    for (const auto& o : run.outputs) {
      if (o.set) last = &o;
    }
    if (last == nullptr) throw Error(ErrorCode::InvalidArgument, "the pipeline produced no entity set to score");
    auto acc = xplore::accuracy(*last->set, gold);
    json j{{"step_id", last->step_id},
           {"result_size", last->set->size()},
           {"gold_size", gold.size()},
           {"precision", acc.precision},
           {"recall", acc.recall},
           {"f1", acc.f1},
           {"metrics", run.metrics.to_json()}};
    if (log_jsonl != nullptr) {
      auto log = xplore::SessionLog::from_jsonl(log_jsonl);
      log.validate();
      auto c = xplore::controllability(log);
      j["controllability"] = c ? json(*c) : json(nullptr);
      j["interaction_count"] = log.interaction_count();
    }
    *out_json = dup(j.dump());
  });
}

xplore_status xplore_replay(const xplore_dataset* dataset, const char* log_jsonl, char** out_json) {
  return guarded([&] {
    need(log_jsonl, "log_jsonl");
    need(out_json, "out_json");
    const auto& d = ds(dataset);
    auto result = xplore::replay(xplore::SessionLog::from_jsonl(log_jsonl), d);
    json outputs = json::array();
    for (const auto& o : result.outputs) {
      outputs.push_back(json{{"step_id", o.step_id}, {"op", o.op}, {"digest", o.digest(d.catalog)},
                             {"cardinality", o.cardinality()}});
    }
    *out_json = dup(json{{"outputs", outputs}, {"interpretations", result.interpretations}}.dump());
  });
}

xplore_status xplore_cold_start(const xplore_dataset* dataset, size_t k, char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    json list = json::array();
    for (const auto& r : xplore::cold_start(ds(dataset), k)) list.push_back(r.to_json());
    *out_json = dup(json{{"recommendations", list}}.dump());
  });
}

xplore_status xplore_service_create(const char* config_json, const char* config_base_dir, xplore_service** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    xplore::ServiceConfig cfg;
    if (config_json != nullptr) {
      cfg = xplore::ServiceConfig::from_json(parse_arg(config_json, "config_json"),
                                             config_base_dir != nullptr ? config_base_dir : "");
    }
    cfg.apply_env();
    auto svc = std::make_unique<xplore::Service>(cfg);
    svc->restore_persisted();
    *out = new xplore_service{std::move(svc), nullptr};
  });
}

void xplore_service_destroy(xplore_service* service) {
  if (service == nullptr) return;
  if (service->server) service->server->stop();
  delete service;
}

xplore_status xplore_service_config(const xplore_service* service, char** out_json) {
  return guarded([&] {
    need(service, "service");
    need(out_json, "out_json");
    *out_json = dup(service->service->config().to_json().dump());
  });
}

xplore_status xplore_service_handle(xplore_service* service, const char* method, const char* target, const char* body,
                                    int* out_http_status, char** out_body) {
  return guarded([&] {
    need(service, "service");
    need(method, "method");
    need(target, "target");
    need(out_http_status, "out_http_status");
    need(out_body, "out_body");
    std::string path = target;
    std::map<std::string, std::string> query;
    if (auto q = path.find('?'); q != std::string::npos) {
      std::string qs = path.substr(q + 1);
      path.resize(q);
      std::size_t pos = 0;
      while (pos <= qs.size()) {
        auto amp = qs.find('&', pos);
        auto item = qs.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
        if (!item.empty()) {
          auto eq = item.find('=');
          query[item.substr(0, eq)] = eq == std::string::npos ? "" : item.substr(eq + 1);
        }
        if (amp == std::string::npos) break;
        pos = amp + 1;
      }
    }
    auto r = service->service->handle(method, path, query, body != nullptr ? body : "");
    *out_http_status = r.status;
    *out_body = dup(r.body);
  });
}

xplore_status xplore_service_start(xplore_service* service, const char* host, int port, int* out_port) {
  return guarded([&] {
    need(service, "service");
    if (service->server) throw Error(ErrorCode::InvalidArgument, "service is already serving");
    auto server = std::make_unique<xplore::HttpServer>(*service->service);
    const auto& cfg = service->service->config();
    int bound = server->start(host != nullptr ? host : cfg.host, port < 0 ? cfg.port : port);
    service->server = std::move(server);
    if (out_port != nullptr) *out_port = bound;
  });
}

xplore_status xplore_service_run(xplore_service* service, const char* host, int port) {
  return guarded([&] {
    need(service, "service");
    xplore::HttpServer server(*service->service);
    const auto& cfg = service->service->config();
    server.run(host != nullptr ? host : cfg.host, port < 0 ? cfg.port : port);
  });
}

xplore_status xplore_service_stop(xplore_service* service) {
  return guarded([&] {
    need(service, "service");
    if (service->server) {
      service->server->stop();
      service->server.reset();
    }
  });
}

xplore_status xplore_export_log(const char* persist_dir, const char* session_id, char** out_jsonl) {
  return guarded([&] {
    need(persist_dir, "persist_dir");
    need(session_id, "session_id");
    need(out_jsonl, "out_jsonl");
    const auto path = std::filesystem::path(persist_dir) / (std::string(session_id) + ".jsonl");
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorCode::UnknownSession, "no persisted log for session '" + std::string(session_id) + "'",
                  path.string());
    }
    auto log = xplore::SessionLog::from_jsonl(xplore::read_file(path));
    log.validate();
    *out_jsonl = dup(log.to_jsonl());
  });
}

}  // extern "C"
