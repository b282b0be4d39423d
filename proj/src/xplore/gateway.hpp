#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "xplore/dataset.hpp"
#include "xplore/error.hpp"
#include "xplore/guide.hpp"
#include "xplore/session.hpp"
#include "xplore/sql_engine.hpp"

namespace xplore {

// Service configuration. Every field can be overridden by an XPLORE_*
// environment variable: XPLORE_HOST, XPLORE_PORT, XPLORE_DATASETS (comma
// separated manifests), XPLORE_ENGINE_URL, XPLORE_LAMBDA, XPLORE_IN_LIST_CAP,
// XPLORE_PERSIST_DIR, XPLORE_STATIC_DIR, XPLORE_TRAINING_LOGS, XPLORE_MODEL.
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::vector<std::string> datasets = {"data/fixture/manifest.json"};
  std::string engine_url;
  double lambda = 0.2;
  std::optional<std::size_t> in_list_cap;  // overrides the manifests' limit
  std::string persist_dir;
  std::string static_dir;
  std::vector<std::string> training_logs;
  std::string model;  // TransitionModel JSON file; wins over training_logs
  double alpha = 0.1;

  // Relative paths resolve against `base`.
  static ServiceConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
  static ServiceConfig load(const std::filesystem::path& path);
  void apply_env();
  nlohmann::json to_json() const;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

int http_status_for(ErrorCode code) noexcept;
nlohmann::json error_body(const Error& e);

// The HTTP API as a plain function of (method, path, query, body), so it can be
// exercised without sockets.
class Service {
 public:
  explicit Service(const ServiceConfig& config);
  Service(const ServiceConfig& config, std::vector<std::shared_ptr<const Dataset>> datasets,
          std::shared_ptr<const TransitionModel> model);
  ~Service();

  HttpResponse handle(const std::string& method, const std::string& path,
                      const std::map<std::string, std::string>& query, const std::string& body);

  // Holds a session's writer lock, as an in-flight mutation would.
  std::unique_lock<std::mutex> hold_session(const std::string& id);

  // Re-creates sessions from the persistence directory by replaying their logs.
  std::size_t restore_persisted();

  const ServiceConfig& config() const noexcept { return config_; }
  std::shared_ptr<const TransitionModel> model() const { return model_; }
  std::vector<std::string> session_ids() const;

 private:
  struct Slot {
    std::string dataset;
    std::unique_ptr<Session> session;
  };

  std::shared_ptr<Slot> slot(const std::string& id) const;
  std::shared_ptr<const Dataset> dataset(const std::string& name) const;
  HttpResponse route(const std::string& method, const std::vector<std::string>& parts,
                     const std::map<std::string, std::string>& query, const nlohmann::json& body);
  HttpResponse mutate(const std::string& id, const std::function<nlohmann::json(Session&)>& fn);
  HttpResponse read(const std::string& id, const std::function<HttpResponse(Session&)>& fn);
  void persist(const std::string& id, Slot& slot);
  nlohmann::json engine_check(const Dataset& ds, const nlohmann::json& step_result);

  ServiceConfig config_;
  std::vector<std::shared_ptr<const Dataset>> datasets_;
  std::shared_ptr<const TransitionModel> model_;
  SessionOptions session_options_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::atomic<std::uint64_t> next_session_{1};
  std::mutex engine_mutex_;
  std::map<std::string, std::unique_ptr<SqlEngine>> engines_;
};

// HTTP/1.1 front end over a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  // Binds and serves in a background thread; port 0 picks a free port.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace xplore
