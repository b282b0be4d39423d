// Command-line front end. Everything goes through the C API.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xplore/xplore.h"

using nlohmann::json;
namespace fs = std::filesystem;

#ifndef XPLORE_SOURCE_DATASET
#define XPLORE_SOURCE_DATASET ""
#endif

namespace {

struct Failure {
  xplore_status status;
};

void check(xplore_status st) {
  if (st != XPLORE_OK) throw Failure{st};
}

// Owns a string returned by the library.
struct Owned {
  char* p = nullptr;
  ~Owned() { xplore_string_free(p); }
  std::string str() const { return p != nullptr ? p : ""; }
};

struct Dataset {
  xplore_dataset* d = nullptr;
  ~Dataset() { xplore_dataset_close(d); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: IoError: cannot read " << path << "\n";
    std::exit(XPLORE_IO_ERROR);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string default_dataset() {
  if (const char* env = std::getenv("XPLORE_DATASET"); env != nullptr && *env != '\0') return env;
  if (fs::exists("data/fixture/manifest.json")) return "data/fixture/manifest.json";
  return XPLORE_SOURCE_DATASET;
}

void open_dataset(Dataset& ds, const std::string& manifest) {
  check(xplore_dataset_open(manifest.c_str(), &ds.d));
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

std::string fmt(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string scalar(const json& v) {
  if (v.is_null()) return "-";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (d == static_cast<long long>(d)) return std::to_string(static_cast<long long>(d));
    return fmt(d, 4);
  }
  return v.dump();
}

int cmd_ingest(const std::string& csv, const std::string& config, bool as_json) {
  Dataset ds;
  check(xplore_dataset_from_csv(csv.c_str(), config.c_str(), &ds.d));
  Owned out;
  check(xplore_dataset_describe(ds.d, &out.p));
  const json d = json::parse(out.str());
  if (as_json) {
    std::cout << d.dump(2) << "\n";
    return 0;
  }
  for (const auto& t : d["tables"]) {
    std::cout << "table " << t["name"].get<std::string>() << ": " << t["rows"] << " rows, identifier "
              << t["identifier"].get<std::string>() << "\n";
  }
  std::cout << pad("column", 16) << pad("kind", 13) << pad("distinct", 10) << pad("nulls", 7) << "entropy\n";
  for (const auto& p : d["profiles"]) {
    std::cout << pad(p["column"].get<std::string>(), 16) << pad(p["kind"].get<std::string>(), 13)
              << pad(std::to_string(p["distinct_count"].get<std::size_t>()), 10)
              << pad(std::to_string(p["null_count"].get<std::size_t>()), 7) << fmt(p["entropy"].get<double>()) << "\n";
  }
  return 0;
}

int cmd_query(const std::string& manifest, const std::string& question, std::size_t n, bool as_json) {
  Dataset ds;
  open_dataset(ds, manifest);
  Owned out;
  check(xplore_query(ds.d, question.c_str(), n, &out.p));
  const json r = json::parse(out.str());
  if (as_json) {
    std::cout << r.dump(2) << "\n";
    return 0;
  }
  std::size_t i = 1;
  for (const auto& it : r["interpretations"]) {
    std::cout << "#" << i++ << " score " << fmt(it["score"].get<double>()) << "\n";
    std::cout << "  SQL: " << it["sql"].get<std::string>() << "\n";
    std::cout << "  NL:  " << it["nl_explanation"].get<std::string>() << "\n";
  }
  return 0;
}

int cmd_run(const std::string& manifest, const std::string& dep_path, bool as_json) {
  Dataset ds;
  open_dataset(ds, manifest);
  const std::string dep = slurp(dep_path);
  Owned out;
  xplore_status st = xplore_run_dep(ds.d, dep.c_str(), &out.p);
  if (out.p == nullptr) check(st);
  const json r = json::parse(out.str());
  if (as_json) {
    std::cout << r.dump(2) << "\n";
  } else {
    std::cout << pad("step", 8) << pad("op", 14) << pad("result_size", 13) << pad("latency_ms", 12) << "memory_bytes\n";
    for (const auto& s : r["metrics"]["steps"]) {
      std::cout << pad(s["step_id"].get<std::string>(), 8) << pad(s["op"].get<std::string>(), 14)
                << pad(std::to_string(s["result_size"].get<std::size_t>()), 13)
                << pad(fmt(s["latency_ms"].get<double>()), 12) << s["memory_bytes_estimate"].get<std::size_t>() << "\n";
    }
    const auto& m = r["metrics"];
    std::cout << "total: " << m["step_count"] << " steps, " << fmt(m["total_latency_ms"].get<double>())
              << " ms, peak memory " << m["peak_memory_bytes"] << " bytes\n";
  }
  check(st);
  return 0;
}

int cmd_eval(const std::string& manifest, const std::string& dep_path, const std::string& gold_path,
             const std::string& log_path, bool as_json) {
  Dataset ds;
  open_dataset(ds, manifest);
  const std::string dep = slurp(dep_path);
  const std::string gold = slurp(gold_path);
  std::string log;
  if (!log_path.empty()) log = slurp(log_path);
  Owned out;
  check(xplore_eval(ds.d, dep.c_str(), gold.c_str(), log_path.empty() ? nullptr : log.c_str(), &out.p));
  const json r = json::parse(out.str());
  if (as_json) {
    std::cout << r.dump(2) << "\n";
    return 0;
  }
  std::cout << "precision " << fmt(r["precision"].get<double>(), 4) << "\n";
  std::cout << "recall    " << fmt(r["recall"].get<double>(), 4) << "\n";
  std::cout << "f1        " << fmt(r["f1"].get<double>(), 4) << "\n";
  if (r.contains("controllability")) std::cout << "controllability " << scalar(r["controllability"]) << "\n";
  return 0;
}

int cmd_replay(const std::string& manifest, const std::string& log_path) {
  Dataset ds;
  open_dataset(ds, manifest);
  const std::string log = slurp(log_path);
  Owned out;
  check(xplore_replay(ds.d, log.c_str(), &out.p));
  const json r = json::parse(out.str());
  for (const auto& o : r["outputs"]) {
    std::cout << pad(o["step_id"].get<std::string>(), 8) << pad(o["op"].get<std::string>(), 14)
              << pad(std::to_string(o["cardinality"].get<std::size_t>()), 8) << o["digest"].get<std::string>() << "\n";
  }
  std::cout << "replayed " << r["outputs"].size() << " steps identically\n";
  return 0;
}

int cmd_recommend(const std::string& manifest, std::size_t k) {
  Dataset ds;
  open_dataset(ds, manifest);
  Owned out;
  check(xplore_cold_start(ds.d, k, &out.p));
  const json recs = json::parse(out.str());
  for (const auto& r : recs["recommendations"]) {
    std::cout << fmt(r["score"].get<double>()) << "  " << r["rationale"].get<std::string>() << "\n";
  }
  return 0;
}

void set_env(const char* name, const std::string& value) {
  if (!value.empty()) ::setenv(name, value.c_str(), 1);
}

int cmd_serve(const std::string& config_path, int port, const std::string& host, const std::string& engine_url,
              const std::string& persist_dir, const std::string& static_dir, const std::string& dataset) {
  // Flags take precedence over both the config file and the environment.
  if (port >= 0) set_env("XPLORE_PORT", std::to_string(port));
  set_env("XPLORE_HOST", host);
  set_env("XPLORE_ENGINE_URL", engine_url);
  set_env("XPLORE_PERSIST_DIR", persist_dir);
  set_env("XPLORE_STATIC_DIR", static_dir);
  set_env("XPLORE_DATASETS", dataset);

  std::string config;
  std::string base;
  if (!config_path.empty()) {
    config = slurp(config_path);
    base = fs::absolute(config_path).parent_path().string();
  } else if (std::getenv("XPLORE_DATASETS") == nullptr) {
    set_env("XPLORE_DATASETS", default_dataset());
  }
  xplore_service* svc = nullptr;
  check(xplore_service_create(config_path.empty() ? nullptr : config.c_str(), base.c_str(), &svc));
  Owned cfg;
  check(xplore_service_config(svc, &cfg.p));
  const json c = json::parse(cfg.str());
  std::cerr << "serving on http://" << c["host"].get<std::string>() << ":" << c["port"] << "\n";
  xplore_status st = xplore_service_run(svc, nullptr, -1);
  xplore_service_destroy(svc);
  check(st);
  return 0;
}

int cmd_export_log(const std::string& session, const std::string& persist_dir) {
  std::string dir = persist_dir;
  if (dir.empty()) {
    const char* env = std::getenv("XPLORE_PERSIST_DIR");
    dir = env != nullptr ? env : "";
  }
  if (dir.empty()) {
    std::cerr << "error: InvalidArgument: no persistence directory (use --persist-dir or XPLORE_PERSIST_DIR)\n";
    return XPLORE_INVALID_ARGUMENT;
  }
  Owned out;
  check(xplore_export_log(dir.c_str(), session.c_str(), &out.p));
  std::cout << out.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xplore: natural-language data exploration engine"};
  app.require_subcommand(1);
  std::string dataset;
  bool as_json = false;
  app.add_option("--dataset", dataset, "Dataset manifest (default: $XPLORE_DATASET or the bundled fixture)");
  app.add_flag("--json", as_json, "Print raw JSON");

  std::string csv, config;
  auto* ingest = app.add_subcommand("ingest", "Ingest one CSV file and print its profile");
  ingest->add_option("csv", csv, "CSV file")->required();
  ingest->add_option("config", config, "Schema config JSON")->required();

  std::string question;
  std::size_t n = 3;
  auto* query = app.add_subcommand("query", "Interpret a question; print SQL and explanation");
  query->add_option("question", question, "Natural-language question")->required();
  query->add_option("--n", n, "Maximum number of interpretations")->check(CLI::PositiveNumber);

  std::string dep;
  auto* run = app.add_subcommand("run", "Run a DEP file and print per-step metrics");
  run->add_option("dep", dep, "DEP JSON file")->required();

  int port = -1;
  std::string host, engine_url, persist_dir, static_dir, serve_config;
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--port", port, "Port (default from config, 8080)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--engine-url", engine_url, "External SQL engine, e.g. sqlite::memory:");
  serve->add_option("--config", serve_config, "Service config JSON");
  serve->add_option("--persist-dir", persist_dir, "Directory for session logs");
  serve->add_option("--static-dir", static_dir, "Static assets mounted at /");

  std::string gold, log;
  auto* eval = app.add_subcommand("eval", "Score a DEP's final set against a gold set");
  eval->add_option("dep", dep, "DEP JSON file")->required();
  eval->add_option("--gold", gold, "Gold entity set JSON")->required();
  eval->add_option("--log", log, "Session log (JSON lines) for controllability");

  std::string session;
  auto* export_log = app.add_subcommand("export-log", "Print a persisted session log as JSON lines");
  export_log->add_option("session", session, "Session id")->required();
  export_log->add_option("--persist-dir", persist_dir, "Persistence directory (default $XPLORE_PERSIST_DIR)");

  std::string replay_log;
  auto* replay = app.add_subcommand("replay", "Re-execute a session log and verify its outputs");
  replay->add_option("log", replay_log, "Session log (JSON lines)")->required();

  std::size_t k = 5;
  auto* recommend = app.add_subcommand("recommend", "Print cold-start starter queries");
  recommend->add_option("--k", k, "Number of recommendations");

  CLI11_PARSE(app, argc, argv);
  const std::string manifest = dataset.empty() ? default_dataset() : dataset;

  try {
    if (*ingest) return cmd_ingest(csv, config, as_json);
    if (*query) return cmd_query(manifest, question, n, as_json);
    if (*run) return cmd_run(manifest, dep, as_json);
    if (*serve) return cmd_serve(serve_config, port, host, engine_url, persist_dir, static_dir, dataset);
    if (*eval) return cmd_eval(manifest, dep, gold, log, as_json);
    if (*export_log) return cmd_export_log(session, persist_dir);
    if (*replay) return cmd_replay(manifest, replay_log);
    if (*recommend) return cmd_recommend(manifest, k);
  } catch (const Failure& f) {
    std::cerr << "error: " << xplore_status_name(f.status) << ": " << xplore_last_error_message();
    const std::string loc = xplore_last_error_location();
    if (!loc.empty()) std::cerr << " (" << loc << ")";
    std::cerr << "\n";
    return static_cast<int>(f.status);
  }
  return 0;
}
