#include "xplore/sql_engine.hpp"

#include <sqlite3.h>

#include "xplore/error.hpp"

namespace xplore {

namespace {

class SqliteEngine final : public SqlEngine {
 public:
  explicit SqliteEngine(const std::string& path) {
    if (sqlite3_open(path.c_str(), &db_) != SQLITE_OK) {
      std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
      sqlite3_close(db_);
      db_ = nullptr;
      throw Error(ErrorCode::EngineError, "sqlite open failed: " + msg);
    }
    // LIKE must be case sensitive to agree with the in-memory 'contains'.
    exec("PRAGMA case_sensitive_like = ON");
  }
  ~SqliteEngine() override { sqlite3_close(db_); }
  SqliteEngine(const SqliteEngine&) = delete;
  SqliteEngine& operator=(const SqliteEngine&) = delete;

  void load(const Catalog& catalog) {
    exec("BEGIN");
    for (const auto& t : catalog.tables()) {
      exec("DROP TABLE IF EXISTS " + t.name());
      std::string ddl = "CREATE TABLE " + t.name() + " (";
      std::string ins = "INSERT INTO " + t.name() + " VALUES (";
      for (std::size_t c = 0; c < t.columns().size(); ++c) {
        ddl += (c ? ", " : "") + t.columns()[c].name + (t.columns()[c].kind == ColumnKind::Numeric ? " REAL" : " TEXT");
        ins += c ? ", ?" : "?";
      }
      exec(ddl + ")");
      sqlite3_stmt* stmt = prepare(ins + ")");
      for (RowId r = 0; r < t.row_count(); ++r) {
        for (std::size_t c = 0; c < t.columns().size(); ++c) {
          const Cell& cell = t.cell(r, c);
          int idx = static_cast<int>(c + 1);
          if (is_missing(cell)) sqlite3_bind_null(stmt, idx);
          else if (const auto* d = std::get_if<double>(&cell)) sqlite3_bind_double(stmt, idx, *d);
          else {
            const auto& s = std::get<std::string>(cell);
            sqlite3_bind_text(stmt, idx, s.data(), static_cast<int>(s.size()), SQLITE_TRANSIENT);
          }
        }
        if (sqlite3_step(stmt) != SQLITE_DONE) fail("insert");
        sqlite3_reset(stmt);
      }
      sqlite3_finalize(stmt);
    }
    exec("COMMIT");
  }

  ResultTable execute(const std::string& sql) override {
    sqlite3_stmt* stmt = prepare(sql);
    ResultTable out;
    int n = sqlite3_column_count(stmt);
    for (int i = 0; i < n; ++i) out.headers.emplace_back(sqlite3_column_name(stmt, i));
    int rc;
    while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
      std::vector<Cell> row;
      for (int i = 0; i < n; ++i) {
        switch (sqlite3_column_type(stmt, i)) {
          case SQLITE_NULL: row.emplace_back(std::monostate{}); break;
          case SQLITE_INTEGER:
          case SQLITE_FLOAT: row.emplace_back(sqlite3_column_double(stmt, i)); break;
          default: {
            const auto* txt = reinterpret_cast<const char*>(sqlite3_column_text(stmt, i));
            row.emplace_back(std::string(txt, static_cast<std::size_t>(sqlite3_column_bytes(stmt, i))));
          }
        }
      }
      out.rows.push_back(std::move(row));
    }
    sqlite3_finalize(stmt);
    if (rc != SQLITE_DONE) fail("execute");
    return out;
  }

  std::string name() const override { return "sqlite"; }

 private:
  [[noreturn]] void fail(const std::string& what) {
    throw Error(ErrorCode::EngineError, "sqlite " + what + " failed: " + sqlite3_errmsg(db_));
  }

  void exec(const std::string& sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown error";
      sqlite3_free(err);
      throw Error(ErrorCode::EngineError, "sqlite: " + msg + " in: " + sql);
    }
  }

  sqlite3_stmt* prepare(const std::string& sql) {
    sqlite3_stmt* stmt = nullptr;
    if (sqlite3_prepare_v2(db_, sql.c_str(), static_cast<int>(sql.size()), &stmt, nullptr) != SQLITE_OK) {
      throw Error(ErrorCode::EngineError, std::string("sqlite prepare failed: ") + sqlite3_errmsg(db_) + " in: " + sql);
    }
    return stmt;
  }

  sqlite3* db_ = nullptr;
};

}  // namespace

std::unique_ptr<SqlEngine> open_engine(const std::string& url, const Catalog& catalog) {
  if (url.empty()) return nullptr;
  constexpr std::string_view scheme = "sqlite:";
  if (url.rfind(scheme, 0) != 0) throw Error(ErrorCode::EngineError, "unsupported engine URL '" + url + "'");
  std::string path = url.substr(scheme.size());
  if (path.empty()) throw Error(ErrorCode::EngineError, "engine URL '" + url + "' has no database path");
  auto engine = std::make_unique<SqliteEngine>(path);
  engine->load(catalog);
  return engine;
}

}  // namespace xplore
