#ifndef XPLORE_XPLORE_H
#define XPLORE_XPLORE_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(XPLORE_BUILDING)
#    define XPLORE_API __declspec(dllexport)
#  else
#    define XPLORE_API __declspec(dllimport)
#  endif
#else
#  define XPLORE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Values match the library's internal error codes. */
typedef enum xplore_status {
  XPLORE_OK = 0,
  XPLORE_MALFORMED_CSV = 1,
  XPLORE_TYPE_COERCION = 2,
  XPLORE_DUPLICATE_IDENTIFIER = 3,
  XPLORE_INVALID_CONFIG = 4,
  XPLORE_UNKNOWN_TABLE = 5,
  XPLORE_UNKNOWN_COLUMN = 6,
  XPLORE_UNKNOWN_COLUMN_IN_SYNONYM = 7,
  XPLORE_UNKNOWN_JOIN_KEY = 8,
  XPLORE_UNKNOWN_TERM = 9,
  XPLORE_BASE_TABLE_MISMATCH = 10,
  XPLORE_BOTH_EMPTY = 11,
  XPLORE_UNKNOWN_SET_ID = 12,
  XPLORE_INVALID_ARGUMENT = 13,
  XPLORE_UNKNOWN_ATTRIBUTE = 14,
  XPLORE_TYPE_MISMATCH = 15,
  XPLORE_NON_CATEGORICAL_ATTRIBUTE = 16,
  XPLORE_EMPTY_EXAMPLES = 17,
  XPLORE_NO_NUMERIC_FEATURES = 18,
  XPLORE_MISSING_TAXONOMY = 19,
  XPLORE_BROKEN_JOIN_PATH = 20,
  XPLORE_EMPTY_DISTRIBUTION = 21,
  XPLORE_INVALID_AST = 22,
  XPLORE_MISSING_IDENTIFIER_PROJECTION = 23,
  XPLORE_SET_TOO_LARGE_FOR_IN_LIST = 24,
  XPLORE_NO_INTERPRETATION = 25,
  XPLORE_MISSING_TEMPLATE = 26,
  XPLORE_NO_PATH_BETWEEN_TABLES = 27,
  XPLORE_EMPTY_SESSION = 28,
  XPLORE_UNKNOWN_OPERATOR = 29,
  XPLORE_STEP_FAILURE = 30,
  XPLORE_EMPTY_GOLD = 31,
  XPLORE_REPLAY_DIVERGENCE = 32,
  XPLORE_UNKNOWN_VERSION = 33,
  XPLORE_SCHEMA_VIOLATION = 34,
  XPLORE_UNKNOWN_SESSION = 35,
  XPLORE_UNKNOWN_STEP = 36,
  XPLORE_UNKNOWN_ROUTE = 37,
  XPLORE_CONCURRENT_MUTATION = 38,
  XPLORE_ENGINE_ERROR = 39,
  XPLORE_IO_ERROR = 40,
  XPLORE_INTERNAL = 41,
} xplore_status;

typedef struct xplore_dataset xplore_dataset;
typedef struct xplore_service xplore_service;

XPLORE_API const char* xplore_version(void);
XPLORE_API const char* xplore_status_name(xplore_status status);

/* Details of the last failure on the calling thread; empty after success. */
XPLORE_API const char* xplore_last_error_message(void);
XPLORE_API const char* xplore_last_error_location(void);
/* {"code", "message", "location"?} */
XPLORE_API const char* xplore_last_error_json(void);

/* Every char** out-parameter receives a heap string owned by the caller. */
XPLORE_API void xplore_string_free(char* s);

/* Datasets */
XPLORE_API xplore_status xplore_dataset_open(const char* manifest_path, xplore_dataset** out);
XPLORE_API xplore_status xplore_dataset_from_csv(const char* csv_path, const char* schema_path, xplore_dataset** out);
XPLORE_API void xplore_dataset_close(xplore_dataset* dataset);
/* Tables, columns, join edges, vocabulary size and column profiles as JSON. */
XPLORE_API xplore_status xplore_dataset_describe(const xplore_dataset* dataset, char** out_json);

/* Ranked interpretations with SQL and NL explanation: {"interpretations": [...]}. */
XPLORE_API xplore_status xplore_query(const xplore_dataset* dataset, const char* question, size_t n, char** out_json);
XPLORE_API xplore_status xplore_compile_sql(const xplore_dataset* dataset, const char* ast_json, char** out_sql);
XPLORE_API xplore_status xplore_explain(const xplore_dataset* dataset, const char* ast_json, char** out_text);
/* Evaluates a query AST in memory: {"headers", "rows"}. */
XPLORE_API xplore_status xplore_evaluate(const xplore_dataset* dataset, const char* ast_json, char** out_json);

/* Runs a DEP. On XPLORE_STEP_FAILURE *out_json still holds the outputs of the
   steps before the failing one, the metrics and a "failure" object. */
XPLORE_API xplore_status xplore_run_dep(const xplore_dataset* dataset, const char* dep_json, char** out_json);

/* Runs a DEP and scores the last set-valued output against a gold entity set
   ({"base_table", "ids"}). log_jsonl may be NULL; when given, the result also
   carries the session's controllability. */
XPLORE_API xplore_status xplore_eval(const xplore_dataset* dataset, const char* dep_json, const char* gold_json,
                                     const char* log_jsonl, char** out_json);

/* Re-executes a recorded session log; XPLORE_REPLAY_DIVERGENCE on mismatch. */
XPLORE_API xplore_status xplore_replay(const xplore_dataset* dataset, const char* log_jsonl, char** out_json);

XPLORE_API xplore_status xplore_cold_start(const xplore_dataset* dataset, size_t k, char** out_json);

/* Service. config_json may be NULL for defaults; XPLORE_* environment
   variables are applied on top. */
XPLORE_API xplore_status xplore_service_create(const char* config_json, const char* config_base_dir,
                                               xplore_service** out);
XPLORE_API void xplore_service_destroy(xplore_service* service);
/* Effective configuration after environment overrides. */
XPLORE_API xplore_status xplore_service_config(const xplore_service* service, char** out_json);
/* Handles one request without a socket. target may carry a query string. */
XPLORE_API xplore_status xplore_service_handle(xplore_service* service, const char* method, const char* target,
                                               const char* body, int* out_http_status, char** out_body);
/* Serves HTTP in a background thread; port 0 picks a free port. A NULL host or
   a negative port means the configured value. */
XPLORE_API xplore_status xplore_service_start(xplore_service* service, const char* host, int port, int* out_port);
/* Serves HTTP on the calling thread until the process is stopped. */
XPLORE_API xplore_status xplore_service_run(xplore_service* service, const char* host, int port);
XPLORE_API xplore_status xplore_service_stop(xplore_service* service);

/* Reads a persisted session log (JSON lines) from a persistence directory. */
XPLORE_API xplore_status xplore_export_log(const char* persist_dir, const char* session_id, char** out_jsonl);

#ifdef __cplusplus
}
#endif

#endif
