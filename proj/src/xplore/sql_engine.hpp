#pragma once

#include <memory>
#include <string>

#include "xplore/catalog.hpp"
#include "xplore/evaluator.hpp"

namespace xplore {

// External relational engine executing emitted SQL text.
class SqlEngine {
 public:
  virtual ~SqlEngine() = default;
  virtual ResultTable execute(const std::string& sql) = 0;
  virtual std::string name() const = 0;
};

// Opens an engine by URL and loads the catalog into it. Supported:
// "sqlite::memory:" and "sqlite:<path>". Returns nullptr for an empty URL;
// throws EngineError for unsupported schemes.
std::unique_ptr<SqlEngine> open_engine(const std::string& url, const Catalog& catalog);

}  // namespace xplore
