#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "xplore/entity_set.hpp"
#include "xplore/query_ast.hpp"
#include "xplore/schema_graph.hpp"

namespace xplore {

// Clause templates keyed by clause kind. Slots: {table} {attribute} {value} {fn}.
class TemplateSet {
 public:
  static TemplateSet defaults();
  // {clause_kind: template_text}; keys override the defaults only when
  // `merge_defaults` is set.
  static TemplateSet from_json(const nlohmann::json& j, bool merge_defaults = false);
  nlohmann::json to_json() const;

  // Throws MissingTemplate.
  const std::string& get(const std::string& kind) const;
  const std::string* find(const std::string& kind) const;

  // Clause kinds the query AST can produce; all must be present.
  static const std::vector<std::string>& required_kinds();
  void check_complete() const;

 private:
  std::map<std::string, std::string> templates_;
};

struct Explanation {
  std::string text;
  // Slot fills in emission order, so tests can check each one against the AST.
  std::vector<std::pair<std::string, std::string>> slots;
};

Explanation explain_query_detailed(const QueryAst& ast, const SchemaGraph& graph, const TemplateSet& templates);
std::string explain_query(const QueryAst& ast, const SchemaGraph& graph, const TemplateSet& templates);

// Same table: RCC relation in words. Different tables: the join path phrase.
std::string explain_relation(const EntitySet& a, const EntitySet& b, const SchemaGraph& graph,
                             const TemplateSet& templates);

}  // namespace xplore
