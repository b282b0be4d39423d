#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xplore/catalog.hpp"

namespace xplore {

enum class NodeKind { Table, Attribute };

struct SchemaNode {
  NodeKind kind = NodeKind::Table;
  std::string table;
  std::string column;   // empty for table nodes
  std::string display;  // preferred label for explanations
  std::size_t owner = 0;  // membership edge target (attribute nodes only)
  bool identifier = false;
};

struct JoinEdge {
  std::string from;
  std::string to;
  std::vector<std::pair<std::string, std::string>> keys;  // (from column, to column)

  // Same edge walked from `start`; keys swap sides when walking backwards.
  JoinEdge oriented_from(std::string_view start) const;
  bool touches(std::string_view table) const { return from == table || to == table; }
  bool operator==(const JoinEdge&) const = default;
};

struct ValueRef {
  std::string table;
  std::string column;
  std::string value;
  bool operator==(const ValueRef&) const = default;
};

struct GraphConfig {
  std::vector<SynonymDef> synonyms;
  std::vector<JoinDef> joins;

  // Union of the synonyms and joins declared in every table schema.
  static GraphConfig from_catalog(const Catalog& catalog);
};

class SchemaGraph {
 public:
  const std::vector<SchemaNode>& nodes() const noexcept { return nodes_; }
  const std::vector<JoinEdge>& joins() const noexcept { return joins_; }

  std::optional<std::size_t> table_node(std::string_view table) const;
  std::optional<std::size_t> attribute_node(std::string_view table, std::string_view column) const;
  bool is_identifier(std::string_view table, std::string_view column) const;
  const std::string& display_of(std::string_view table, std::string_view column = {}) const;

  // Exact lookup of a normalized term; throws UnknownTerm when absent.
  std::span<const std::size_t> resolve(std::string_view term) const;
  const std::vector<std::size_t>* lookup(std::string_view normalized_term) const;
  const std::vector<ValueRef>* lookup_value(std::string_view normalized_term) const;
  const std::map<std::string, std::vector<std::size_t>>& vocabulary() const noexcept { return vocabulary_; }
  const std::map<std::string, std::vector<ValueRef>>& values() const noexcept { return values_; }

  // Join edges touching `table`, in declaration order.
  std::vector<const JoinEdge*> incident(std::string_view table) const;
  const JoinEdge* edge_between(std::string_view a, std::string_view b) const;
  // Fewest-edges path, oriented from `from`; ties go to the earlier-declared
  // edge. nullopt when unreachable.
  std::optional<std::vector<JoinEdge>> shortest_path(std::string_view from, std::string_view to) const;

 private:
  friend SchemaGraph build_schema_graph(const Catalog&, const GraphConfig&);

  std::vector<SchemaNode> nodes_;
  std::vector<JoinEdge> joins_;
  std::map<std::string, std::vector<std::size_t>> vocabulary_;
  std::map<std::string, std::vector<ValueRef>> values_;
};

// Value dictionary entries come from categorical column values plus
// "table.column=value" synonyms.
SchemaGraph build_schema_graph(const Catalog& catalog, const GraphConfig& config);

}  // namespace xplore
