#include "xplore/schema_graph.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "xplore/error.hpp"
#include "xplore/text.hpp"

namespace xplore {

JoinEdge JoinEdge::oriented_from(std::string_view start) const {
  if (from == start) return *this;
  JoinEdge e{to, from, {}};
  for (const auto& [a, b] : keys) e.keys.emplace_back(b, a);
  return e;
}

GraphConfig GraphConfig::from_catalog(const Catalog& catalog) {
  GraphConfig g;
  for (const auto& s : catalog.schemas()) {
    g.synonyms.insert(g.synonyms.end(), s.synonyms.begin(), s.synonyms.end());
    g.joins.insert(g.joins.end(), s.joins.begin(), s.joins.end());
  }
  return g;
}

std::optional<std::size_t> SchemaGraph::table_node(std::string_view table) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == NodeKind::Table && nodes_[i].table == table) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> SchemaGraph::attribute_node(std::string_view table, std::string_view column) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == NodeKind::Attribute && nodes_[i].table == table && nodes_[i].column == column) return i;
  }
  return std::nullopt;
}

bool SchemaGraph::is_identifier(std::string_view table, std::string_view column) const {
  auto idx = attribute_node(table, column);
  return idx && nodes_[*idx].identifier;
}

const std::string& SchemaGraph::display_of(std::string_view table, std::string_view column) const {
  auto idx = column.empty() ? table_node(table) : attribute_node(table, column);
  if (!idx) {
    throw Error(ErrorCode::UnknownAttribute,
                "no schema node for " + std::string(table) + (column.empty() ? "" : "." + std::string(column)));
  }
  return nodes_[*idx].display;
}

std::span<const std::size_t> SchemaGraph::resolve(std::string_view term) const {
  const auto* hit = lookup(text::normalize_term(term));
  if (hit == nullptr) throw Error(ErrorCode::UnknownTerm, "term '" + std::string(term) + "' is not in the vocabulary");
  return *hit;
}

const std::vector<std::size_t>* SchemaGraph::lookup(std::string_view normalized_term) const {
  auto it = vocabulary_.find(std::string(normalized_term));
  return it == vocabulary_.end() ? nullptr : &it->second;
}

const std::vector<ValueRef>* SchemaGraph::lookup_value(std::string_view normalized_term) const {
  auto it = values_.find(std::string(normalized_term));
  return it == values_.end() ? nullptr : &it->second;
}

std::vector<const JoinEdge*> SchemaGraph::incident(std::string_view table) const {
  std::vector<const JoinEdge*> out;
  for (const auto& e : joins_) {
    if (e.touches(table)) out.push_back(&e);
  }
  return out;
}

const JoinEdge* SchemaGraph::edge_between(std::string_view a, std::string_view b) const {
  for (const auto& e : joins_) {
    if ((e.from == a && e.to == b) || (e.from == b && e.to == a)) return &e;
  }
  return nullptr;
}

std::optional<std::vector<JoinEdge>> SchemaGraph::shortest_path(std::string_view from, std::string_view to) const {
  if (from == to) return std::vector<JoinEdge>{};
  std::map<std::string, std::pair<std::string, const JoinEdge*>> parent;
  std::deque<std::string> queue{std::string(from)};
  parent[std::string(from)] = {"", nullptr};
  while (!queue.empty()) {
    std::string cur = queue.front();
    queue.pop_front();
    for (const auto* e : incident(cur)) {
      const std::string& next = e->from == cur ? e->to : e->from;
      if (parent.count(next)) continue;
      parent[next] = {cur, e};
      if (next == to) {
        std::vector<JoinEdge> path;
        std::string at = next;
        while (at != from) {
          const auto& [prev, edge] = parent[at];
          path.push_back(edge->oriented_from(prev));
          at = prev;
        }
        std::reverse(path.begin(), path.end());
        return path;
      }
      queue.push_back(next);
    }
  }
  return std::nullopt;
}

namespace {

void add_term(std::map<std::string, std::vector<std::size_t>>& vocab, const std::string& term, std::size_t node) {
  auto key = text::normalize_term(term);
  if (key.empty()) return;
  auto& slot = vocab[key];
  if (std::find(slot.begin(), slot.end(), node) == slot.end()) slot.push_back(node);
}

void add_value(std::map<std::string, std::vector<ValueRef>>& values, const std::string& term, ValueRef ref) {
  auto key = text::normalize_term(term);
  if (key.empty()) return;
  auto& slot = values[key];
  if (std::find(slot.begin(), slot.end(), ref) == slot.end()) slot.push_back(std::move(ref));
}

}  // namespace

SchemaGraph build_schema_graph(const Catalog& catalog, const GraphConfig& config) {
  if (catalog.empty()) throw Error(ErrorCode::InvalidArgument, "cannot build a schema graph over an empty catalog");
  SchemaGraph g;
  for (const auto& t : catalog.tables()) {
    std::size_t tn = g.nodes_.size();
    g.nodes_.push_back({NodeKind::Table, t.name(), "", t.name(), 0});
    add_term(g.vocabulary_, t.name(), tn);
    for (const auto& c : t.columns()) {
      std::size_t an = g.nodes_.size();
      g.nodes_.push_back({NodeKind::Attribute, t.name(), c.name, c.name, tn, c.kind == ColumnKind::Identifier});
      add_term(g.vocabulary_, c.name, an);
    }
  }
  // categorical value dictionary
  for (const auto& t : catalog.tables()) {
    for (std::size_t c = 0; c < t.columns().size(); ++c) {
      if (t.columns()[c].kind != ColumnKind::Categorical) continue;
      for (const auto& cell : t.column_data(c)) {
        if (const auto* s = std::get_if<std::string>(&cell)) add_value(g.values_, *s, {t.name(), t.columns()[c].name, *s});
      }
    }
  }

  for (const auto& syn : config.synonyms) {
    const std::string& target = syn.target;
    auto dot = target.find('.');
    auto eq = target.find('=');
    std::string table = target.substr(0, std::min(dot, eq));
    const Table* t = catalog.find(table);
    if (t == nullptr) {
      throw Error(ErrorCode::UnknownColumnInSynonym, "synonym '" + syn.term + "' targets unknown table '" + table + "'");
    }
    if (dot == std::string::npos) {
      auto node = *g.table_node(table);
      add_term(g.vocabulary_, syn.term, node);
      if (syn.display) g.nodes_[node].display = syn.term;
      continue;
    }
    std::string column = target.substr(dot + 1, eq == std::string::npos ? std::string::npos : eq - dot - 1);
    if (!t->find_column(column)) {
      throw Error(ErrorCode::UnknownColumnInSynonym,
                  "synonym '" + syn.term + "' targets unknown column '" + table + "." + column + "'");
    }
    if (eq == std::string::npos) {
      auto node = *g.attribute_node(table, column);
      add_term(g.vocabulary_, syn.term, node);
      if (syn.display) g.nodes_[node].display = syn.term;
    } else {
      add_value(g.values_, syn.term, {table, column, target.substr(eq + 1)});
    }
  }

  std::set<std::pair<std::string, std::string>> seen_edges;
  for (const auto& j : config.joins) {
    const Table* a = catalog.find(j.from);
    const Table* b = catalog.find(j.to);
    if (a == nullptr || b == nullptr) {
      throw Error(ErrorCode::UnknownJoinKey, "join " + j.from + "->" + j.to + " references an unknown table");
    }
    for (const auto& [fc, tc] : j.keys) {
      if (!a->find_column(fc) || !b->find_column(tc)) {
        throw Error(ErrorCode::UnknownJoinKey, "join " + j.from + "->" + j.to + " key (" + fc + ", " + tc + ") is unknown");
      }
    }
    auto key = std::minmax(j.from, j.to);
    if (!seen_edges.insert({key.first, key.second}).second) continue;
    g.joins_.push_back({j.from, j.to, j.keys});
  }
  return g;
}

}  // namespace xplore
