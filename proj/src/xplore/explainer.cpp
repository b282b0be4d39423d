#include "xplore/explainer.hpp"

#include <cctype>

#include "xplore/error.hpp"

namespace xplore {

using nlohmann::json;

TemplateSet TemplateSet::defaults() {
  TemplateSet t;
  t.templates_ = {
      {"source", "Find all {table}"},
      {"source_filtered", "Find {table}"},
      {"filter_lead", "whose"},
      {"filter.=", "{attribute} is {value}"},
      {"filter.!=", "{attribute} is not {value}"},
      {"filter.<", "{attribute} is less than {value}"},
      {"filter.<=", "{attribute} is at most {value}"},
      {"filter.>", "{attribute} is greater than {value}"},
      {"filter.>=", "{attribute} is at least {value}"},
      {"filter.contains", "{attribute} contains {value}"},
      {"group", "grouped by {attribute}"},
      {"aggregate.count_star", "Count {table}"},
      {"aggregate.count", "Count the {attribute} values of {table}"},
      {"aggregate.sum", "Find the total {attribute} of {table}"},
      {"aggregate.avg", "Find the average {attribute} of {table}"},
      {"aggregate.min", "Find the minimum {attribute} of {table}"},
      {"aggregate.max", "Find the maximum {attribute} of {table}"},
      {"join", "related to {table}"},
      {"projection", "with their {attribute}"},
      {"order", "ordered by {attribute}"},
      {"limit", "limited to {value} rows"},
      {"relation.eq", "The two sets are identical."},
      {"relation.dr", "The two sets are disjoint."},
      {"relation.po", "The two sets overlap in {value}."},
      {"relation.pp", "The first set is contained in the second."},
      {"relation.ppi", "The first set contains the second."},
      {"relation.path", "The {table} sets are related through {value}."},
      {"relation.direct", "The {table} sets are directly related."},
  };
  return t;
}

TemplateSet TemplateSet::from_json(const json& j, bool merge_defaults) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "template file must be a JSON object");
  TemplateSet t = merge_defaults ? defaults() : TemplateSet{};
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw Error(ErrorCode::InvalidConfig, "template '" + k + "' must be a string");
    t.templates_[k] = v.get<std::string>();
  }
  return t;
}

json TemplateSet::to_json() const { return json(templates_); }

const std::string* TemplateSet::find(const std::string& kind) const {
  auto it = templates_.find(kind);
  return it == templates_.end() ? nullptr : &it->second;
}

const std::string& TemplateSet::get(const std::string& kind) const {
  if (const auto* t = find(kind)) return *t;
  throw Error(ErrorCode::MissingTemplate, "no template for clause kind '" + kind + "'");
}

const std::vector<std::string>& TemplateSet::required_kinds() {
  static const std::vector<std::string> kinds = [] {
    std::vector<std::string> k;
    for (const auto& [name, text] : defaults().templates_) k.push_back(name);
    return k;
  }();
  return kinds;
}

void TemplateSet::check_complete() const {
  for (const auto& k : required_kinds()) get(k);
}

namespace {

class Builder {
 public:
  Builder(const TemplateSet& templates, Explanation& out) : templates_(templates), out_(out) {}

  // Fills the named template; only slots in `fills` may appear.
  std::string fill(const std::string& kind, const std::vector<std::pair<std::string, std::string>>& fills) {
    const std::string& tpl = templates_.get(kind);
    std::string result;
    for (std::size_t i = 0; i < tpl.size();) {
      if (tpl[i] == '{') {
        auto close = tpl.find('}', i);
        if (close != std::string::npos) {
          std::string slot = tpl.substr(i + 1, close - i - 1);
          bool done = false;
          for (const auto& [name, value] : fills) {
            if (name == slot) {
              result += value;
              out_.slots.emplace_back(name, value);
              done = true;
              break;
            }
          }
          if (!done) throw Error(ErrorCode::MissingTemplate, "template '" + kind + "' uses unfilled slot {" + slot + "}");
          i = close + 1;
          continue;
        }
      }
      result += tpl[i++];
    }
    return result;
  }

 private:
  const TemplateSet& templates_;
  Explanation& out_;
};

std::string sentence_case(std::string s, bool upper) {
  if (!s.empty()) {
    auto c = static_cast<unsigned char>(s[0]);
    s[0] = static_cast<char>(upper ? std::toupper(c) : std::tolower(c));
  }
  return s;
}

std::string literal_text(const Literal& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
  return std::get<std::string>(v);
}

std::string attribute_label(const ColumnRef& c, const QueryAst& ast, const SchemaGraph& graph) {
  const std::string& name = graph.display_of(c.table, c.column);
  if (c.table == ast.source) return name;
  return graph.display_of(c.table) + " " + name;
}

}  // namespace

Explanation explain_query_detailed(const QueryAst& ast, const SchemaGraph& graph, const TemplateSet& templates) {
  Explanation out;
  Builder b(templates, out);
  const std::string source = graph.display_of(ast.source);

  std::string text;
  if (!ast.aggregates.empty()) {
    for (std::size_t i = 0; i < ast.aggregates.size(); ++i) {
      const auto& ag = ast.aggregates[i];
      std::string phrase;
      if (!ag.column) {
        phrase = b.fill("aggregate.count_star", {{"table", source}, {"fn", "count"}});
      } else {
        phrase = b.fill("aggregate." + std::string(aggregate_name(ag.fn)),
                        {{"table", source}, {"attribute", attribute_label(*ag.column, ast, graph)},
                         {"fn", std::string(aggregate_name(ag.fn))}});
      }
      text += i == 0 ? phrase : " and " + sentence_case(phrase, false);
    }
  } else if (ast.group_by) {
    text = b.fill("source", {{"table", source}});
  } else {
    text = b.fill(ast.filter.empty() ? "source" : "source_filtered", {{"table", source}});
  }

  for (const auto& j : ast.joins) {
    std::string kind = "join." + j.left_table + "." + j.right_table;
    if (templates.find(kind) == nullptr) kind = "join";
    text += " " + b.fill(kind, {{"table", graph.display_of(j.right_table)}});
  }

  if (!ast.filter.empty()) {
    text += " " + templates.get("filter_lead");
    for (std::size_t i = 0; i < ast.filter.size(); ++i) {
      const auto& c = ast.filter[i];
      text += (i == 0 ? " " : " and ") +
              b.fill("filter." + std::string(compare_op_symbol(c.op)),
                     {{"attribute", attribute_label(c.column, ast, graph)}, {"value", literal_text(c.value)}});
    }
  }

  if (!ast.is_aggregate() && ast.projection) {
    // The source identifier is implied by "Find ... {table}".
    std::string shown;
    for (const auto& p : *ast.projection) {
      if (p.table == ast.source && graph.is_identifier(p.table, p.column)) continue;
      shown += (shown.empty() ? "" : " and ") + attribute_label(p, ast, graph);
    }
    if (!shown.empty()) text += " " + b.fill("projection", {{"attribute", shown}});
  }

  if (ast.group_by) text += " " + b.fill("group", {{"attribute", attribute_label(*ast.group_by, ast, graph)}});
  if (ast.order_by && !ast.group_by) {
    text += " " + b.fill("order", {{"attribute", attribute_label(ast.order_by->column, ast, graph)}});
  }
  if (ast.limit) text += " " + b.fill("limit", {{"value", std::to_string(*ast.limit)}});

  out.text = sentence_case(text, true) + ".";
  return out;
}

std::string explain_query(const QueryAst& ast, const SchemaGraph& graph, const TemplateSet& templates) {
  return explain_query_detailed(ast, graph, templates).text;
}

std::string explain_relation(const EntitySet& a, const EntitySet& b, const SchemaGraph& graph,
                             const TemplateSet& templates) {
  Explanation sink;
  Builder builder(templates, sink);
  if (a.base_table() == b.base_table()) {
    switch (rcc_relation(a, b)) {
      case RccRelation::EQ: return templates.get("relation.eq");
      case RccRelation::DR: return templates.get("relation.dr");
      case RccRelation::PP: return templates.get("relation.pp");
      case RccRelation::PPi: return templates.get("relation.ppi");
      case RccRelation::PO: {
        auto n = intersection_size(a, b);
        return builder.fill("relation.po", {{"value", std::to_string(n) + (n == 1 ? " item" : " items")}});
      }
    }
  }
  auto path = graph.shortest_path(a.base_table(), b.base_table());
  if (!path) {
    throw Error(ErrorCode::NoPathBetweenTables, "no join path between " + a.base_table() + " and " + b.base_table());
  }
  const std::string pair = graph.display_of(a.base_table()) + " and " + graph.display_of(b.base_table());
  if (path->size() == 1) return builder.fill("relation.direct", {{"table", pair}});
  std::string via;
  for (std::size_t i = 0; i + 1 < path->size(); ++i) {
    via += (i ? " and " : "") + graph.display_of((*path)[i].to);
  }
  return builder.fill("relation.path", {{"table", pair}, {"value", via}});
}

}  // namespace xplore
