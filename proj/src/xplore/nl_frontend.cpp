#include "xplore/nl_frontend.hpp"

#include <algorithm>
#include <map>

#include "xplore/error.hpp"

namespace xplore {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxSpan = 3;

const std::set<std::string> kGroupWords{"by", "per", "each"};
const std::map<std::string, AggregateFn> kAggregateWords{
    {"count", AggregateFn::Count},   {"number", AggregateFn::Count},  {"many", AggregateFn::Count},
    {"total", AggregateFn::Sum},     {"sum", AggregateFn::Sum},       {"average", AggregateFn::Avg},
    {"avg", AggregateFn::Avg},       {"mean", AggregateFn::Avg},      {"minimum", AggregateFn::Min},
    {"min", AggregateFn::Min},       {"lowest", AggregateFn::Min},    {"smallest", AggregateFn::Min},
    {"maximum", AggregateFn::Max},   {"max", AggregateFn::Max},       {"highest", AggregateFn::Max},
    {"largest", AggregateFn::Max},
};
const std::map<std::string, CompareOp> kComparatorWords{
    {"over", CompareOp::Gt},   {"above", CompareOp::Gt}, {"greater", CompareOp::Gt}, {"more", CompareOp::Gt},
    {"after", CompareOp::Gt},  {"exceeding", CompareOp::Gt}, {"under", CompareOp::Lt}, {"below", CompareOp::Lt},
    {"less", CompareOp::Lt},   {"fewer", CompareOp::Lt}, {"before", CompareOp::Lt},  {"least", CompareOp::Ge},
    {"most", CompareOp::Le},
};
const std::set<std::string> kFillerWords{"than", "at", "is", "of", "the"};

std::optional<AggregateFn> aggregate_word(const text::Token& t) {
  auto it = kAggregateWords.find(t.normalized);
  if (it == kAggregateWords.end()) return std::nullopt;
  return it->second;
}

}  // namespace

NlConfig NlConfig::from_json(const json& j) {
  NlConfig c;
  if (!j.is_object()) return c;
  if (j.contains("stopwords")) c.stopwords = j["stopwords"].get<std::set<std::string>>();
  c.match_weight = j.value("match_weight", c.match_weight);
  c.join_weight = j.value("join_weight", c.join_weight);
  c.max_combinations = j.value("max_combinations", c.max_combinations);
  return c;
}

json Binding::to_json() const {
  static constexpr const char* kinds[] = {"table", "attribute", "value"};
  static constexpr const char* roles[] = {"plain", "group", "aggregate", "filter"};
  json j{{"span", {begin, end}},
         {"term", term},
         {"kind", kinds[static_cast<int>(kind)]},
         {"table", table},
         {"role", roles[static_cast<int>(role)]}};
  if (!column.empty()) j["column"] = column;
  if (filter) j["filter"] = comparison_to_json(*filter);
  if (aggregate) j["aggregate"] = aggregate_name(*aggregate);
  return j;
}

json Interpretation::to_json() const {
  json b = json::array();
  for (const auto& x : bindings) b.push_back(x.to_json());
  return {{"ast", ast.to_json()}, {"score", score}, {"bindings", b}, {"unmatched", unmatched}, {"join_edges", join_edges}};
}

text::TokenStream normalize(std::string_view question, const NlConfig& config) {
  return text::tokenize(question, config.stopwords);
}

TermMatches match_terms(const text::TokenStream& tokens, const SchemaGraph& graph, const Catalog& catalog) {
  TermMatches out;
  std::vector<bool> consumed(tokens.size(), false);

  for (std::size_t i = 0; i < tokens.size();) {
    if (tokens[i].stopword || tokens[i].numeric) {
      ++i;
      continue;
    }
    bool hit = false;
    for (std::size_t len = std::min(kMaxSpan, tokens.size() - i); len >= 1 && !hit; --len) {
      std::size_t end = i + len;
      if (tokens[end - 1].stopword) continue;
      std::string key;
      for (std::size_t k = i; k < end; ++k) key += (k > i ? " " : "") + tokens[k].stem;
      CandidateSpan span{i, end, {}};
      if (const auto* nodes = graph.lookup(key)) {
        for (auto n : *nodes) {
          const auto& node = graph.nodes()[n];
          Binding b{i, end, key, node.kind == NodeKind::Table ? BindingKind::Table : BindingKind::Attribute,
                    node.table, node.column};
          span.options.push_back(std::move(b));
        }
      }
      if (const auto* values = graph.lookup_value(key)) {
        for (const auto& v : *values) {
          Binding b{i, end, key, BindingKind::Value, v.table, v.column, BindingRole::Filter};
          b.filter = Comparison{{v.table, v.column}, CompareOp::Eq, v.value};
          span.options.push_back(std::move(b));
        }
      }
      if (!span.options.empty()) {
        for (std::size_t k = i; k < end; ++k) consumed[k] = true;
        out.spans.push_back(std::move(span));
        i = end;
        hit = true;
      }
    }
    if (!hit) ++i;
  }

  // Context roles for attribute options.
  for (auto& span : out.spans) {
    bool grouped = span.begin >= 1 && kGroupWords.count(tokens[span.begin - 1].normalized);
    std::optional<AggregateFn> agg;
    for (std::size_t back = 1; back <= 2 && back <= span.begin; ++back) {
      const auto& t = tokens[span.begin - back];
      if (auto fn = aggregate_word(t); fn && *fn != AggregateFn::Count) {
        agg = fn;
        break;
      }
      if (!t.stopword) break;
    }
    // ATTR [filler] COMPARATOR [than] NUMBER
    std::optional<CompareOp> cmp;
    std::optional<std::size_t> number_at;
    std::size_t k = span.end;
    while (k < tokens.size() && k < span.end + 4 && kFillerWords.count(tokens[k].normalized)) ++k;
    if (k < tokens.size()) {
      if (auto it = kComparatorWords.find(tokens[k].normalized); it != kComparatorWords.end()) {
        std::size_t m = k + 1;
        while (m < tokens.size() && kFillerWords.count(tokens[m].normalized)) ++m;
        if (m < tokens.size() && tokens[m].numeric && !consumed[m]) {
          cmp = it->second;
          number_at = m;
        }
      }
    }
    bool numeric_option = false;
    for (const auto& b : span.options) {
      if (b.kind == BindingKind::Attribute && catalog.table(b.table).column(b.column).kind == ColumnKind::Numeric) {
        numeric_option = true;
      }
    }
    if (cmp && numeric_option) {
      std::vector<Binding> kept;
      for (auto& b : span.options) {
        if (b.kind != BindingKind::Attribute || catalog.table(b.table).column(b.column).kind != ColumnKind::Numeric) continue;
        b.role = BindingRole::Filter;
        b.end = *number_at + 1;
        b.filter = Comparison{{b.table, b.column}, *cmp, *parse_decimal(tokens[*number_at].normalized)};
        kept.push_back(std::move(b));
      }
      span.options = std::move(kept);
      span.end = *number_at + 1;
      consumed[*number_at] = true;
      continue;
    }
    for (auto& b : span.options) {
      if (b.kind != BindingKind::Attribute) continue;
      if (grouped) b.role = BindingRole::GroupKey;
      else if (agg) {
        b.role = BindingRole::Aggregate;
        b.aggregate = agg;
      }
    }
  }

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (aggregate_word(tokens[i]) == AggregateFn::Count && !out.count_star_at) out.count_star_at = i;
    if (!tokens[i].stopword && !consumed[i]) out.unmatched.push_back(i);
  }
  return out;
}

namespace {

struct Assembly {
  QueryAst ast;
  std::size_t edges = 0;
};

std::optional<Assembly> assemble(const std::vector<Binding>& chosen, std::optional<std::size_t> count_star_at,
                                 const SchemaGraph& graph, const Catalog& catalog) {
  Assembly out;
  QueryAst& ast = out.ast;
  auto first_table = std::find_if(chosen.begin(), chosen.end(), [](const Binding& b) { return b.kind == BindingKind::Table; });
  ast.source = first_table != chosen.end() ? first_table->table : chosen.front().table;

  // Steiner heuristic: attach each terminal through its shortest path to the tree.
  std::vector<std::string> tree{ast.source};
  for (const auto& b : chosen) {
    if (std::find(tree.begin(), tree.end(), b.table) != tree.end()) continue;
    std::optional<std::vector<JoinEdge>> best;
    for (const auto& t : tree) {
      auto path = graph.shortest_path(t, b.table);
      if (path && (!best || path->size() < best->size())) best = std::move(path);
    }
    if (!best) return std::nullopt;
    for (const auto& e : *best) {
      ast.joins.push_back({e.from, e.to, e.keys});
      tree.push_back(e.to);
    }
  }
  out.edges = ast.joins.size();

  std::vector<ColumnRef> plain;
  std::vector<std::pair<std::size_t, Aggregate>> aggregates;
  if (count_star_at) aggregates.push_back({*count_star_at, {AggregateFn::Count, std::nullopt}});
  for (const auto& b : chosen) {
    if (b.filter) {
      if (std::find(ast.filter.begin(), ast.filter.end(), *b.filter) == ast.filter.end()) ast.filter.push_back(*b.filter);
      continue;
    }
    if (b.kind != BindingKind::Attribute) continue;
    ColumnRef ref{b.table, b.column};
    switch (b.role) {
      case BindingRole::GroupKey:
        if (ast.group_by && *ast.group_by != ref) return std::nullopt;
        ast.group_by = ref;
        break;
      case BindingRole::Aggregate:
        aggregates.push_back({b.begin, {*b.aggregate, ref}});
        break;
      default:
        if (std::find(plain.begin(), plain.end(), ref) == plain.end()) plain.push_back(ref);
    }
  }
  std::stable_sort(aggregates.begin(), aggregates.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [pos, ag] : aggregates) ast.aggregates.push_back(ag);

  if (ast.is_aggregate()) {
    if (!ast.group_by && !plain.empty()) {
      ast.group_by = plain.front();
      plain.erase(plain.begin());
    }
    if (!plain.empty()) return std::nullopt;
    if (ast.aggregates.empty()) ast.aggregates.push_back({AggregateFn::Count, std::nullopt});
    if (ast.group_by) ast.projection = std::vector<ColumnRef>{*ast.group_by};
    else ast.projection = std::vector<ColumnRef>{};
  } else if (!plain.empty()) {
    std::vector<ColumnRef> proj{{ast.source, catalog.table(ast.source).identifier_name()}};
    for (const auto& p : plain) {
      if (std::find(proj.begin(), proj.end(), p) == proj.end()) proj.push_back(p);
    }
    ast.projection = std::move(proj);
  }
  try {
    validate(ast, catalog);
  } catch (const Error&) {
    return std::nullopt;
  }
  return out;
}

// Odometer over span options, last span fastest; false once exhausted.
bool advance(std::vector<std::size_t>& pick, const std::vector<CandidateSpan>& spans) {
  for (std::size_t s = pick.size(); s-- > 0;) {
    if (++pick[s] < spans[s].options.size()) return true;
    pick[s] = 0;
  }
  return false;
}

}  // namespace

std::vector<Interpretation> interpret(std::string_view question, const SchemaGraph& graph, const Catalog& catalog,
                                      std::size_t n, const NlConfig& config) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
  const auto tokens = normalize(question, config);
  const auto matches = match_terms(tokens, graph, catalog);
  if (matches.spans.empty()) {
    throw Error(ErrorCode::NoInterpretation, "no term of '" + std::string(question) + "' matches the schema");
  }
  std::size_t content = 0;
  for (const auto& t : tokens) content += t.stopword ? 0 : 1;

  std::map<std::string, Interpretation> best;
  std::vector<std::size_t> pick(matches.spans.size(), 0);
  for (std::size_t combo = 0; combo < config.max_combinations; ++combo) {
    std::vector<Binding> chosen;
    for (std::size_t s = 0; s < pick.size(); ++s) chosen.push_back(matches.spans[s].options[pick[s]]);

    if (auto assembled = assemble(chosen, matches.count_star_at, graph, catalog)) {
      std::vector<bool> covered(tokens.size(), false);
      for (const auto& b : chosen) {
        for (std::size_t k = b.begin; k < b.end; ++k) covered[k] = true;
      }
      std::size_t matched = 0;
      std::vector<std::string> unmatched;
      for (std::size_t k = 0; k < tokens.size(); ++k) {
        if (tokens[k].stopword) continue;
        if (covered[k]) ++matched;
        else unmatched.push_back(tokens[k].surface);
      }
      Interpretation in;
      in.ast = std::move(assembled->ast);
      in.join_edges = assembled->edges;
      in.score = config.match_weight * (content ? static_cast<double>(matched) / static_cast<double>(content) : 0.0) +
                 config.join_weight / (1.0 + static_cast<double>(in.join_edges));
      in.bindings = std::move(chosen);
      in.unmatched = std::move(unmatched);
      auto key = canonical_string(in.ast);
      auto it = best.find(key);
      if (it == best.end() || it->second.score < in.score) best[key] = std::move(in);
    }

    if (!advance(pick, matches.spans)) break;
  }
  if (best.empty()) {
    throw Error(ErrorCode::NoInterpretation, "no consistent reading of '" + std::string(question) + "'");
  }
  std::vector<Interpretation> out;
  for (auto& [key, in] : best) out.push_back(std::move(in));
  std::stable_sort(out.begin(), out.end(), [](const Interpretation& a, const Interpretation& b) {
    if (a.score != b.score) return a.score > b.score;
    return canonical_string(a.ast) < canonical_string(b.ast);
  });
  if (out.size() > n) out.resize(n);
  return out;
}

}  // namespace xplore
