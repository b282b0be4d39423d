#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xplore/catalog.hpp"
#include "xplore/query_ast.hpp"
#include "xplore/schema_graph.hpp"
#include "xplore/text.hpp"

namespace xplore {

struct NlConfig {
  std::set<std::string> stopwords = text::default_stopwords();
  double match_weight = 0.7;
  double join_weight = 0.3;
  std::size_t max_combinations = 512;

  static NlConfig from_json(const nlohmann::json& j);
};

enum class BindingKind { Table, Attribute, Value };
enum class BindingRole { Plain, GroupKey, Aggregate, Filter };

struct Binding {
  std::size_t begin = 0;  // token span [begin, end)
  std::size_t end = 0;
  std::string term;       // normalized span text that hit the vocabulary
  BindingKind kind = BindingKind::Table;
  std::string table;
  std::string column;
  BindingRole role = BindingRole::Plain;
  std::optional<Comparison> filter;      // Value bindings and numeric comparisons
  std::optional<AggregateFn> aggregate;  // Aggregate role

  nlohmann::json to_json() const;
};

struct CandidateSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<Binding> options;  // more than one option is an ambiguity
};

struct TermMatches {
  std::vector<CandidateSpan> spans;
  std::vector<std::size_t> unmatched;  // non-stopword token positions
  // Position of a count keyword that applies to the whole query, if any.
  std::optional<std::size_t> count_star_at;
};

struct Interpretation {
  QueryAst ast;
  double score = 0.0;
  std::vector<Binding> bindings;
  std::vector<std::string> unmatched;
  std::size_t join_edges = 0;

  nlohmann::json to_json() const;
};

text::TokenStream normalize(std::string_view question, const NlConfig& config = {});

TermMatches match_terms(const text::TokenStream& tokens, const SchemaGraph& graph, const Catalog& catalog);

// Ranked by score descending, ties by canonical AST text ascending; at most n.
// Throws NoInterpretation when no token binds.
std::vector<Interpretation> interpret(std::string_view question, const SchemaGraph& graph, const Catalog& catalog,
                                      std::size_t n, const NlConfig& config = {});

}  // namespace xplore
