#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "xplore/catalog.hpp"
#include "xplore/entity_set.hpp"
#include "xplore/overlap_index.hpp"
#include "xplore/predicate.hpp"
#include "xplore/schema_graph.hpp"

namespace xplore {

// Category tree over rows of one table; distance is the tree path length.
class Taxonomy {
 public:
  // {name, table, nodes:[{id, parent?}], assign:{row identifier: node id}}
  static Taxonomy from_json(const nlohmann::json& j, const Catalog& catalog);

  const std::string& name() const noexcept { return name_; }
  const std::string& table() const noexcept { return table_; }
  std::optional<std::size_t> node_of(RowId row) const;
  std::size_t path_length(std::size_t a, std::size_t b) const;
  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  std::string name_;
  std::string table_;
  std::vector<std::string> nodes_;
  std::vector<std::optional<std::size_t>> parent_;
  std::vector<std::size_t> depth_;
  std::unordered_map<RowId, std::size_t> assignment_;
};

struct FacetBucket {
  Cell value;  // missing is the "∅" bucket
  EntitySet members;
  std::size_t count = 0;
};

struct FacetResult {
  ColumnRef attribute;
  std::vector<FacetBucket> buckets;  // value ascending, "∅" last
};

EntitySet by_filter(const EntitySet& set, const Comparison& predicate, const Catalog& catalog);

// Categorical attributes, and numeric attributes grouped by exact value.
FacetResult by_facet(const EntitySet& set, const std::string& attribute, const Catalog& catalog);

enum class Metric { Euclidean, Cosine, Manhattan, Semantic };
Metric parse_metric(std::string_view s);
std::string_view metric_name(Metric m) noexcept;

struct SimilaritySpec {
  std::vector<std::string> features;  // numeric attributes of the base table
  Metric metric = Metric::Euclidean;
  std::size_t k = 10;
  const Taxonomy* taxonomy = nullptr;
};

struct RankedRow {
  RowId row = 0;
  double distance = 0.0;
  bool operator==(const RankedRow&) const = default;
};

// Candidates are the base table minus the examples. Numeric metrics compare
// z-scored features against the examples' centroid; semantic distance is the
// path to the nearest example's category.
std::vector<RankedRow> by_example(const EntitySet& examples, const SimilaritySpec& spec, const Catalog& catalog);

struct RankedSet {
  SetId id = 0;
  EntitySet set;
  std::size_t overlap = 0;
};

// Registers `set` first when no identical set is registered.
std::vector<RankedSet> by_overlap(const EntitySet& set, OverlapIndex& index, std::size_t min_overlap);

struct JoinHop {
  std::string from;
  std::string to;
};

EntitySet by_join(const EntitySet& set, std::span<const JoinHop> path, const SchemaGraph& graph,
                  const Catalog& catalog);

struct CoverResult {
  std::vector<std::size_t> cover;  // candidate indices in pick order
  EntitySet uncovered;
};

// Greedy set cover; ties go to the lower candidate index.
CoverResult by_superset(const EntitySet& target, std::span<const EntitySet> candidates);

enum class AnalyticsMode { Similar, Dissimilar };

struct RankedDivergence {
  std::size_t candidate = 0;
  double divergence = 0.0;
};

inline constexpr std::size_t kHistogramBins = 16;

// Probability vector of `attribute` over `set`: 16 equal-width bins over the
// base table range for numeric columns, global category frequencies otherwise.
std::vector<double> value_distribution(const EntitySet& set, const std::string& attribute, const Catalog& catalog);

double total_variation(std::span<const double> p, std::span<const double> q);

std::vector<RankedDivergence> by_analytics(const EntitySet& set, const std::string& attribute,
                                           std::span<const EntitySet> candidates, AnalyticsMode mode,
                                           const Catalog& catalog);

}  // namespace xplore
