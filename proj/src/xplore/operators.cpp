#include "xplore/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "xplore/error.hpp"

namespace xplore {

using nlohmann::json;

// --- Taxonomy ---

Taxonomy Taxonomy::from_json(const json& j, const Catalog& catalog) {
  if (!j.is_object() || !j.contains("name") || !j.contains("table") || !j.contains("nodes")) {
    throw Error(ErrorCode::InvalidConfig, "taxonomy needs name, table and nodes");
  }
  Taxonomy t;
  t.name_ = j["name"].get<std::string>();
  t.table_ = j["table"].get<std::string>();
  const Table& table = catalog.table(t.table_);
  std::map<std::string, std::size_t> index;
  for (const auto& n : j["nodes"]) {
    auto id = n.at("id").get<std::string>();
    if (!index.emplace(id, t.nodes_.size()).second) {
      throw Error(ErrorCode::InvalidConfig, "taxonomy " + t.name_ + ": duplicate node '" + id + "'");
    }
    t.nodes_.push_back(id);
  }
  t.parent_.resize(t.nodes_.size());
  std::size_t roots = 0;
  for (const auto& n : j["nodes"]) {
    std::size_t self = index.at(n.at("id").get<std::string>());
    if (!n.contains("parent") || n["parent"].is_null()) {
      ++roots;
      continue;
    }
    auto it = index.find(n["parent"].get<std::string>());
    if (it == index.end()) throw Error(ErrorCode::InvalidConfig, "taxonomy " + t.name_ + ": unknown parent");
    t.parent_[self] = it->second;
  }
  if (roots != 1) throw Error(ErrorCode::InvalidConfig, "taxonomy " + t.name_ + " must have exactly one root");
  t.depth_.assign(t.nodes_.size(), 0);
  for (std::size_t i = 0; i < t.nodes_.size(); ++i) {
    std::size_t d = 0;
    auto cur = t.parent_[i];
    while (cur) {
      if (++d > t.nodes_.size()) throw Error(ErrorCode::InvalidConfig, "taxonomy " + t.name_ + " has a cycle");
      cur = t.parent_[*cur];
    }
    t.depth_[i] = d;
  }
  if (j.contains("assign")) {
    for (const auto& [id, node] : j["assign"].items()) {
      auto row = table.find_row(id);
      if (!row) throw Error(ErrorCode::InvalidConfig, "taxonomy " + t.name_ + ": unknown row '" + id + "'");
      auto it = index.find(node.get<std::string>());
      if (it == index.end()) throw Error(ErrorCode::InvalidConfig, "taxonomy " + t.name_ + ": unknown node");
      t.assignment_[*row] = it->second;
    }
  }
  return t;
}

std::optional<std::size_t> Taxonomy::node_of(RowId row) const {
  auto it = assignment_.find(row);
  if (it == assignment_.end()) return std::nullopt;
  return it->second;
}

std::size_t Taxonomy::path_length(std::size_t a, std::size_t b) const {
  std::size_t steps = 0;
  while (a != b) {
    if (depth_[a] >= depth_[b]) a = *parent_[a];
    else b = *parent_[b];
    ++steps;
  }
  return steps;
}

// --- helpers ---

namespace {

std::size_t attribute_of(const Table& t, const std::string& attribute) {
  auto c = t.find_column(attribute);
  if (!c) throw Error(ErrorCode::UnknownAttribute, "table " + t.name() + " has no attribute '" + attribute + "'");
  return *c;
}

std::optional<std::vector<Comparison>> extend_filter(const EntitySet& in, Comparison cmp) {
  if (!in.provenance() || !in.provenance()->filter) return std::nullopt;
  auto f = *in.provenance()->filter;
  f.push_back(std::move(cmp));
  return f;
}

void same_table(const EntitySet& a, const EntitySet& b) {
  if (a.base_table() != b.base_table()) {
    throw Error(ErrorCode::BaseTableMismatch, "sets over different tables: " + a.base_table() + " vs " + b.base_table());
  }
}

}  // namespace

// --- by_filter / by_facet ---

EntitySet by_filter(const EntitySet& set, const Comparison& predicate, const Catalog& catalog) {
  const Table& t = catalog.table(set.base_table());
  Comparison cmp = predicate;
  if (cmp.column.table.empty()) cmp.column.table = t.name();
  if (cmp.column.table != t.name()) {
    throw Error(ErrorCode::UnknownAttribute, cmp.column.qualified() + " does not belong to " + t.name());
  }
  std::size_t col = attribute_of(t, cmp.column.column);
  check_literal(t, cmp);
  std::vector<RowId> rows;
  for (RowId r : set.rows()) {
    if (evaluate(t.cell(r, col), cmp.op, cmp.value)) rows.push_back(r);
  }
  EntitySet out(t.name(), std::move(rows));
  if (auto f = extend_filter(set, cmp)) out.set_provenance(Provenance{"", std::move(f)});
  return out;
}

FacetResult by_facet(const EntitySet& set, const std::string& attribute, const Catalog& catalog) {
  const Table& t = catalog.table(set.base_table());
  std::size_t col = attribute_of(t, attribute);
  auto kind = t.columns()[col].kind;
  if (kind != ColumnKind::Categorical && kind != ColumnKind::Numeric) {
    throw Error(ErrorCode::NonCategoricalAttribute,
                t.name() + "." + attribute + " is " + std::string(column_kind_name(kind)) + ", not facetable");
  }
  auto less = [](const Cell& a, const Cell& b) { return compare_cells(a, b) < 0; };
  std::map<Cell, std::vector<RowId>, decltype(less)> groups(less);
  for (RowId r : set.rows()) groups[t.cell(r, col)].push_back(r);

  FacetResult out{{t.name(), attribute}, {}};
  for (auto& [value, rows] : groups) {
    FacetBucket b{value, EntitySet(t.name(), std::move(rows)), 0};
    b.count = b.members.size();
    b.members.set_label(attribute + "=" + render_cell(value));
    if (!is_missing(value)) {
      Literal lit = std::holds_alternative<double>(value) ? Literal{std::get<double>(value)}
                                                           : Literal{std::get<std::string>(value)};
      if (auto f = extend_filter(set, {{t.name(), attribute}, CompareOp::Eq, lit})) {
        b.members.set_provenance(Provenance{"", std::move(f)});
      }
    }
    out.buckets.push_back(std::move(b));
  }
  return out;
}

// --- by_example ---

Metric parse_metric(std::string_view s) {
  if (s == "euclidean") return Metric::Euclidean;
  if (s == "cosine") return Metric::Cosine;
  if (s == "manhattan") return Metric::Manhattan;
  if (s == "semantic") return Metric::Semantic;
  throw Error(ErrorCode::InvalidArgument, "unknown metric '" + std::string(s) + "'");
}

std::string_view metric_name(Metric m) noexcept {
  switch (m) {
    case Metric::Euclidean: return "euclidean";
    case Metric::Cosine: return "cosine";
    case Metric::Manhattan: return "manhattan";
    case Metric::Semantic: return "semantic";
  }
  return "euclidean";
}

namespace {

double metric_distance(Metric m, const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0;
  switch (m) {
    case Metric::Euclidean:
      for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
      return std::sqrt(acc);
    case Metric::Manhattan:
      for (std::size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
      return acc;
    case Metric::Cosine: {
      double na = 0, nb = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
      }
      if (na == 0 || nb == 0) return 1.0;
      return 1.0 - acc / (std::sqrt(na) * std::sqrt(nb));
    }
    case Metric::Semantic: break;
  }
  return 0;
}

void rank(std::vector<RankedRow>& out, std::size_t k) {
  std::sort(out.begin(), out.end(), [](const RankedRow& x, const RankedRow& y) {
    return x.distance != y.distance ? x.distance < y.distance : x.row < y.row;
  });
  if (out.size() > k) out.resize(k);
}

}  // namespace

std::vector<RankedRow> by_example(const EntitySet& examples, const SimilaritySpec& spec, const Catalog& catalog) {
  if (examples.empty()) throw Error(ErrorCode::EmptyExamples, "by_example needs at least one example");
  if (spec.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  const Table& t = catalog.table(examples.base_table());
  std::vector<RankedRow> out;

  if (spec.metric == Metric::Semantic) {
    if (spec.taxonomy == nullptr) throw Error(ErrorCode::MissingTaxonomy, "semantic distance needs a taxonomy");
    if (spec.taxonomy->table() != t.name()) {
      throw Error(ErrorCode::MissingTaxonomy, "taxonomy " + spec.taxonomy->name() + " does not cover " + t.name());
    }
    std::vector<std::size_t> example_nodes;
    for (RowId r : examples.rows()) {
      if (auto n = spec.taxonomy->node_of(r)) example_nodes.push_back(*n);
    }
    if (example_nodes.empty()) throw Error(ErrorCode::MissingTaxonomy, "no example has a taxonomy category");
    for (RowId r = 0; r < t.row_count(); ++r) {
      if (examples.contains(r)) continue;
      auto n = spec.taxonomy->node_of(r);
      if (!n) continue;
      std::size_t best = std::numeric_limits<std::size_t>::max();
      for (auto e : example_nodes) best = std::min(best, spec.taxonomy->path_length(*n, e));
      out.push_back({r, static_cast<double>(best)});
    }
    rank(out, spec.k);
    return out;
  }

  if (spec.features.empty()) throw Error(ErrorCode::NoNumericFeatures, "numeric metrics need at least one feature");
  std::vector<std::size_t> cols;
  for (const auto& f : spec.features) {
    std::size_t c = attribute_of(t, f);
    if (t.columns()[c].kind != ColumnKind::Numeric) {
      throw Error(ErrorCode::NoNumericFeatures, "feature " + t.name() + "." + f + " is not numeric");
    }
    cols.push_back(c);
  }

  // population mean/std per feature over the full base table
  std::vector<double> mean(cols.size(), 0), stdev(cols.size(), 0);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    double sum = 0, sq = 0;
    std::size_t n = 0;
    for (const auto& c : t.column_data(cols[i])) {
      if (const auto* d = std::get_if<double>(&c)) {
        sum += *d;
        sq += *d * *d;
        ++n;
      }
    }
    if (n > 0) {
      mean[i] = sum / static_cast<double>(n);
      stdev[i] = std::sqrt(std::max(0.0, sq / static_cast<double>(n) - mean[i] * mean[i]));
    }
  }
  auto z = [&](std::size_t i, double v) { return stdev[i] > 0 ? (v - mean[i]) / stdev[i] : 0.0; };

  std::vector<double> centroid(cols.size(), 0);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    double sum = 0;
    std::size_t n = 0;
    for (RowId r : examples.rows()) {
      if (const auto* d = std::get_if<double>(&t.cell(r, cols[i]))) {
        sum += z(i, *d);
        ++n;
      }
    }
    centroid[i] = n ? sum / static_cast<double>(n) : 0.0;
  }

  std::vector<double> v(cols.size());
  for (RowId r = 0; r < t.row_count(); ++r) {
    if (examples.contains(r)) continue;
    bool complete = true;
    for (std::size_t i = 0; i < cols.size() && complete; ++i) {
      const auto* d = std::get_if<double>(&t.cell(r, cols[i]));
      if (d == nullptr) complete = false;
      else v[i] = z(i, *d);
    }
    if (!complete) continue;
    out.push_back({r, metric_distance(spec.metric, v, centroid)});
  }
  rank(out, spec.k);
  return out;
}

// --- by_overlap ---

std::vector<RankedSet> by_overlap(const EntitySet& set, OverlapIndex& index, std::size_t min_overlap) {
  SetId id = 0;
  if (auto existing = index.find(set)) id = *existing;
  else id = index.register_set(set);
  std::vector<RankedSet> out;
  for (const auto& hit : index.query_overlaps(id, min_overlap)) out.push_back({hit.id, index.set(hit.id), hit.overlap});
  return out;
}

// --- by_join ---

EntitySet by_join(const EntitySet& set, std::span<const JoinHop> path, const SchemaGraph& graph,
                  const Catalog& catalog) {
  std::string at = set.base_table();
  std::vector<RowId> rows = set.rows();
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto& hop = path[i];
    if (hop.from != at) {
      throw Error(ErrorCode::BrokenJoinPath,
                  "hop " + std::to_string(i) + " starts at " + hop.from + " but the path is at " + at);
    }
    const JoinEdge* edge = graph.edge_between(hop.from, hop.to);
    if (edge == nullptr) throw Error(ErrorCode::BrokenJoinPath, "no join edge between " + hop.from + " and " + hop.to);
    JoinEdge e = edge->oriented_from(hop.from);
    const Table& left = catalog.table(e.from);
    std::vector<std::size_t> left_cols;
    std::vector<std::string> right_cols;
    for (const auto& [lc, rc] : e.keys) {
      left_cols.push_back(left.column_index(lc));
      right_cols.push_back(rc);
    }
    const KeyIndex& index = catalog.key_index(e.to, right_cols);
    std::vector<RowId> next;
    for (RowId r : rows) {
      if (std::any_of(left_cols.begin(), left_cols.end(), [&](auto c) { return is_missing(left.cell(r, c)); })) continue;
      auto it = index.find(composite_key(left, r, left_cols));
      if (it != index.end()) next.insert(next.end(), it->second.begin(), it->second.end());
    }
    rows = EntitySet(e.to, std::move(next)).rows();
    at = e.to;
  }
  return EntitySet(at, std::move(rows));
}

// --- by_superset ---

CoverResult by_superset(const EntitySet& target, std::span<const EntitySet> candidates) {
  for (const auto& c : candidates) same_table(target, c);
  CoverResult out;
  EntitySet uncovered(target.base_table(), target.rows());
  std::vector<bool> used(candidates.size(), false);
  while (!uncovered.empty()) {
    std::size_t best = 0, best_gain = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (used[i]) continue;
      std::size_t gain = intersection_size(uncovered, candidates[i]);
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    if (best_gain == 0) break;
    used[best] = true;
    out.cover.push_back(best);
    uncovered = set_algebra(uncovered, candidates[best], SetOp::Difference);
  }
  out.uncovered = std::move(uncovered);
  return out;
}

// --- by_analytics ---

std::vector<double> value_distribution(const EntitySet& set, const std::string& attribute, const Catalog& catalog) {
  const Table& t = catalog.table(set.base_table());
  std::size_t col = attribute_of(t, attribute);
  auto kind = t.columns()[col].kind;
  std::vector<double> hist;
  std::size_t total = 0;

  if (kind == ColumnKind::Numeric) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& c : t.column_data(col)) {
      if (const auto* d = std::get_if<double>(&c)) {
        lo = std::min(lo, *d);
        hi = std::max(hi, *d);
      }
    }
    hist.assign(kHistogramBins, 0.0);
    for (RowId r : set.rows()) {
      const auto* d = std::get_if<double>(&t.cell(r, col));
      if (d == nullptr) continue;
      std::size_t bin = 0;
      if (hi > lo) {
        bin = static_cast<std::size_t>((*d - lo) / (hi - lo) * static_cast<double>(kHistogramBins));
        bin = std::min(bin, kHistogramBins - 1);
      }
      hist[bin] += 1;
      ++total;
    }
  } else if (kind == ColumnKind::Categorical) {
    std::map<std::string, std::size_t> categories;
    for (const auto& c : t.column_data(col)) {
      if (const auto* s = std::get_if<std::string>(&c)) categories.emplace(*s, 0);
    }
    std::size_t i = 0;
    for (auto& [k, v] : categories) v = i++;
    hist.assign(categories.size(), 0.0);
    for (RowId r : set.rows()) {
      const auto* s = std::get_if<std::string>(&t.cell(r, col));
      if (s == nullptr) continue;
      hist[categories.at(*s)] += 1;
      ++total;
    }
  } else {
    throw Error(ErrorCode::NonCategoricalAttribute,
                t.name() + "." + attribute + " is " + std::string(column_kind_name(kind)) + ", not numeric or categorical");
  }
  if (total == 0) {
    throw Error(ErrorCode::EmptyDistribution, "set has no non-missing values for " + t.name() + "." + attribute);
  }
  for (auto& h : hist) h /= static_cast<double>(total);
  return hist;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorCode::InvalidArgument, "distributions differ in support size");
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::fabs(p[i] - q[i]);
  return acc / 2.0;
}

std::vector<RankedDivergence> by_analytics(const EntitySet& set, const std::string& attribute,
                                           std::span<const EntitySet> candidates, AnalyticsMode mode,
                                           const Catalog& catalog) {
  for (const auto& c : candidates) same_table(set, c);
  const auto p = value_distribution(set, attribute, catalog);
  std::vector<RankedDivergence> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto q = value_distribution(candidates[i], attribute, catalog);
    out.push_back({i, total_variation(p, q)});
  }
  std::stable_sort(out.begin(), out.end(), [mode](const RankedDivergence& a, const RankedDivergence& b) {
    if (a.divergence == b.divergence) return a.candidate < b.candidate;
    return mode == AnalyticsMode::Similar ? a.divergence < b.divergence : a.divergence > b.divergence;
  });
  return out;
}

}  // namespace xplore
