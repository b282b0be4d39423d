#include "xplore/guide.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "xplore/error.hpp"

namespace xplore {

using nlohmann::json;

namespace {

std::string_view kind_name(RecommendationKind k) {
  return k == RecommendationKind::StarterQuery ? "starter_query" : "next_operator";
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

json Recommendation::to_json() const {
  return json{{"kind", kind_name(kind)}, {"payload", payload}, {"score", score}, {"rationale", rationale}};
}

Recommendation Recommendation::from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("payload")) {
    throw Error(ErrorCode::SchemaViolation, "recommendation needs kind and payload");
  }
  Recommendation r;
  const auto kind = j["kind"].get<std::string>();
  if (kind == "starter_query") {
    r.kind = RecommendationKind::StarterQuery;
  } else if (kind == "next_operator") {
    r.kind = RecommendationKind::NextOperator;
  } else {
    throw Error(ErrorCode::SchemaViolation, "unknown recommendation kind '" + kind + "'");
  }
  r.payload = j["payload"];
  r.score = j.value("score", 0.0);
  r.rationale = j.value("rationale", std::string{});
  return r;
}

DepStep Recommendation::to_step(std::string id, const std::string& current_ref) const {
  DepStep s;
  s.id = std::move(id);
  if (kind == RecommendationKind::StarterQuery) {
    s.op = "query";
    s.params = json{{"ast", payload.at("ast")}};
    s.inputs = {"catalog"};
    return s;
  }
  s.op = payload.at("op").get<std::string>();
  s.params = payload.value("params", json::object());
  if (s.op == "scan" || s.op == "query") {
    s.inputs = {"catalog"};
  } else {
    s.inputs = {current_ref};
  }
  return s;
}

double normalized_entropy(const ColumnProfile& p) {
  if (p.distinct_count <= 1) return 0.0;
  return p.entropy / std::log(static_cast<double>(p.distinct_count));
}

std::vector<Recommendation> cold_start(const Dataset& dataset, std::size_t k) {
  struct Candidate {
    std::string name;
    Recommendation rec;
  };
  std::vector<Candidate> candidates;
  for (const auto& t : dataset.catalog.tables()) {
    Recommendation r;
    r.kind = RecommendationKind::StarterQuery;
    r.payload = json{{"ast", full_scan(t.name()).to_json()}};
    r.score = kFullScanStarterScore;
    r.rationale = "Browse all " + std::to_string(t.row_count()) + " rows of " + t.name();
    candidates.push_back({t.name(), std::move(r)});
  }
  for (const auto& p : dataset.profiles) {
    if (p.kind != ColumnKind::Categorical) continue;
    if (p.distinct_count < 2 || p.distinct_count > kFacetMaxDistinct) continue;
    QueryAst ast;
    ast.source = p.table;
    ast.group_by = ColumnRef{p.table, p.column};
    ast.aggregates = {Aggregate{AggregateFn::Count, std::nullopt}};
    Recommendation r;
    r.kind = RecommendationKind::StarterQuery;
    r.payload = json{{"ast", ast.to_json()}, {"facet", p.table + "." + p.column}};
    r.score = normalized_entropy(p);
    r.rationale = "Facet " + p.table + " by " + p.column + " (" + std::to_string(p.distinct_count) +
                  " values, normalized entropy " + fixed2(r.score) + ")";
    candidates.push_back({p.table + "." + p.column, std::move(r)});
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.rec.score != b.rec.score) return a.rec.score > b.rec.score;
    return a.name < b.name;
  });
  std::vector<Recommendation> out;
  for (std::size_t i = 0; i < candidates.size() && i < k; ++i) out.push_back(std::move(candidates[i].rec));
  return out;
}

// --- transition model ---

TransitionModel::TransitionModel(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "smoothing constant must be positive");
}

void TransitionModel::add_signature(const Signature& s) {
  auto it = std::lower_bound(known_.begin(), known_.end(), s);
  if (it == known_.end() || *it != s) known_.insert(it, s);
}

void TransitionModel::add_transition(const Signature& from, const Signature& to, double count) {
  add_signature(from);
  add_signature(to);
  counts_[from][to] += count;
}

double TransitionModel::count(const Signature& from, const Signature& to) const {
  auto row = counts_.find(from);
  if (row == counts_.end()) return 0.0;
  auto it = row->second.find(to);
  return it == row->second.end() ? 0.0 : it->second;
}

double TransitionModel::probability(const Signature& from, const Signature& to) const {
  if (known_.empty()) return 0.0;
  double total = 0.0;
  if (auto row = counts_.find(from); row != counts_.end()) {
    for (const auto& [_, c] : row->second) total += c;
  }
  return (count(from, to) + alpha_) / (total + alpha_ * static_cast<double>(known_.size()));
}

TransitionModel TransitionModel::scaled(double factor) const {
  TransitionModel m = *this;
  for (auto& [_, row] : m.counts_) {
    for (auto& [__, c] : row) c *= factor;
  }
  return m;
}

json TransitionModel::to_json() const {
  json sigs = json::array();
  for (const auto& s : known_) sigs.push_back(s.name());
  json counts = json::array();
  for (const auto& [from, row] : counts_) {
    for (const auto& [to, c] : row) counts.push_back(json{{"from", from.name()}, {"to", to.name()}, {"count", c}});
  }
  return json{{"alpha", alpha_}, {"signatures", sigs}, {"counts", counts}};
}

TransitionModel TransitionModel::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "transition model must be an object");
  try {
    TransitionModel m(j.value("alpha", 0.1));
    for (const auto& s : j.value("signatures", json::array())) m.add_signature(Signature::parse(s.get<std::string>()));
    for (const auto& c : j.value("counts", json::array())) {
      m.add_transition(Signature::parse(c.at("from").get<std::string>()), Signature::parse(c.at("to").get<std::string>()),
                       c.at("count").get<double>());
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed transition model: ") + e.what());
  }
}

TransitionModel train_transitions(std::span<const SessionLog> logs, double alpha) {
  TransitionModel m(alpha);
  for (const auto& log : logs) {
    auto steps = logged_steps(log);
    for (std::size_t i = 0; i < steps.size(); ++i) {
      m.add_signature(step_signature(steps[i]));
      if (i > 0) m.add_transition(step_signature(steps[i - 1]), step_signature(steps[i]));
    }
  }
  return m;
}

// --- warm start ---

namespace {

// Parameters for `sig` against `set`'s table, or null when the signature does
// not apply there.
json instantiate(const Signature& sig, const EntitySet& set, const Dataset& dataset) {
  const Catalog& catalog = dataset.catalog;
  const Table* t = catalog.find(set.base_table());
  if (t == nullptr) return nullptr;
  auto column = [&]() -> const ColumnDef* {
    auto c = t->find_column(sig.attribute);
    return c ? &t->columns()[*c] : nullptr;
  };
  const auto& op = sig.op;
  if (op == "by_facet") {
    const auto* c = column();
    if (c == nullptr || (c->kind != ColumnKind::Categorical && c->kind != ColumnKind::Numeric)) return nullptr;
    return json{{"attribute", sig.attribute}};
  }
  if (op == "by_filter") {
    const auto* c = column();
    if (c == nullptr || c->kind == ColumnKind::Identifier) return nullptr;
    const auto col = t->column_index(sig.attribute);
    std::vector<Cell> values;
    for (RowId r : set.rows()) {
      if (!is_missing(t->cell(r, col))) values.push_back(t->cell(r, col));
    }
    if (values.empty()) return nullptr;
    std::sort(values.begin(), values.end(), [](const Cell& a, const Cell& b) { return compare_cells(a, b) < 0; });
    if (c->kind == ColumnKind::Numeric) {
      return json{{"attribute", sig.attribute}, {"op", ">="}, {"value", std::get<double>(values[(values.size() - 1) / 2])}};
    }
    // Most frequent value; the first one in value order on ties.
    std::size_t best = 0, best_n = 0;
    for (std::size_t i = 0; i < values.size();) {
      std::size_t j = i;
      while (j < values.size() && compare_cells(values[j], values[i]) == 0) ++j;
      if (j - i > best_n) {
        best = i;
        best_n = j - i;
      }
      i = j;
    }
    const auto op_s = c->kind == ColumnKind::Text ? "contains" : "=";
    return json{{"attribute", sig.attribute}, {"op", op_s}, {"value", std::get<std::string>(values[best])}};
  }
  if (op == "by_example") {
    if (set.empty()) return nullptr;
    if (const auto* c = column(); c != nullptr && c->kind == ColumnKind::Numeric) {
      return json{{"features", {sig.attribute}}, {"metric", "euclidean"}, {"k", 5}};
    }
    const auto* tax = dataset.find_taxonomy(sig.attribute);
    if (tax != nullptr && tax->table() == t->name()) {
      return json{{"metric", "semantic"}, {"taxonomy", tax->name()}, {"k", 5}};
    }
    return nullptr;
  }
  if (op == "by_join") {
    if (sig.attribute == t->name() || catalog.find(sig.attribute) == nullptr) return nullptr;
    if (!dataset.graph.shortest_path(t->name(), sig.attribute)) return nullptr;
    return json{{"to", sig.attribute}};
  }
  if (op == "by_overlap") return json{{"min_overlap", 1}};
  if (op == "scan") {
    if (catalog.find(sig.attribute) == nullptr) return nullptr;
    return json{{"table", sig.attribute}};
  }
  if (op == "query") {
    if (catalog.find(sig.attribute) == nullptr) return nullptr;
    return json{{"ast", full_scan(sig.attribute).to_json()}};
  }
  // Operators needing several input sets are not suggested.
  return nullptr;
}

}  // namespace

std::vector<Recommendation> warm_start(const TransitionModel& model, const SessionLog& session,
                                       const EntitySet& current_set, std::size_t k, double lambda,
                                       const Dataset& dataset) {
  if (lambda < 0.0 || lambda > 1.0) throw Error(ErrorCode::InvalidArgument, "lambda must be in [0, 1]");
  const auto steps = logged_steps(session);
  if (steps.empty()) throw Error(ErrorCode::EmptySession, "warm start needs at least one step");
  std::set<Signature> used;
  for (const auto& s : steps) used.insert(step_signature(s));
  const Signature last = step_signature(steps.back());

  struct Candidate {
    std::string name;
    Recommendation rec;
  };
  std::vector<Candidate> candidates;
  for (const auto& sig : model.known()) {
    json params = instantiate(sig, current_set, dataset);
    if (params.is_null()) continue;
    const double p = model.probability(last, sig);
    const double novelty = used.count(sig) ? 0.0 : 1.0;
    Recommendation r;
    r.kind = RecommendationKind::NextOperator;
    r.payload = json{{"op", sig.op}, {"params", params}, {"signature", sig.name()}};
    r.score = (1.0 - lambda) * p + lambda * novelty;
    r.rationale = "P(" + sig.name() + " | " + last.name() + ") = " + fixed2(p) +
                  (novelty > 0 ? ", not yet used in this session" : ", already used in this session");
    candidates.push_back({sig.name(), std::move(r)});
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.rec.score != b.rec.score) return a.rec.score > b.rec.score;
    return a.name < b.name;
  });
  std::vector<Recommendation> out;
  for (std::size_t i = 0; i < candidates.size() && i < k; ++i) out.push_back(std::move(candidates[i].rec));
  return out;
}

}  // namespace xplore
