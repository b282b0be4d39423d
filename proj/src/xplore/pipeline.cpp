#include "xplore/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>

#include "xplore/error.hpp"
#include "xplore/evaluator.hpp"

namespace xplore {

using nlohmann::json;

// --- DEP format ---

json DepStep::to_json() const { return json{{"id", id}, {"op", op}, {"params", params}, {"inputs", inputs}}; }

DepStep DepStep::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaViolation, "step must be an object");
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
    throw Error(ErrorCode::SchemaViolation, "step is missing a string id");
  }
  DepStep s;
  s.id = j["id"].get<std::string>();
  if (!j.contains("op") || !j["op"].is_string()) {
    throw Error(ErrorCode::SchemaViolation, "step '" + s.id + "' is missing the op field", s.id);
  }
  s.op = j["op"].get<std::string>();
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw Error(ErrorCode::SchemaViolation, "params must be an object", s.id);
    s.params = j["params"];
  }
  if (j.contains("inputs")) {
    if (!j["inputs"].is_array()) throw Error(ErrorCode::SchemaViolation, "inputs must be an array", s.id);
    for (const auto& in : j["inputs"]) {
      if (!in.is_string()) throw Error(ErrorCode::SchemaViolation, "input refs must be strings", s.id);
      s.inputs.push_back(in.get<std::string>());
    }
  }
  return s;
}

json Dep::to_json() const {
  json steps_j = json::array();
  for (const auto& s : steps) steps_j.push_back(s.to_json());
  return json{{"version", version}, {"steps", steps_j}};
}

namespace {

std::string ref_step(const std::string& ref) {
  auto colon = ref.find(':');
  return colon == std::string::npos ? ref : ref.substr(0, colon);
}

}  // namespace

Dep Dep::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaViolation, "DEP must be a JSON object");
  if (!j.contains("version")) throw Error(ErrorCode::SchemaViolation, "DEP has no version tag");
  if (!j["version"].is_string() || j["version"].get<std::string>() != kDepVersion) {
    throw Error(ErrorCode::UnknownVersion, "unsupported DEP version " + j["version"].dump());
  }
  if (!j.contains("steps") || !j["steps"].is_array()) throw Error(ErrorCode::SchemaViolation, "DEP needs a steps array");
  Dep dep;
  std::set<std::string> seen;
  for (const auto& sj : j["steps"]) {
    DepStep s = DepStep::from_json(sj);
    for (const auto& in : s.inputs) {
      if (in == "catalog") continue;
      if (!seen.count(ref_step(in))) {
        throw Error(ErrorCode::SchemaViolation, "step '" + s.id + "' refers to '" + in + "' which is not an earlier step",
                    s.id);
      }
    }
    if (!seen.insert(s.id).second) throw Error(ErrorCode::SchemaViolation, "duplicate step id '" + s.id + "'", s.id);
    dep.steps.push_back(std::move(s));
  }
  return dep;
}

Dep read_dep(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
  }
  return Dep::from_json(j);
}

void write_dep(const Dep& dep, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << dep.to_json().dump(2) << '\n';
}

const std::vector<std::string>& registered_operators() {
  static const std::vector<std::string> ops = {"scan",        "query",     "set",         "set_algebra",
                                               "by_filter",   "by_facet",  "by_example",  "by_overlap",
                                               "by_join",     "by_superset", "by_analytics"};
  return ops;
}

// --- outputs ---

std::size_t StepOutput::cardinality() const {
  if (table && !set) return table->rows.size();
  if (facets) return facets->buckets.size();
  if (!ranking.empty() || op == "by_example") return ranking.size();
  if (!ranked_sets.empty() || op == "by_overlap" || op == "by_analytics") return ranked_sets.size();
  if (set) return set->size();
  if (table) return table->rows.size();
  return 0;
}

std::size_t StepOutput::memory_bytes_estimate() const {
  constexpr std::size_t kId = 8, kScore = 8, kCell = 16;
  std::size_t bytes = 0;
  if (set) bytes += set->size() * kId;
  if (facets) {
    for (const auto& b : facets->buckets) bytes += b.members.size() * kId;
  }
  bytes += ranking.size() * (kId + kScore);
  for (const auto& r : ranked_sets) bytes += r.set.size() * kId + kScore;
  if (cover) bytes += (cover->cover.size() + cover->uncovered.size()) * kId;
  if (table) bytes += table->rows.size() * table->headers.size() * kCell;
  return bytes;
}

json StepOutput::to_json(const Catalog& catalog) const {
  json j{{"step_id", step_id}, {"op", op}, {"cardinality", cardinality()}};
  if (set) j["set"] = set->to_json(catalog);
  if (facets) {
    json buckets = json::array();
    for (const auto& b : facets->buckets) {
      json v = is_missing(b.value) ? json(nullptr)
               : std::holds_alternative<double>(b.value) ? json(std::get<double>(b.value))
                                                         : json(std::get<std::string>(b.value));
      buckets.push_back(json{{"value", v},
                             {"label", render_cell(b.value)},
                             {"count", b.count},
                             {"ids", b.members.identifiers(catalog.table(b.members.base_table()))}});
    }
    j["facets"] = json{{"attribute", facets->attribute.qualified()}, {"buckets", buckets}};
  }
  if (op == "by_example" || !ranking.empty()) {
    json r = json::array();
    const Table& t = catalog.table(set ? set->base_table() : std::string{});
    for (const auto& row : ranking) r.push_back(json{{"id", t.identifier_of(row.row)}, {"distance", row.distance}});
    j["ranking"] = r;
  }
  if (!ranked_sets.empty() || op == "by_overlap" || op == "by_analytics") {
    json r = json::array();
    for (const auto& s : ranked_sets) {
      r.push_back(json{{"candidate", s.candidate}, {"score", s.score}, {"set", s.set.to_json(catalog)}});
    }
    j["ranked_sets"] = r;
  }
  if (cover) {
    json uncovered = cover->uncovered.identifiers(catalog.table(cover->uncovered.base_table()));
    j["cover"] = json{{"cover", cover->cover}, {"uncovered", uncovered}};
  }
  if (table) j["table"] = table->to_json();
  return j;
}

std::string StepOutput::digest(const Catalog& catalog) const {
  const std::string text = to_json(catalog).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- metrics ---

void DepMetrics::add(StepMetrics m) {
  total_latency_ms += m.latency_ms;
  peak_memory_bytes = std::max(peak_memory_bytes, m.memory_bytes_estimate);
  ++step_count;
  steps.push_back(std::move(m));
}

DepMetrics DepMetrics::recomputed() const {
  DepMetrics d;
  for (const auto& s : steps) d.add(s);
  d.backtrack_count = backtrack_count;
  return d;
}

json DepMetrics::to_json() const {
  json s = json::array();
  for (const auto& m : steps) {
    s.push_back(json{{"step_id", m.step_id},
                     {"op", m.op},
                     {"latency_ms", m.latency_ms},
                     {"memory_bytes_estimate", m.memory_bytes_estimate},
                     {"result_size", m.result_size}});
  }
  return json{{"steps", s},
              {"total_latency_ms", total_latency_ms},
              {"peak_memory_bytes", peak_memory_bytes},
              {"step_count", step_count},
              {"backtrack_count", backtrack_count}};
}

// --- execution ---

namespace {

const json& require(const DepStep& s, const char* key) {
  if (!s.params.contains(key)) {
    throw Error(ErrorCode::SchemaViolation, s.op + " step '" + s.id + "' needs parameter '" + key + "'", s.id);
  }
  return s.params[key];
}

std::string require_string(const DepStep& s, const char* key) {
  const auto& v = require(s, key);
  if (!v.is_string()) throw Error(ErrorCode::SchemaViolation, std::string("parameter '") + key + "' must be a string", s.id);
  return v.get<std::string>();
}

std::vector<JoinHop> join_path(const DepStep& s, const std::string& start, const SchemaGraph& graph) {
  std::vector<JoinHop> hops;
  if (s.params.contains("path")) {
    for (const auto& h : s.params["path"]) {
      if (h.is_array() && h.size() == 2) {
        hops.push_back({h[0].get<std::string>(), h[1].get<std::string>()});
      } else if (h.is_object()) {
        hops.push_back({h.at("from").get<std::string>(), h.at("to").get<std::string>()});
      } else {
        throw Error(ErrorCode::SchemaViolation, "join hops are {from,to} objects", s.id);
      }
    }
    return hops;
  }
  const auto target = require_string(s, "to");
  auto path = graph.shortest_path(start, target);
  if (!path) throw Error(ErrorCode::BrokenJoinPath, "no join path from " + start + " to " + target, s.id);
  for (const auto& e : *path) hops.push_back({e.from, e.to});
  return hops;
}

QueryAst base_rows_query(const QueryAst& ast, const Table& source) {
  QueryAst stripped = ast;
  stripped.group_by.reset();
  stripped.aggregates.clear();
  stripped.order_by.reset();
  stripped.limit.reset();
  stripped.projection = std::vector<ColumnRef>{{source.name(), source.identifier_name()}};
  return stripped;
}

bool projects_identifier(const QueryAst& ast, const Table& source) {
  if (!ast.projection) return true;
  return std::any_of(ast.projection->begin(), ast.projection->end(), [&](const ColumnRef& c) {
    return c.table == source.name() && c.column == source.identifier_name();
  });
}

}  // namespace

PipelineState::PipelineState(const Dataset& dataset) : dataset_(&dataset) {}

const StepOutput* PipelineState::find(std::string_view step_id) const {
  auto it = by_id_.find(step_id);
  return it == by_id_.end() ? nullptr : &outputs_[it->second];
}

EntitySet PipelineState::resolve_set(const std::string& ref) const {
  const auto colon = ref.find(':');
  const std::string id = colon == std::string::npos ? ref : ref.substr(0, colon);
  const StepOutput* out = find(id);
  if (out == nullptr) throw Error(ErrorCode::UnknownStep, "no step '" + id + "'", ref);
  if (colon == std::string::npos) {
    if (!out->set) throw Error(ErrorCode::InvalidArgument, "step '" + id + "' has no set output", ref);
    return *out->set;
  }
  const std::string member = ref.substr(colon + 1);
  if (out->facets) {
    for (const auto& b : out->facets->buckets) {
      if (render_cell(b.value) == member) return b.members;
    }
    throw Error(ErrorCode::InvalidArgument, "step '" + id + "' has no bucket '" + member + "'", ref);
  }
  if (!out->ranked_sets.empty()) {
    std::size_t pos = 0;
    try {
      pos = std::stoul(member);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "ranked set position must be an integer", ref);
    }
    if (pos >= out->ranked_sets.size()) throw Error(ErrorCode::InvalidArgument, "ranked set position out of range", ref);
    return out->ranked_sets[pos].set;
  }
  throw Error(ErrorCode::InvalidArgument, "step '" + id + "' has no selectable members", ref);
}

StepOutput PipelineState::run(const DepStep& step) {
  const Catalog& catalog = dataset_->catalog;
  StepOutput out;
  out.step_id = step.id;
  out.op = step.op;
  auto input = [&](std::size_t i) {
    if (step.inputs.size() <= i || step.inputs[i] == "catalog") {
      throw Error(ErrorCode::SchemaViolation, step.op + " step '" + step.id + "' needs input " + std::to_string(i + 1),
                  step.id);
    }
    return resolve_set(step.inputs[i]);
  };
  auto rest_inputs = [&](std::size_t from) {
    std::vector<EntitySet> sets;
    for (std::size_t i = from; i < step.inputs.size(); ++i) sets.push_back(input(i));
    return sets;
  };
  const auto& op = step.op;

  if (op == "scan") {
    std::string table = step.params.contains("table") ? require_string(step, "table") : input(0).base_table();
    out.set = EntitySet::full(catalog.table(table));
  } else if (op == "query") {
    QueryAst ast = QueryAst::from_json(require(step, "ast"));
    validate(ast, catalog);
    const Table& source = catalog.table(ast.source);
    out.table = eval_in_memory(ast, catalog);
    out.set = (!ast.is_aggregate() && projects_identifier(ast, source)) ? ast_to_set(ast, catalog)
                                                                        : ast_to_set(base_rows_query(ast, source), catalog);
  } else if (op == "set") {
    out.set = EntitySet::from_json(require(step, "set"), catalog);
  } else if (op == "set_algebra") {
    out.set = set_algebra(input(0), input(1), parse_set_op(require_string(step, "op")));
  } else if (op == "by_filter") {
    EntitySet in = input(0);
    Comparison cmp{{in.base_table(), require_string(step, "attribute")},
                   parse_compare_op(require_string(step, "op")),
                   literal_from_json(require(step, "value"))};
    out.set = by_filter(in, cmp, catalog);
  } else if (op == "by_facet") {
    out.facets = by_facet(input(0), require_string(step, "attribute"), catalog);
  } else if (op == "by_example") {
    EntitySet examples = input(0);
    SimilaritySpec spec;
    if (step.params.contains("features")) spec.features = step.params["features"].get<std::vector<std::string>>();
    spec.metric = parse_metric(step.params.value("metric", std::string("euclidean")));
    auto k = step.params.value("k", 10);
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1", step.id);
    spec.k = static_cast<std::size_t>(k);
    if (step.params.contains("taxonomy")) {
      spec.taxonomy = dataset_->find_taxonomy(require_string(step, "taxonomy"));
      if (spec.taxonomy == nullptr) {
        throw Error(ErrorCode::MissingTaxonomy, "no taxonomy '" + require_string(step, "taxonomy") + "'", step.id);
      }
    } else if (spec.metric == Metric::Semantic) {
      spec.taxonomy = dataset_->find_taxonomy(examples.base_table());
    }
    out.ranking = by_example(examples, spec, catalog);
    std::vector<RowId> rows;
    for (const auto& r : out.ranking) rows.push_back(r.row);
    out.set = EntitySet(examples.base_table(), std::move(rows));
  } else if (op == "by_overlap") {
    auto min_overlap = step.params.value("min_overlap", 1);
    if (min_overlap < 1) throw Error(ErrorCode::InvalidArgument, "min_overlap must be at least 1", step.id);
    for (auto& r : by_overlap(input(0), index_, static_cast<std::size_t>(min_overlap))) {
      out.ranked_sets.push_back({std::move(r.set), static_cast<double>(r.overlap), r.id});
    }
  } else if (op == "by_join") {
    EntitySet in = input(0);
    auto hops = join_path(step, in.base_table(), dataset_->graph);
    out.set = by_join(in, hops, dataset_->graph, catalog);
  } else if (op == "by_superset") {
    EntitySet target = input(0);
    auto candidates = rest_inputs(1);
    out.cover = by_superset(target, candidates);
    EntitySet covered(target.base_table(), {});
    for (auto i : out.cover->cover) covered = set_algebra(covered, candidates[i], SetOp::Union);
    out.set = covered;
  } else if (op == "by_analytics") {
    EntitySet in = input(0);
    auto candidates = rest_inputs(1);
    auto mode_s = step.params.value("mode", std::string("similar"));
    AnalyticsMode mode;
    if (mode_s == "similar") {
      mode = AnalyticsMode::Similar;
    } else if (mode_s == "dissimilar") {
      mode = AnalyticsMode::Dissimilar;
    } else {
      throw Error(ErrorCode::InvalidArgument, "mode must be similar or dissimilar", step.id);
    }
    for (const auto& r : by_analytics(in, require_string(step, "attribute"), candidates, mode, catalog)) {
      out.ranked_sets.push_back({candidates[r.candidate], r.divergence, r.candidate});
    }
  } else {
    throw Error(ErrorCode::UnknownOperator, "unknown operator '" + op + "'", step.id);
  }

  auto stamp = [&](EntitySet& s) {
    auto prov = s.provenance().value_or(Provenance{});
    prov.step_id = step.id;
    s.set_provenance(std::move(prov));
  };
  if (out.set) stamp(*out.set);
  if (out.facets) {
    for (auto& b : out.facets->buckets) stamp(b.members);
  }
  return out;
}

const StepOutput& PipelineState::execute(const DepStep& step, StepMetrics* metrics) {
  if (by_id_.count(step.id)) throw Error(ErrorCode::SchemaViolation, "duplicate step id '" + step.id + "'", step.id);
  const auto t0 = std::chrono::steady_clock::now();
  StepOutput out = run(step);
  const auto t1 = std::chrono::steady_clock::now();
  if (out.set && !index_.find(*out.set)) index_.register_set(*out.set);
  if (metrics != nullptr) {
    metrics->step_id = step.id;
    metrics->op = step.op;
    metrics->latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    metrics->memory_bytes_estimate = out.memory_bytes_estimate();
    metrics->result_size = out.cardinality();
  }
  by_id_.emplace(step.id, outputs_.size());
  outputs_.push_back(std::move(out));
  return outputs_.back();
}

void DepRun::throw_if_failed() const {
  if (!failure) return;
  throw Error(ErrorCode::StepFailure,
              "step '" + failure->step_id + "' failed: " + std::string(error_code_name(failure->code)) + ": " +
                  failure->message,
              failure->step_id);
}

DepRun run_dep(const Dep& dep, const Dataset& dataset) {
  DepRun result;
  PipelineState state(dataset);
  for (const auto& step : dep.steps) {
    StepMetrics m;
    try {
      state.execute(step, &m);
    } catch (const Error& e) {
      result.failure = StepError{step.id, e.code(), e.what()};
      break;
    } catch (const std::exception& e) {
      result.failure = StepError{step.id, ErrorCode::Internal, e.what()};
      break;
    }
    result.metrics.add(std::move(m));
  }
  result.outputs = state.outputs();
  return result;
}

// --- evaluation ---

Accuracy accuracy(const EntitySet& result, const EntitySet& gold) {
  if (result.base_table() != gold.base_table()) {
    throw Error(ErrorCode::BaseTableMismatch, "result is over " + result.base_table() + ", gold over " + gold.base_table());
  }
  if (gold.empty()) throw Error(ErrorCode::EmptyGold, "gold set is empty");
  const double hit = static_cast<double>(intersection_size(result, gold));
  Accuracy a;
  a.precision = result.empty() ? 1.0 : hit / static_cast<double>(result.size());
  a.recall = hit / static_cast<double>(gold.size());
  const double s = a.precision + a.recall;
  a.f1 = s == 0.0 ? 0.0 : 2.0 * a.precision * a.recall / s;
  return a;
}

std::optional<double> controllability(const SessionLog& log) {
  const auto n = log.interaction_count();
  if (n == 0) return std::nullopt;
  return 1.0 / static_cast<double>(n);
}

// --- signatures ---

std::string Signature::name() const { return attribute.empty() ? op : op + "(" + attribute + ")"; }

Signature Signature::parse(std::string_view name) {
  auto open = name.find('(');
  if (open == std::string_view::npos || name.back() != ')') return {std::string(name), {}};
  return {std::string(name.substr(0, open)), std::string(name.substr(open + 1, name.size() - open - 2))};
}

Signature step_signature(const DepStep& step) {
  const auto& p = step.params;
  auto str = [&](const char* key) {
    return p.contains(key) && p[key].is_string() ? p[key].get<std::string>() : std::string{};
  };
  if (step.op == "by_filter" || step.op == "by_facet" || step.op == "by_analytics") return {step.op, str("attribute")};
  if (step.op == "scan") return {step.op, str("table")};
  if (step.op == "query" && p.contains("ast") && p["ast"].is_object()) {
    return {step.op, p["ast"].value("source", std::string{})};
  }
  if (step.op == "by_example") {
    if (p.contains("features") && p["features"].is_array() && !p["features"].empty() && p["features"][0].is_string()) {
      return {step.op, p["features"][0].get<std::string>()};
    }
    return {step.op, str("taxonomy")};
  }
  if (step.op == "by_join") {
    if (p.contains("to")) return {step.op, str("to")};
    if (p.contains("path") && p["path"].is_array() && !p["path"].empty()) {
      const auto& last = p["path"].back();
      if (last.is_object()) return {step.op, last.value("to", std::string{})};
      if (last.is_array() && last.size() == 2 && last[1].is_string()) return {step.op, last[1].get<std::string>()};
    }
  }
  return {step.op, {}};
}

std::vector<DepStep> logged_steps(const SessionLog& log) {
  std::vector<DepStep> steps;
  for (const auto& e : log.events) {
    if (e.kind != EventKind::InterpretationChosen && e.kind != EventKind::OperatorApplied &&
        e.kind != EventKind::RecommendationAccepted) {
      continue;
    }
    if (e.payload.contains("step")) steps.push_back(DepStep::from_json(e.payload["step"]));
  }
  return steps;
}

}  // namespace xplore
