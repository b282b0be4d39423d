#include "xplore/session.hpp"

#include <algorithm>

#include "xplore/error.hpp"
#include "xplore/explainer.hpp"
#include "xplore/sql_compiler.hpp"

namespace xplore {

using nlohmann::json;

std::int64_t system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

namespace {

json step_metrics_json(const StepMetrics& m) {
  return json{{"step_id", m.step_id},
              {"op", m.op},
              {"latency_ms", m.latency_ms},
              {"memory_bytes_estimate", m.memory_bytes_estimate},
              {"result_size", m.result_size}};
}

std::vector<std::string> canonical_list(const std::vector<Interpretation>& list) {
  std::vector<std::string> out;
  for (const auto& i : list) out.push_back(canonical_string(i.ast));
  return out;
}

// A query equivalent to the set the step produced, when one is easy to state.
std::optional<QueryAst> equivalent_ast(const std::vector<DepStep>& steps, const std::string& ref) {
  auto it = std::find_if(steps.begin(), steps.end(), [&](const DepStep& s) { return s.id == ref; });
  if (it == steps.end()) return std::nullopt;
  const DepStep& s = *it;
  try {
    if (s.op == "scan") return full_scan(s.params.at("table").get<std::string>());
    if (s.op == "query") {
      auto ast = QueryAst::from_json(s.params.at("ast"));
      if (ast.is_aggregate()) return std::nullopt;
      return ast;
    }
    if (s.op == "by_filter" && s.inputs.size() == 1) {
      auto ast = equivalent_ast(steps, s.inputs[0]);
      if (!ast || !ast->joins.empty() || ast->limit) return std::nullopt;
      ast->filter.push_back(Comparison{{ast->source, s.params.at("attribute").get<std::string>()},
                                       parse_compare_op(s.params.at("op").get<std::string>()),
                                       literal_from_json(s.params.at("value"))});
      return ast;
    }
    if (s.op == "by_facet" && s.inputs.size() == 1) {
      auto ast = equivalent_ast(steps, s.inputs[0]);
      if (!ast || ast->limit) return std::nullopt;
      ast->group_by = ColumnRef{ast->source, s.params.at("attribute").get<std::string>()};
      ast->aggregates = {{AggregateFn::Count, std::nullopt}};
      ast->projection.reset();
      ast->order_by.reset();
      return ast;
    }
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

[[noreturn]] void diverge(std::size_t position, const std::string& what) {
  throw Error(ErrorCode::ReplayDivergence, what, "event " + std::to_string(position));
}

}  // namespace

Session::Session(std::string id, std::shared_ptr<const Dataset> dataset, std::shared_ptr<const TransitionModel> model,
                 SessionOptions options)
    : id_(std::move(id)),
      dataset_(std::move(dataset)),
      model_(model ? std::move(model) : std::make_shared<const TransitionModel>()),
      options_(std::move(options)),
      state_(*dataset_) {
  if (!options_.clock) options_.clock = system_clock_ms;
  log_.session_id = id_;
}

std::string Session::next_step_id() const { return "s" + std::to_string(steps_.size() + 1); }

Event Session::make_event(EventKind kind, json payload, Started started) const {
  Event e;
  e.timestamp_ms = options_.clock();
  if (!log_.events.empty() && e.timestamp_ms < log_.events.back().timestamp_ms) {
    e.timestamp_ms = log_.events.back().timestamp_ms;
  }
  e.kind = kind;
  e.payload = std::move(payload);
  e.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  e.clicks = is_interaction(kind) ? 1 : 0;
  return e;
}

std::optional<EntitySet> Session::current_set() const {
  if (!current_) return std::nullopt;
  return state_.resolve_set(*current_);
}

json Session::result_json(const StepOutput& out) const {
  const Catalog& catalog = dataset_->catalog;
  json j = out.to_json(catalog);
  auto cell_json = [](const Cell& cell) {
    if (is_missing(cell)) return json(nullptr);
    if (std::holds_alternative<double>(cell)) return json(std::get<double>(cell));
    return json(std::get<std::string>(cell));
  };
  json headers = json::array();
  json rows = json::array();
  std::size_t total = 0;
  if (out.table) {
    // Query steps show what the query projects.
    for (const auto& h : out.table->headers) headers.push_back(h);
    total = out.table->rows.size();
    for (std::size_t i = 0; i < total && i < options_.result_row_cap; ++i) {
      json row = json::array();
      for (const auto& cell : out.table->rows[i]) row.push_back(cell_json(cell));
      rows.push_back(std::move(row));
    }
  } else if (out.set) {
    const Table& t = catalog.table(out.set->base_table());
    for (const auto& c : t.columns()) headers.push_back(c.name);
    total = out.set->size();
    for (std::size_t i = 0; i < total && i < options_.result_row_cap; ++i) {
      json row = json::array();
      for (std::size_t c = 0; c < t.columns().size(); ++c) row.push_back(cell_json(t.cell(out.set->rows()[i], c)));
      rows.push_back(std::move(row));
    }
  } else {
    return j;
  }
  j["rows"] = json{{"headers", headers}, {"rows", rows}, {"truncated", total > options_.result_row_cap}};
  return j;
}

std::string Session::explain_step(const DepStep& step, const StepOutput& out) const {
  if (auto ast = equivalent_ast(steps_, step.id)) return explain_query(*ast, dataset_->graph, dataset_->templates);
  if (out.set && step.inputs.size() == 1 && step.inputs[0] != "catalog") {
    try {
      return explain_relation(state_.resolve_set(step.inputs[0]), *out.set, dataset_->graph, dataset_->templates);
    } catch (const Error&) {
    }
  }
  return "Applied " + step.op + " to " + (step.inputs.empty() ? std::string("the catalog") : step.inputs[0]) + ".";
}

json Session::query(const std::string& question, std::optional<std::size_t> n) {
  const auto started = std::chrono::steady_clock::now();
  const std::size_t count = n.value_or(options_.default_n);
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
  auto interpretations = interpret(question, dataset_->graph, dataset_->catalog, count, dataset_->nl);
  json list = json::array();
  for (const auto& i : interpretations) {
    json item = i.to_json();
    item["sql"] = compile_to_sql(i.ast, dataset_->catalog);
    item["nl_explanation"] = explain_query(i.ast, dataset_->graph, dataset_->templates);
    list.push_back(std::move(item));
  }
  auto e = make_event(EventKind::NlQuery,
                      json{{"question", question}, {"n", count}, {"interpretations", canonical_list(interpretations)}},
                      started);
  e.result_size = interpretations.size();
  last_interpretations_ = std::move(interpretations);
  log_.events.push_back(std::move(e));
  return json{{"interpretations", list}};
}

json Session::run_step(DepStep step, EventKind kind, json payload, Started started) {
  StepMetrics m;
  const StepOutput& out = state_.execute(step, &m);
  const auto digest = out.digest(dataset_->catalog);
  if (out.set) current_ = step.id;
  payload["step"] = step.to_json();
  payload["digest"] = digest;
  payload["step_latency_ms"] = m.latency_ms;
  auto e = make_event(kind, std::move(payload), started);
  e.result_size = m.result_size;
  e.memory_bytes_estimate = m.memory_bytes_estimate;
  steps_.push_back(step);
  step_metrics_.push_back(m);
  log_.events.push_back(std::move(e));
  return json{{"step_id", step.id},
              {"result", result_json(out)},
              {"explanation", explain_step(step, out)},
              {"metrics", step_metrics_json(m)},
              {"current", current_ ? json(*current_) : json(nullptr)}};
}

json Session::choose(std::size_t index) {
  const auto started = std::chrono::steady_clock::now();
  if (last_interpretations_.empty()) throw Error(ErrorCode::InvalidArgument, "no interpretations to choose from; query first");
  if (index >= last_interpretations_.size()) {
    throw Error(ErrorCode::InvalidArgument, "interpretation index " + std::to_string(index) + " out of range");
  }
  DepStep step{next_step_id(), "query", json{{"ast", last_interpretations_[index].ast.to_json()}}, {"catalog"}};
  return run_step(std::move(step), EventKind::InterpretationChosen, json{{"interpretation_index", index}}, started);
}

json Session::apply(const std::string& op, const json& params, std::optional<std::vector<std::string>> inputs) {
  const auto started = std::chrono::steady_clock::now();
  DepStep step;
  step.id = next_step_id();
  step.op = op;
  step.params = params.is_null() ? json::object() : params;
  const auto& ops = registered_operators();
  if (std::find(ops.begin(), ops.end(), op) == ops.end()) {
    throw Error(ErrorCode::UnknownOperator, "unknown operator '" + op + "'");
  }
  if (inputs) {
    step.inputs = std::move(*inputs);
  } else if (op == "scan" || op == "query" || op == "set") {
    step.inputs = {"catalog"};
  } else {
    if (!current_) throw Error(ErrorCode::InvalidArgument, "no current set; run a query or scan first");
    step.inputs = {*current_};
  }
  return run_step(std::move(step), EventKind::OperatorApplied, json::object(), started);
}

json Session::backtrack(const std::string& ref) {
  const auto started = std::chrono::steady_clock::now();
  EntitySet target = state_.resolve_set(ref);
  json payload{{"step_id", ref}, {"previous", current_ ? json(*current_) : json(nullptr)}};
  auto e = make_event(EventKind::Backtrack, std::move(payload), started);
  e.result_size = target.size();
  current_ = ref;
  log_.events.push_back(std::move(e));
  return json{{"current", ref}, {"set", target.to_json(dataset_->catalog)}, {"size", target.size()}};
}

json Session::recommendations(std::optional<std::size_t> k, std::optional<double> lambda) {
  const auto started = std::chrono::steady_clock::now();
  const std::size_t kk = k.value_or(options_.default_k);
  const double lam = lambda.value_or(options_.default_lambda);
  std::vector<Recommendation> recs;
  std::string mode;
  if (steps_.empty() || !current_) {
    recs = cold_start(*dataset_, kk);
    mode = "cold_start";
  } else {
    recs = warm_start(*model_, log_, *current_set(), kk, lam, *dataset_);
    mode = "warm_start";
  }
  json list = json::array();
  for (const auto& r : recs) list.push_back(r.to_json());
  auto e = make_event(EventKind::RecommendationShown,
                      json{{"mode", mode}, {"k", kk}, {"lambda", lam}, {"recommendations", list}}, started);
  e.result_size = recs.size();
  last_shown_ = std::move(recs);
  log_.events.push_back(std::move(e));
  return json{{"mode", mode}, {"recommendations", list}};
}

json Session::accept(std::size_t index) {
  const auto started = std::chrono::steady_clock::now();
  if (index >= last_shown_.size()) {
    throw Error(ErrorCode::InvalidArgument, "recommendation index " + std::to_string(index) + " was not shown");
  }
  const auto& rec = last_shown_[index];
  DepStep step = rec.to_step(next_step_id(), current_.value_or("catalog"));
  return run_step(std::move(step), EventKind::RecommendationAccepted,
                  json{{"index", index}, {"recommendation", rec.to_json()}}, started);
}

json Session::reject(std::size_t index) {
  const auto started = std::chrono::steady_clock::now();
  if (index >= last_shown_.size()) {
    throw Error(ErrorCode::InvalidArgument, "recommendation index " + std::to_string(index) + " was not shown");
  }
  auto e = make_event(EventKind::RecommendationRejected,
                      json{{"index", index}, {"recommendation", last_shown_[index].to_json()}}, started);
  log_.events.push_back(std::move(e));
  return json{{"rejected", index}};
}

Dep Session::pipeline() const {
  Dep d;
  d.steps = steps_;
  return d;
}

DepMetrics Session::metrics() const {
  DepMetrics d;
  for (const auto& m : step_metrics_) d.add(m);
  d.backtrack_count = log_.count(EventKind::Backtrack);
  return d;
}

json Session::metrics_json() const {
  json j = metrics().to_json();
  auto c = controllability(log_);
  j["controllability"] = c ? json(*c) : json(nullptr);
  j["interaction_count"] = log_.interaction_count();
  j["event_count"] = log_.events.size();
  return j;
}

// --- replay ---

void Session::replay_event(const Event& e, std::size_t position) {
  const auto& p = e.payload;
  switch (e.kind) {
    case EventKind::NlQuery: {
      std::vector<Interpretation> list;
      try {
        list = interpret(p.at("question").get<std::string>(), dataset_->graph, dataset_->catalog,
                         p.value("n", options_.default_n), dataset_->nl);
      } catch (const Error& err) {
        diverge(position, std::string("question no longer interprets: ") + err.what());
      }
      if (p.contains("interpretations") && canonical_list(list) != p["interpretations"].get<std::vector<std::string>>()) {
        diverge(position, "interpretations differ from the recording");
      }
      last_interpretations_ = std::move(list);
      break;
    }
    case EventKind::InterpretationChosen:
    case EventKind::OperatorApplied:
    case EventKind::RecommendationAccepted: {
      if (!p.contains("step")) diverge(position, "step event without a step record");
      DepStep step = DepStep::from_json(p["step"]);
      if (e.kind == EventKind::InterpretationChosen) {
        const auto idx = p.value("interpretation_index", std::size_t{0});
        if (idx >= last_interpretations_.size() ||
            canonical_string(last_interpretations_[idx].ast) != canonical_string(QueryAst::from_json(step.params.at("ast")))) {
          diverge(position, "chosen interpretation differs from the recording");
        }
      }
      const StepOutput* out = nullptr;
      try {
        out = &state_.execute(step);
      } catch (const Error& err) {
        diverge(position, "step '" + step.id + "' now fails: " + err.what());
      }
      if (p.contains("digest") && out->digest(dataset_->catalog) != p["digest"].get<std::string>()) {
        diverge(position, "step '" + step.id + "' output differs from the recording");
      }
      if (out->set) current_ = step.id;
      StepMetrics m{step.id, step.op, p.value("step_latency_ms", e.latency_ms), e.memory_bytes_estimate, e.result_size};
      steps_.push_back(std::move(step));
      step_metrics_.push_back(m);
      break;
    }
    case EventKind::Backtrack: {
      const auto ref = p.at("step_id").get<std::string>();
      try {
        state_.resolve_set(ref);
      } catch (const Error& err) {
        diverge(position, std::string("backtrack target unavailable: ") + err.what());
      }
      current_ = ref;
      break;
    }
    case EventKind::RecommendationShown: {
      last_shown_.clear();
      for (const auto& r : p.value("recommendations", json::array())) last_shown_.push_back(Recommendation::from_json(r));
      break;
    }
    case EventKind::RecommendationRejected:
      break;
  }
  log_.events.push_back(e);
}

std::unique_ptr<Session> Session::restore(const SessionLog& log, std::shared_ptr<const Dataset> dataset,
                                          std::shared_ptr<const TransitionModel> model, SessionOptions options) {
  log.validate();
  auto s = std::make_unique<Session>(log.session_id, std::move(dataset), std::move(model), std::move(options));
  for (std::size_t i = 0; i < log.events.size(); ++i) s->replay_event(log.events[i], i);
  return s;
}

ReplayResult replay(const SessionLog& log, const Dataset& dataset) {
  // Non-owning alias; the session does not outlive this call.
  std::shared_ptr<const Dataset> ds(std::shared_ptr<const Dataset>{}, &dataset);
  auto s = Session::restore(log, ds, nullptr);
  ReplayResult r;
  r.outputs = s->outputs();
  for (const auto& e : log.events) {
    if (e.kind == EventKind::NlQuery && e.payload.contains("interpretations")) {
      r.interpretations.push_back(e.payload["interpretations"].get<std::vector<std::string>>());
    }
  }
  return r;
}

}  // namespace xplore
