#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xplore/dataset.hpp"
#include "xplore/guide.hpp"
#include "xplore/nl_frontend.hpp"
#include "xplore/pipeline.hpp"
#include "xplore/session_log.hpp"

namespace xplore {

using Clock = std::function<std::int64_t()>;  // milliseconds
std::int64_t system_clock_ms();

struct SessionOptions {
  double default_lambda = 0.2;
  std::size_t default_k = 5;
  std::size_t default_n = 3;
  std::size_t result_row_cap = 1000;
  Clock clock = system_clock_ms;
};

// One exploration session: the interaction loop behind the HTTP API. Every
// successful mutation appends exactly one log event; failed calls leave the
// session untouched. Not internally synchronized; see mutex().
class Session {
 public:
  Session(std::string id, std::shared_ptr<const Dataset> dataset, std::shared_ptr<const TransitionModel> model,
          SessionOptions options = {});

  // Rebuilds a session by re-executing a recorded log. Throws ReplayDivergence
  // at the first event whose outputs differ from the recording.
  static std::unique_ptr<Session> restore(const SessionLog& log, std::shared_ptr<const Dataset> dataset,
                                          std::shared_ptr<const TransitionModel> model, SessionOptions options = {});

  const std::string& id() const noexcept { return id_; }
  const Dataset& dataset() const noexcept { return *dataset_; }

  // {interpretations:[{ast, sql, nl_explanation, score, bindings, unmatched}]}
  nlohmann::json query(const std::string& question, std::optional<std::size_t> n = std::nullopt);
  // {step_id, result, metrics}
  nlohmann::json choose(std::size_t interpretation_index);
  nlohmann::json apply(const std::string& op, const nlohmann::json& params,
                       std::optional<std::vector<std::string>> inputs = std::nullopt);
  // `ref` is a step id or a "<step>:<member>" selection.
  nlohmann::json backtrack(const std::string& ref);
  nlohmann::json recommendations(std::optional<std::size_t> k = std::nullopt,
                                 std::optional<double> lambda = std::nullopt);
  nlohmann::json accept(std::size_t index);
  nlohmann::json reject(std::size_t index);

  Dep pipeline() const;
  DepMetrics metrics() const;
  nlohmann::json metrics_json() const;
  const SessionLog& log() const noexcept { return log_; }
  const std::vector<StepOutput>& outputs() const noexcept { return state_.outputs(); }
  const std::optional<std::string>& current_ref() const noexcept { return current_; }
  std::optional<EntitySet> current_set() const;

  // Rows of a set's members, capped, for result views.
  nlohmann::json result_json(const StepOutput& out) const;

  std::mutex& mutex() noexcept { return mutex_; }

 private:
  std::string explain_step(const DepStep& step, const StepOutput& out) const;

  using Started = std::chrono::steady_clock::time_point;

  std::string next_step_id() const;
  Event make_event(EventKind kind, nlohmann::json payload, Started started) const;
  nlohmann::json run_step(DepStep step, EventKind kind, nlohmann::json payload, Started started);
  void replay_event(const Event& e, std::size_t position);

  std::string id_;
  std::shared_ptr<const Dataset> dataset_;
  std::shared_ptr<const TransitionModel> model_;
  SessionOptions options_;
  PipelineState state_;
  std::vector<DepStep> steps_;
  std::vector<StepMetrics> step_metrics_;
  SessionLog log_;
  std::optional<std::string> current_;
  std::vector<Interpretation> last_interpretations_;
  std::vector<Recommendation> last_shown_;
  std::mutex mutex_;
};

struct ReplayResult {
  std::vector<StepOutput> outputs;
  // Canonical AST strings per replayed nl_query, in order.
  std::vector<std::vector<std::string>> interpretations;
};

ReplayResult replay(const SessionLog& log, const Dataset& dataset);

}  // namespace xplore
