#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xplore/dataset.hpp"
#include "xplore/entity_set.hpp"
#include "xplore/error.hpp"
#include "xplore/evaluator.hpp"
#include "xplore/operators.hpp"
#include "xplore/overlap_index.hpp"
#include "xplore/session_log.hpp"

namespace xplore {

inline constexpr std::string_view kDepVersion = "1";

struct DepStep {
  std::string id;
  std::string op;
  nlohmann::json params = nlohmann::json::object();
  // Earlier step ids, "catalog", or "<step>:<member>" selecting one facet
  // bucket (by value) or one ranked set (by position).
  std::vector<std::string> inputs;

  bool operator==(const DepStep&) const = default;
  nlohmann::json to_json() const;
  static DepStep from_json(const nlohmann::json& j);  // throws SchemaViolation
};

struct Dep {
  std::string version = std::string(kDepVersion);
  std::vector<DepStep> steps;

  bool operator==(const Dep&) const = default;
  nlohmann::json to_json() const;
  // Throws UnknownVersion or SchemaViolation (missing fields, duplicate ids,
  // forward or dangling input refs).
  static Dep from_json(const nlohmann::json& j);
};

Dep read_dep(const std::filesystem::path& path);
void write_dep(const Dep& dep, const std::filesystem::path& path);

// Operator names run_dep understands.
const std::vector<std::string>& registered_operators();

struct ScoredSet {
  EntitySet set;
  double score = 0.0;  // overlap size or divergence
  std::size_t candidate = 0;
};

struct StepOutput {
  std::string step_id;
  std::string op;
  std::optional<EntitySet> set;
  std::optional<FacetResult> facets;
  std::vector<RankedRow> ranking;
  std::vector<ScoredSet> ranked_sets;
  std::optional<CoverResult> cover;
  std::optional<ResultTable> table;

  // Set size, bucket count, ranking length or row count, by output kind.
  std::size_t cardinality() const;
  // 8 bytes per materialized id or score, 16 per result cell.
  std::size_t memory_bytes_estimate() const;
  nlohmann::json to_json(const Catalog& catalog) const;
  // FNV-1a over the canonical JSON; identical outputs give identical digests.
  std::string digest(const Catalog& catalog) const;
};

struct StepMetrics {
  std::string step_id;
  std::string op;
  double latency_ms = 0.0;
  std::size_t memory_bytes_estimate = 0;
  std::size_t result_size = 0;
};

struct DepMetrics {
  std::vector<StepMetrics> steps;
  double total_latency_ms = 0.0;
  std::size_t peak_memory_bytes = 0;
  std::size_t step_count = 0;
  std::size_t backtrack_count = 0;

  void add(StepMetrics m);
  // Aggregates recomputed from the per-step entries.
  DepMetrics recomputed() const;
  nlohmann::json to_json() const;
};

// Executes steps one at a time against a dataset, keeping every output and an
// overlap index over all set-valued outputs.
class PipelineState {
 public:
  explicit PipelineState(const Dataset& dataset);

  // Throws the underlying module error; state is unchanged on failure.
  const StepOutput& execute(const DepStep& step, StepMetrics* metrics = nullptr);

  const StepOutput* find(std::string_view step_id) const;
  const std::vector<StepOutput>& outputs() const noexcept { return outputs_; }
  // Resolves an input reference to a set.
  EntitySet resolve_set(const std::string& ref) const;
  const OverlapIndex& index() const noexcept { return index_; }
  const Dataset& dataset() const noexcept { return *dataset_; }

 private:
  StepOutput run(const DepStep& step);

  const Dataset* dataset_;
  std::vector<StepOutput> outputs_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  OverlapIndex index_;
};

struct StepError {
  std::string step_id;
  ErrorCode code = ErrorCode::Internal;
  std::string message;
};

struct DepRun {
  std::vector<StepOutput> outputs;  // up to, not including, a failed step
  DepMetrics metrics;
  std::optional<StepError> failure;

  // Throws StepFailure naming the step; location is the step id.
  void throw_if_failed() const;
};

DepRun run_dep(const Dep& dep, const Dataset& dataset);

struct Accuracy {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// An empty result has precision 1 by convention.
Accuracy accuracy(const EntitySet& result, const EntitySet& gold);

// 1 / number of interaction events; nullopt when there are none.
std::optional<double> controllability(const SessionLog& log);

// Operator step signature used by the recommender: (operator, attribute).
struct Signature {
  std::string op;
  std::string attribute;

  auto operator<=>(const Signature&) const = default;
  std::string name() const;  // "by_filter(country)", or the bare op
  static Signature parse(std::string_view name);
};

Signature step_signature(const DepStep& step);

// Steps recorded in a log (chosen interpretations, applied operators and
// accepted recommendations), in order.
std::vector<DepStep> logged_steps(const SessionLog& log);

}  // namespace xplore
