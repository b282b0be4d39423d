#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xplore/dataset.hpp"
#include "xplore/entity_set.hpp"
#include "xplore/pipeline.hpp"
#include "xplore/session_log.hpp"

namespace xplore {

enum class RecommendationKind { StarterQuery, NextOperator };

struct Recommendation {
  RecommendationKind kind = RecommendationKind::StarterQuery;
  // starter_query: {"ast": QueryAst}; next_operator: {"op", "params", "signature"}.
  nlohmann::json payload = nlohmann::json::object();
  double score = 0.0;
  std::string rationale;

  nlohmann::json to_json() const;
  static Recommendation from_json(const nlohmann::json& j);
  // The step this recommendation runs when accepted.
  DepStep to_step(std::string id, const std::string& current_ref) const;
};

inline constexpr double kFullScanStarterScore = 0.5;
inline constexpr std::size_t kFacetMaxDistinct = 20;

// entropy / ln(distinct), 0 when distinct <= 1.
double normalized_entropy(const ColumnProfile& p);

// Full scans per table and facets over categorical columns with 2..20
// distinct values, ranked by score then by name.
std::vector<Recommendation> cold_start(const Dataset& dataset, std::size_t k);

// First-order transition counts between step signatures, Laplace smoothed.
class TransitionModel {
 public:
  explicit TransitionModel(double alpha = 0.1);

  double alpha() const noexcept { return alpha_; }
  const std::vector<Signature>& known() const noexcept { return known_; }

  void add_signature(const Signature& s);
  void add_transition(const Signature& from, const Signature& to, double count = 1.0);
  double count(const Signature& from, const Signature& to) const;
  // (count + alpha) / (row total + alpha * |known|); uniform for unseen sources.
  double probability(const Signature& from, const Signature& to) const;

  // Same model with every raw count multiplied by `factor`.
  TransitionModel scaled(double factor) const;

  nlohmann::json to_json() const;
  static TransitionModel from_json(const nlohmann::json& j);

 private:
  double alpha_;
  std::vector<Signature> known_;  // sorted
  std::map<Signature, std::map<Signature, double>> counts_;
};

TransitionModel train_transitions(std::span<const SessionLog> logs, double alpha = 0.1);

// score = (1 - lambda) * P(next | last) + lambda * novelty, novelty being 1 for
// signatures the session has not used. Candidates that cannot be instantiated
// against the current set's table are dropped. Throws EmptySession.
std::vector<Recommendation> warm_start(const TransitionModel& model, const SessionLog& session,
                                       const EntitySet& current_set, std::size_t k, double lambda,
                                       const Dataset& dataset);

}  // namespace xplore
