#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace xplore {

enum class EventKind {
  NlQuery,
  InterpretationChosen,
  OperatorApplied,
  RecommendationShown,
  RecommendationAccepted,
  RecommendationRejected,
  Backtrack,
};

std::string_view event_kind_name(EventKind k) noexcept;  // "nl_query", ...
EventKind parse_event_kind(std::string_view s);

// Everything except recommendation_shown is a user interaction.
bool is_interaction(EventKind k) noexcept;

struct Event {
  std::int64_t timestamp_ms = 0;
  EventKind kind = EventKind::NlQuery;
  // Free-form; step-producing events carry {"step": {id, op, params, inputs}, "digest": ...}.
  nlohmann::json payload = nlohmann::json::object();
  double latency_ms = 0.0;
  std::size_t result_size = 0;
  std::size_t memory_bytes_estimate = 0;
  std::size_t clicks = 0;

  nlohmann::json to_json(const std::string& session_id) const;
  static Event from_json(const nlohmann::json& j);
};

struct SessionLog {
  std::string session_id;
  std::vector<Event> events;

  // One JSON object per line, each carrying the session id.
  std::string to_jsonl() const;
  static SessionLog from_jsonl(std::string_view text);

  // Throws SchemaViolation: timestamps must not decrease, interpretation_chosen
  // must follow an nl_query, latencies must be non-negative.
  void validate() const;

  std::size_t interaction_count() const;
  std::size_t count(EventKind k) const;
};

}  // namespace xplore
