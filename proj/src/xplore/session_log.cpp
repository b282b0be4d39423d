#include "xplore/session_log.hpp"

#include <array>
#include <sstream>

#include "xplore/error.hpp"

namespace xplore {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 7> kKindNames = {
    "nl_query",
    "interpretation_chosen",
    "operator_applied",
    "recommendation_shown",
    "recommendation_accepted",
    "recommendation_rejected",
    "backtrack",
};

}  // namespace

std::string_view event_kind_name(EventKind k) noexcept { return kKindNames[static_cast<std::size_t>(k)]; }

EventKind parse_event_kind(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<EventKind>(i);
  }
  throw Error(ErrorCode::SchemaViolation, "unknown event kind '" + std::string(s) + "'");
}

bool is_interaction(EventKind k) noexcept { return k != EventKind::RecommendationShown; }

json Event::to_json(const std::string& session_id) const {
  return json{{"session_id", session_id},
              {"timestamp_ms", timestamp_ms},
              {"kind", event_kind_name(kind)},
              {"payload", payload},
              {"latency_ms", latency_ms},
              {"result_size", result_size},
              {"memory_bytes_estimate", memory_bytes_estimate},
              {"clicks", clicks}};
}

Event Event::from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("timestamp_ms")) {
    throw Error(ErrorCode::SchemaViolation, "log event needs kind and timestamp_ms");
  }
  Event e;
  try {
    e.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    e.kind = parse_event_kind(j.at("kind").get<std::string>());
    e.payload = j.value("payload", json::object());
    e.latency_ms = j.value("latency_ms", 0.0);
    e.result_size = j.value("result_size", std::size_t{0});
    e.memory_bytes_estimate = j.value("memory_bytes_estimate", std::size_t{0});
    e.clicks = j.value("clicks", std::size_t{0});
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaViolation, std::string("malformed log event: ") + ex.what());
  }
  return e;
}

std::string SessionLog::to_jsonl() const {
  std::string out;
  for (const auto& e : events) {
    out += e.to_json(session_id).dump();
    out += '\n';
  }
  return out;
}

SessionLog SessionLog::from_jsonl(std::string_view text) {
  SessionLog log;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& ex) {
      throw Error(ErrorCode::SchemaViolation, ex.what(), "line " + std::to_string(lineno));
    }
    auto sid = j.value("session_id", std::string{});
    if (log.events.empty() && log.session_id.empty()) {
      log.session_id = sid;
    } else if (sid != log.session_id) {
      throw Error(ErrorCode::SchemaViolation, "log mixes sessions '" + log.session_id + "' and '" + sid + "'",
                  "line " + std::to_string(lineno));
    }
    log.events.push_back(Event::from_json(j));
  }
  return log;
}

void SessionLog::validate() const {
  bool seen_query = false;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const auto where = "event " + std::to_string(i);
    if (i > 0 && e.timestamp_ms < events[i - 1].timestamp_ms) {
      throw Error(ErrorCode::SchemaViolation, "timestamps decrease", where);
    }
    if (e.latency_ms < 0) throw Error(ErrorCode::SchemaViolation, "negative latency", where);
    if (e.kind == EventKind::NlQuery) seen_query = true;
    if (e.kind == EventKind::InterpretationChosen && !seen_query) {
      throw Error(ErrorCode::SchemaViolation, "interpretation_chosen before any nl_query", where);
    }
  }
}

std::size_t SessionLog::interaction_count() const {
  std::size_t n = 0;
  for (const auto& e : events) n += is_interaction(e.kind) ? 1 : 0;
  return n;
}

std::size_t SessionLog::count(EventKind k) const {
  std::size_t n = 0;
  for (const auto& e : events) n += e.kind == k ? 1 : 0;
  return n;
}

}  // namespace xplore
