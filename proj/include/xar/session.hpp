// Recorded-session data model and its JSON Lines file format.
//
// A session file is UTF-8 JSON Lines with LF line endings. Each line is one
// object {"kind": "log" | "plan" | "image", "t": <seconds>, ...} carrying the
// fields of the corresponding record type. Unknown keys are rejected and
// timestamps must be non-decreasing (tolerance 1e-9). The format stands in
// for the live /rosout, /plan and /camera/image_raw streams of a robot run.

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "xar/errors.hpp"

namespace xar {

inline constexpr double kTimeTolerance = 1e-9;

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3 };

inline const char* to_string(LogLevel level) {
  switch (level) {
    case LogLevel::Debug: return "DEBUG";
    case LogLevel::Info: return "INFO";
    case LogLevel::Warn: return "WARN";
    case LogLevel::Error: return "ERROR";
  }
  return "?";
}

inline std::optional<LogLevel> parse_log_level(std::string_view s) {
  if (s == "DEBUG") return LogLevel::Debug;
  if (s == "INFO") return LogLevel::Info;
  if (s == "WARN") return LogLevel::Warn;
  if (s == "ERROR") return LogLevel::Error;
  return std::nullopt;
}

/// One timestamped textual log line, the /rosout surrogate.
struct LogRecord {
  double t = 0.0;  // seconds since session start
  LogLevel level = LogLevel::Info;
  std::string node;
  std::string msg;

  bool operator==(const LogRecord&) const = default;
};

/// A timestamped planned path as a 2D polyline, the /plan surrogate.
struct PlanSnapshot {
  double t = 0.0;
  std::vector<Point> poses;  // non-empty

  bool operator==(const PlanSnapshot&) const = default;
};

/// A timestamped camera frame reference, the /camera/image_raw surrogate.
/// caption_hint is consumed only by the fake caption backend.
struct FrameRecord {
  double t = 0.0;
  std::optional<std::string> image_ref;
  std::optional<std::string> caption_hint;

  bool operator==(const FrameRecord&) const = default;
};

using SessionEvent = std::variant<LogRecord, PlanSnapshot, FrameRecord>;

inline double event_time(const SessionEvent& event) {
  return std::visit([](const auto& e) { return e.t; }, event);
}

// Invariant checks return a reason string, or nullopt when the value is valid.

inline std::optional<std::string> invariant_error(const LogRecord& r) {
  if (!std::isfinite(r.t) || r.t < 0.0) return "t must be a finite non-negative number";
  if (r.node.empty()) return "node must be non-empty";
  if (r.msg.empty()) return "msg must be non-empty";
  return std::nullopt;
}

inline std::optional<std::string> invariant_error(const PlanSnapshot& p) {
  if (!std::isfinite(p.t) || p.t < 0.0) return "t must be a finite non-negative number";
  if (p.poses.empty()) return "poses must be non-empty";
  for (const Point& pose : p.poses) {
    if (!std::isfinite(pose.x) || !std::isfinite(pose.y)) {
      return "pose coordinates must be finite";
    }
  }
  return std::nullopt;
}

inline std::optional<std::string> invariant_error(const FrameRecord& f) {
  if (!std::isfinite(f.t) || f.t < 0.0) return "t must be a finite non-negative number";
  if (!f.image_ref && !f.caption_hint) {
    return "at least one of image_ref, caption_hint must be present";
  }
  if (f.image_ref && f.image_ref->empty()) return "image_ref must be non-empty when present";
  return std::nullopt;
}

inline std::optional<std::string> invariant_error(const SessionEvent& event) {
  return std::visit([](const auto& e) { return invariant_error(e); }, event);
}

namespace detail {

inline void require_keys(const nlohmann::json& obj, std::size_t line,
                         std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional = {}) {
  for (const char* key : required) {
    if (!obj.contains(key)) {
      throw MalformedLine(line, std::string("missing key \"") + key + "\"");
    }
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    auto matches = [&key](const char* k) { return key == k; };
    if (std::find_if(required.begin(), required.end(), matches) == required.end() &&
        std::find_if(optional.begin(), optional.end(), matches) == optional.end()) {
      throw MalformedLine(line, "unknown key \"" + key + "\"");
    }
  }
}

inline double number_field(const nlohmann::json& obj, const char* key, std::size_t line) {
  const nlohmann::json& v = obj.at(key);
  if (!v.is_number()) {
    throw MalformedLine(line, std::string("\"") + key + "\" must be a number");
  }
  return v.get<double>();
}

inline std::string string_field(const nlohmann::json& obj, const char* key, std::size_t line) {
  const nlohmann::json& v = obj.at(key);
  if (!v.is_string()) {
    throw MalformedLine(line, std::string("\"") + key + "\" must be a string");
  }
  return v.get<std::string>();
}

inline SessionEvent parse_event_line(const std::string& line_text, std::size_t line) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedLine(line, e.what());
  }
  if (!obj.is_object()) throw MalformedLine(line, "not a JSON object");
  if (!obj.contains("kind") || !obj.at("kind").is_string()) {
    throw MalformedLine(line, "missing string key \"kind\"");
  }
  const std::string kind = obj.at("kind").get<std::string>();

  SessionEvent event;
  if (kind == "log") {
    require_keys(obj, line, {"kind", "t", "level", "node", "msg"});
    LogRecord rec;
    rec.t = number_field(obj, "t", line);
    const std::string level = string_field(obj, "level", line);
    auto parsed = parse_log_level(level);
    if (!parsed) throw MalformedLine(line, "unknown level \"" + level + "\"");
    rec.level = *parsed;
    rec.node = string_field(obj, "node", line);
    rec.msg = string_field(obj, "msg", line);
    event = std::move(rec);
  } else if (kind == "plan") {
    require_keys(obj, line, {"kind", "t", "poses"});
    PlanSnapshot plan;
    plan.t = number_field(obj, "t", line);
    const nlohmann::json& poses = obj.at("poses");
    if (!poses.is_array()) throw MalformedLine(line, "\"poses\" must be an array");
    for (const nlohmann::json& pose : poses) {
      if (!pose.is_object()) throw MalformedLine(line, "pose must be an object");
      require_keys(pose, line, {"x", "y"});
      plan.poses.push_back(
          {number_field(pose, "x", line), number_field(pose, "y", line)});
    }
    event = std::move(plan);
  } else if (kind == "image") {
    require_keys(obj, line, {"kind", "t"}, {"image_ref", "caption_hint"});
    FrameRecord frame;
    frame.t = number_field(obj, "t", line);
    if (obj.contains("image_ref")) frame.image_ref = string_field(obj, "image_ref", line);
    if (obj.contains("caption_hint")) {
      frame.caption_hint = string_field(obj, "caption_hint", line);
    }
    event = std::move(frame);
  } else {
    throw UnknownKind(line, kind);
  }

  if (auto reason = invariant_error(event)) throw MalformedLine(line, *reason);
  return event;
}

inline nlohmann::ordered_json event_to_json(const SessionEvent& event) {
  nlohmann::ordered_json obj;
  if (const auto* rec = std::get_if<LogRecord>(&event)) {
    obj["kind"] = "log";
    obj["t"] = rec->t;
    obj["level"] = to_string(rec->level);
    obj["node"] = rec->node;
    obj["msg"] = rec->msg;
  } else if (const auto* plan = std::get_if<PlanSnapshot>(&event)) {
    obj["kind"] = "plan";
    obj["t"] = plan->t;
    nlohmann::ordered_json poses = nlohmann::ordered_json::array();
    for (const Point& pose : plan->poses) {
      nlohmann::ordered_json p;
      p["x"] = pose.x;
      p["y"] = pose.y;
      poses.push_back(std::move(p));
    }
    obj["poses"] = std::move(poses);
  } else {
    const auto& frame = std::get<FrameRecord>(event);
    obj["kind"] = "image";
    obj["t"] = frame.t;
    if (frame.image_ref) obj["image_ref"] = *frame.image_ref;
    if (frame.caption_hint) obj["caption_hint"] = *frame.caption_hint;
  }
  return obj;
}

}  // namespace detail

/// Parses a full session stream. Every malformed line yields a located error;
/// there is no partial silent result.
inline std::vector<SessionEvent> parse_session(std::string_view text) {
  std::vector<SessionEvent> events;
  std::size_t line = 0;
  std::size_t pos = 0;
  double last_t = 0.0;
  while (pos < text.size()) {
    ++line;
    std::size_t eol = text.find('\n', pos);
    std::string_view raw = (eol == std::string_view::npos)
                               ? text.substr(pos)
                               : text.substr(pos, eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() : eol + 1;
    if (raw.empty()) throw MalformedLine(line, "empty line");

    SessionEvent event = detail::parse_event_line(std::string(raw), line);
    const double t = event_time(event);
    if (!events.empty() && t < last_t - kTimeTolerance) {
      throw NonMonotonicTimestamp(line);
    }
    last_t = std::max(last_t, t);
    events.push_back(std::move(event));
  }
  return events;
}

/// Serializes events to the session format. parse_session(write_session(e))
/// reproduces e field-for-field.
inline std::string write_session(std::span<const SessionEvent> events) {
  std::string out;
  double last_t = 0.0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (auto reason = invariant_error(events[i])) throw InvariantViolation(i, *reason);
    const double t = event_time(events[i]);
    if (i > 0 && t < last_t - kTimeTolerance) {
      throw InvariantViolation(i, "timestamp decreases");
    }
    last_t = std::max(last_t, t);
    out += detail::event_to_json(events[i]).dump();
    out += '\n';
  }
  return out;
}

inline std::string write_session(const std::vector<SessionEvent>& events) {
  return write_session(std::span<const SessionEvent>(events));
}

}  // namespace xar
