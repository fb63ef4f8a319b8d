// Synthetic desk-scale navigation scenario: a robot plans a straight corridor
// run from start to goal, an obstacle appears mid-route and the plan is
// replanned through a detour apex. The generated session is the fixture for
// the end-to-end tests and must always trigger exactly one deviation.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "xar/errors.hpp"
#include "xar/path_monitor.hpp"
#include "xar/session.hpp"

namespace xar {

struct ScenarioConfig {
  Point start{0.0, 0.0};
  Point goal{10.0, 0.0};
  double obstacle_time = 2.0;
  Point detour_apex{5.0, 2.0};
  double frame_period = 1.0;
  std::string caption_hint = "a person's arm with blue and white stripes blocking the corridor";
};

inline std::optional<std::string> invariant_error(const ScenarioConfig& cfg) {
  if (!std::isfinite(cfg.start.x) || !std::isfinite(cfg.start.y) ||
      !std::isfinite(cfg.goal.x) || !std::isfinite(cfg.goal.y) ||
      !std::isfinite(cfg.detour_apex.x) || !std::isfinite(cfg.detour_apex.y)) {
    return "coordinates must be finite";
  }
  if (cfg.start == cfg.goal) return "start and goal must differ";
  if (!std::isfinite(cfg.obstacle_time) || cfg.obstacle_time < 0.0) {
    return "obstacle_time must be a finite non-negative number";
  }
  if (!std::isfinite(cfg.frame_period) || cfg.frame_period <= 0.0) {
    return "frame_period must be > 0";
  }
  if (cfg.caption_hint.empty()) return "caption_hint must be non-empty";
  return std::nullopt;
}

namespace detail {

inline Point lerp(const Point& a, const Point& b, double s) {
  return {a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
}

}  // namespace detail

/// Generates the session events in time order. The straight plan runs
/// start -> 40% -> 60% -> goal; the replanned path routes the middle segment
/// through detour_apex. Refuses configs whose detour would not trip the
/// deviation thresholds.
inline std::vector<SessionEvent> generate(const ScenarioConfig& cfg = {},
                                          const MonitorConfig& monitor = {}) {
  if (auto reason = invariant_error(cfg)) throw ConfigError(*reason);
  if (auto reason = invariant_error(monitor)) throw ConfigError(*reason);

  const Point waypoint_a = detail::lerp(cfg.start, cfg.goal, 0.4);
  const Point waypoint_b = detail::lerp(cfg.start, cfg.goal, 0.6);
  const PlanSnapshot straight{0.0, {cfg.start, waypoint_a, waypoint_b, cfg.goal}};
  const PlanSnapshot detour{cfg.obstacle_time,
                            {cfg.start, waypoint_a, cfg.detour_apex, waypoint_b, cfg.goal}};

  const double straight_len = path_length(straight);
  const double detour_len = path_length(detour);
  if (!(detour_len > monitor.ratio_threshold * straight_len) ||
      !(detour_len - straight_len >= monitor.min_abs_increase)) {
    throw InvalidScenario(
        "detour length " + std::to_string(detour_len) +
        " does not exceed the deviation thresholds over straight length " +
        std::to_string(straight_len) + "; the replanning would go undetected");
  }

  const double end_time = cfg.obstacle_time + 2.0 * cfg.frame_period;

  // Frames on the period grid, plus one at the obstacle moment itself so the
  // deviation always has a frame to synchronize with.
  std::vector<double> frame_times;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * cfg.frame_period;
    if (t > end_time + kTimeTolerance) break;
    frame_times.push_back(t);
  }
  const bool on_grid = std::any_of(frame_times.begin(), frame_times.end(), [&](double t) {
    return std::abs(t - cfg.obstacle_time) <= kTimeTolerance;
  });
  if (!on_grid) frame_times.push_back(cfg.obstacle_time);
  std::sort(frame_times.begin(), frame_times.end());

  auto frame_at = [&cfg](double t) {
    FrameRecord frame;
    frame.t = t;
    frame.caption_hint = cfg.caption_hint;
    return frame;
  };

  std::vector<SessionEvent> events;
  events.emplace_back(LogRecord{0.0, LogLevel::Info, "nav", "navigation started from S to G"});
  events.emplace_back(straight);
  // Frames up to the obstacle moment precede the replanned snapshot so the
  // streaming monitor can pair the event with the frame at that moment.
  std::size_t i = 0;
  for (; i < frame_times.size() && frame_times[i] <= cfg.obstacle_time + kTimeTolerance; ++i) {
    events.emplace_back(frame_at(frame_times[i]));
  }
  events.emplace_back(detour);
  for (; i < frame_times.size(); ++i) {
    events.emplace_back(frame_at(frame_times[i]));
  }
  events.emplace_back(LogRecord{end_time, LogLevel::Info, "nav", "goal reached"});
  return events;
}

}  // namespace xar
