// Planned-path tracking and replanning detection. A deviation fires when the
// planned path length jumps past both a ratio and an absolute threshold
// against the running baseline. The baseline follows the minimum length seen
// since the last event, so a plan that naturally shrinks as the robot
// advances can neither mask nor fabricate a later deviation.

#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "xar/errors.hpp"
#include "xar/session.hpp"

namespace xar {

/// A detected significant path-length increase, paired with the camera frame
/// nearest to the trigger time when one is close enough.
struct DeviationEvent {
  double t = 0.0;
  double old_length = 0.0;
  double new_length = 0.0;
  std::optional<FrameRecord> frame;
};

struct MonitorConfig {
  double ratio_threshold = 1.2;   // > 1
  double min_abs_increase = 0.25; // meters, >= 0
  double sync_tolerance = 0.5;    // seconds, > 0
};

inline std::optional<std::string> invariant_error(const MonitorConfig& cfg) {
  if (!std::isfinite(cfg.ratio_threshold) || cfg.ratio_threshold <= 1.0) {
    return "ratio_threshold must be > 1";
  }
  if (!std::isfinite(cfg.min_abs_increase) || cfg.min_abs_increase < 0.0) {
    return "min_abs_increase must be >= 0";
  }
  if (!std::isfinite(cfg.sync_tolerance) || cfg.sync_tolerance <= 0.0) {
    return "sync_tolerance must be > 0";
  }
  return std::nullopt;
}

/// Sum of Euclidean segment lengths; 0 for a single pose.
inline double path_length(const PlanSnapshot& plan) {
  double total = 0.0;
  for (std::size_t i = 1; i < plan.poses.size(); ++i) {
    const double dx = plan.poses[i].x - plan.poses[i - 1].x;
    const double dy = plan.poses[i].y - plan.poses[i - 1].y;
    total += std::sqrt(dx * dx + dy * dy);
  }
  return total;
}

/// The frame minimizing |frame.t - event_t|, ties broken toward the earlier
/// frame. Throws NoFrameInTolerance when the best gap exceeds tolerance.
inline const FrameRecord& sync_frame(double event_t, std::span<const FrameRecord> frames,
                                     double tolerance) {
  const FrameRecord* best = nullptr;
  double best_gap = 0.0;
  for (const FrameRecord& frame : frames) {
    const double gap = std::abs(frame.t - event_t);
    if (!best || gap < best_gap) {  // strict: ties keep the earlier frame
      best = &frame;
      best_gap = gap;
    }
  }
  if (!best || best_gap > tolerance) throw NoFrameInTolerance(event_t);
  return *best;
}

/// Stream processor over PlanSnapshots. Owned by a single consumer; plans
/// must arrive in timestamp order.
class PathMonitor {
 public:
  PathMonitor() : PathMonitor(MonitorConfig{}) {}
  explicit PathMonitor(MonitorConfig cfg) : cfg_(cfg) {
    if (auto reason = invariant_error(cfg_)) throw ConfigError(*reason);
  }

  /// Feeds the next plan. The first plan only sets the baseline. A later plan
  /// raises an event iff length > ratio_threshold * baseline and the increase
  /// is at least min_abs_increase; the event carries the nearest frame from
  /// frames_so_far when one lies within sync_tolerance.
  std::optional<DeviationEvent> observe_plan(const PlanSnapshot& plan,
                                             std::span<const FrameRecord> frames_so_far) {
    if (has_baseline_ && plan.t < last_t_ - kTimeTolerance) {
      throw OutOfOrderPlan(plan.t, last_t_);
    }
    last_t_ = plan.t;

    const double length = path_length(plan);
    if (!has_baseline_) {
      has_baseline_ = true;
      baseline_ = length;
      return std::nullopt;
    }

    const bool significant = length > cfg_.ratio_threshold * baseline_ &&
                             length - baseline_ >= cfg_.min_abs_increase;
    if (!significant) {
      if (length < baseline_) baseline_ = length;
      return std::nullopt;
    }

    DeviationEvent event;
    event.t = plan.t;
    event.old_length = baseline_;
    event.new_length = length;
    try {
      event.frame = sync_frame(plan.t, frames_so_far, cfg_.sync_tolerance);
    } catch (const NoFrameInTolerance&) {
      event.frame = std::nullopt;
    }
    baseline_ = length;
    return event;
  }

  const MonitorConfig& config() const { return cfg_; }
  std::optional<double> baseline() const {
    return has_baseline_ ? std::optional<double>(baseline_) : std::nullopt;
  }

 private:
  MonitorConfig cfg_;
  bool has_baseline_ = false;
  double baseline_ = 0.0;
  double last_t_ = 0.0;
};

}  // namespace xar
