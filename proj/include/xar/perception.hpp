// Turns a deviation's synchronized camera frame into text via a pluggable
// caption backend and renders the two log records injected into the stream.
// The "image-to-text: " prefix is a fixed marker so retrieval and tests can
// target camera-derived logs reliably.

#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "xar/errors.hpp"
#include "xar/http_backend.hpp"
#include "xar/path_monitor.hpp"
#include "xar/session.hpp"

namespace xar {

inline constexpr std::string_view kMonitorNode = "explainability_monitor";
inline constexpr std::string_view kCaptionLogPrefix = "image-to-text: ";
inline constexpr std::string_view kDefaultCaptionPrompt = "Describe the image concisely.";

struct CaptionBackendConfig {
  BackendMode mode = BackendMode::Fake;
  std::string endpoint_url;  // required for http mode
  double timeout_s = 30.0;
  std::string model_name;
  std::string prompt = std::string(kDefaultCaptionPrompt);
};

namespace detail {

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingImage(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string caption_http(const FrameRecord& frame, const CaptionBackendConfig& cfg) {
  if (!frame.image_ref) throw MissingImage("frame has no image_ref");
  const std::string bytes = read_file_bytes(*frame.image_ref);

  nlohmann::json body;
  if (cfg.model_name.empty()) {
    body["model"] = nullptr;
  } else {
    body["model"] = cfg.model_name;
  }
  body["image_base64"] = base64_encode(bytes);
  body["prompt"] = cfg.prompt;
  const nlohmann::json res = post_json(cfg.endpoint_url, "/caption", body, cfg.timeout_s);
  if (!res.is_object() || !res.contains("caption") || !res.at("caption").is_string()) {
    throw BackendUnavailable(cfg.endpoint_url, "response lacks \"caption\" string");
  }
  return res.at("caption").get<std::string>();
}

}  // namespace detail

/// Captions a frame. Fake mode returns caption_hint verbatim; http mode posts
/// the image bytes to {endpoint_url}/caption. The result is never empty.
inline std::string caption(const FrameRecord& frame, const CaptionBackendConfig& cfg) {
  std::string text;
  if (cfg.mode == BackendMode::Fake) {
    if (!frame.caption_hint) throw MissingCaptionHint();
    text = *frame.caption_hint;
  } else {
    if (cfg.endpoint_url.empty()) {
      throw ConfigError("http caption backend requires an endpoint url");
    }
    text = detail::caption_http(frame, cfg);
  }
  if (text.empty()) throw EmptyCaption();
  return text;
}

/// The WARN record announcing the path-length jump. Format is fixed; tests
/// assert it byte-for-byte.
inline LogRecord deviation_log(const DeviationEvent& event) {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "path length increased from %.3f m to %.3f m; "
                "possible obstacle, distance to the goal increasing",
                event.old_length, event.new_length);
  return {event.t, LogLevel::Warn, std::string(kMonitorNode), buf};
}

/// The INFO record carrying the camera caption.
inline LogRecord caption_log(const DeviationEvent& event, std::string_view caption_text) {
  return {event.t, LogLevel::Info, std::string(kMonitorNode),
          std::string(kCaptionLogPrefix) + std::string(caption_text)};
}

/// The two records injected at event time: the WARN deviation line followed
/// by the INFO caption line. caption_text must be non-empty.
inline std::array<LogRecord, 2> inject_event_logs(const DeviationEvent& event,
                                                  std::string_view caption_text) {
  if (caption_text.empty()) {
    throw Error(ErrorCategory::Input, "inject_event_logs requires non-empty caption text");
  }
  return {deviation_log(event), caption_log(event, caption_text)};
}

}  // namespace xar
