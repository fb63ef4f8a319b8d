// Shared plumbing for the pluggable HTTP backends (embedding, caption, LLM).
// Endpoint URLs are scheme://host:port; each backend appends its own path.

#pragma once

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "xar/errors.hpp"

namespace xar {

enum class BackendMode { Fake, Http };

inline std::optional<BackendMode> parse_backend_mode(std::string_view s) {
  if (s == "fake") return BackendMode::Fake;
  if (s == "http") return BackendMode::Http;
  return std::nullopt;
}

inline const char* to_string(BackendMode mode) {
  return mode == BackendMode::Fake ? "fake" : "http";
}

namespace detail {

inline std::string base64_encode(std::string_view bytes) {
  static constexpr char alphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= bytes.size()) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
    out += alphabet[(v >> 18) & 0x3f];
    out += alphabet[(v >> 12) & 0x3f];
    out += alphabet[(v >> 6) & 0x3f];
    out += alphabet[v & 0x3f];
    i += 3;
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
    out += alphabet[(v >> 18) & 0x3f];
    out += alphabet[(v >> 12) & 0x3f];
    out += "==";
  } else if (rest == 2) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8);
    out += alphabet[(v >> 18) & 0x3f];
    out += alphabet[(v >> 12) & 0x3f];
    out += alphabet[(v >> 6) & 0x3f];
    out += '=';
  }
  return out;
}

inline void set_timeouts(httplib::Client& client, double timeout_s) {
  const auto sec = static_cast<time_t>(timeout_s);
  const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
}

}  // namespace detail

/// POSTs a JSON body and returns the parsed JSON response. Throws
/// BackendTimeout when the deadline elapsed, BackendUnavailable on
/// connection failures, non-2xx statuses and unparseable responses.
inline nlohmann::json post_json(const std::string& base_url, const std::string& path,
                                const nlohmann::json& body, double timeout_s) {
  httplib::Client client(base_url);
  detail::set_timeouts(client, timeout_s);

  const auto started = std::chrono::steady_clock::now();
  httplib::Result res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const httplib::Error err = res.error();
    const bool deadline_hit = err == httplib::Error::ConnectionTimeout ||
                              ((err == httplib::Error::Read || err == httplib::Error::Write) &&
                               elapsed >= timeout_s * 0.9);
    if (deadline_hit) throw BackendTimeout(base_url + path);
    throw BackendUnavailable(base_url + path, httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendUnavailable(base_url + path, "HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error&) {
    throw BackendUnavailable(base_url + path, "response is not valid JSON");
  }
}

}  // namespace xar
