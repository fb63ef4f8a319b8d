// Application wiring: configuration with CLI > env > file > default
// precedence, the ingest and ask pipelines shared by the CLI and the
// ask-service, and the HTTP service itself.

#pragma once

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include "xar/embedder.hpp"
#include "xar/errors.hpp"
#include "xar/path_monitor.hpp"
#include "xar/perception.hpp"
#include "xar/rag.hpp"
#include "xar/session.hpp"
#include "xar/vector_store.hpp"

namespace xar {

struct AppConfig {
  std::string store_path = "xar_store.json";
  EmbedBackendConfig embed;
  CaptionBackendConfig caption;
  MonitorConfig monitor;
  RagConfig rag;
  int port = 8080;
};

// ---- file / env loading -----------------------------------------------------

namespace detail {

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCategory::Io, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCategory::Io, "cannot write " + path);
}

inline BackendMode mode_from_string(const std::string& s, const std::string& where) {
  auto mode = parse_backend_mode(s);
  if (!mode) throw ConfigError(where + " must be \"fake\" or \"http\", got \"" + s + "\"");
  return *mode;
}

inline void reject_unknown_keys(const nlohmann::json& obj, const std::string& where,
                                std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    if (std::find_if(known.begin(), known.end(),
                     [&key](const char* k) { return key == k; }) == known.end()) {
      throw ConfigError(where + ": unknown key \"" + key + "\"");
    }
  }
}

template <typename T>
inline void take(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace detail

/// Merges a JSON config file into cfg. Unknown keys are rejected.
inline void apply_config_file(AppConfig& cfg, const std::string& path) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(detail::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(path + ": config must be a JSON object");
  detail::reject_unknown_keys(root, path,
                              {"store_path", "backend", "embed", "caption", "llm",
                               "monitor", "rag", "port"});
  try {
    detail::take(root, "store_path", cfg.store_path);
    if (root.contains("backend")) {
      const BackendMode mode =
          detail::mode_from_string(root.at("backend").get<std::string>(), "backend");
      cfg.embed.mode = mode;
      cfg.caption.mode = mode;
      cfg.rag.llm.mode = mode;
    }
    if (root.contains("embed")) {
      const nlohmann::json& e = root.at("embed");
      detail::reject_unknown_keys(e, "embed", {"mode", "url", "timeout_s"});
      if (e.contains("mode")) {
        cfg.embed.mode = detail::mode_from_string(e.at("mode").get<std::string>(), "embed.mode");
      }
      detail::take(e, "url", cfg.embed.endpoint_url);
      detail::take(e, "timeout_s", cfg.embed.timeout_s);
    }
    if (root.contains("caption")) {
      const nlohmann::json& c = root.at("caption");
      detail::reject_unknown_keys(c, "caption", {"mode", "url", "timeout_s", "model", "prompt"});
      if (c.contains("mode")) {
        cfg.caption.mode =
            detail::mode_from_string(c.at("mode").get<std::string>(), "caption.mode");
      }
      detail::take(c, "url", cfg.caption.endpoint_url);
      detail::take(c, "timeout_s", cfg.caption.timeout_s);
      detail::take(c, "model", cfg.caption.model_name);
      detail::take(c, "prompt", cfg.caption.prompt);
    }
    if (root.contains("llm")) {
      const nlohmann::json& l = root.at("llm");
      detail::reject_unknown_keys(l, "llm", {"mode", "url", "timeout_s", "model"});
      if (l.contains("mode")) {
        cfg.rag.llm.mode = detail::mode_from_string(l.at("mode").get<std::string>(), "llm.mode");
      }
      detail::take(l, "url", cfg.rag.llm.endpoint_url);
      detail::take(l, "timeout_s", cfg.rag.llm.timeout_s);
      detail::take(l, "model", cfg.rag.llm.model_name);
    }
    if (root.contains("monitor")) {
      const nlohmann::json& m = root.at("monitor");
      detail::reject_unknown_keys(m, "monitor",
                                  {"ratio_threshold", "min_abs_increase", "sync_tolerance"});
      detail::take(m, "ratio_threshold", cfg.monitor.ratio_threshold);
      detail::take(m, "min_abs_increase", cfg.monitor.min_abs_increase);
      detail::take(m, "sync_tolerance", cfg.monitor.sync_tolerance);
    }
    if (root.contains("rag")) {
      const nlohmann::json& r = root.at("rag");
      detail::reject_unknown_keys(r, "rag", {"k", "template", "min_level"});
      detail::take(r, "k", cfg.rag.k);
      detail::take(r, "template", cfg.rag.template_text);
      if (r.contains("min_level")) {
        const std::string level = r.at("min_level").get<std::string>();
        auto parsed = parse_log_level(level);
        if (!parsed) throw ConfigError("rag.min_level: unknown level \"" + level + "\"");
        cfg.rag.min_level = *parsed;
      }
    }
    detail::take(root, "port", cfg.port);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Applies the XAR_* environment variables on top of cfg.
inline void apply_env(AppConfig& cfg) {
  if (const char* v = std::getenv("XAR_STORE_PATH")) cfg.store_path = v;
  if (const char* v = std::getenv("XAR_BACKEND")) {
    const BackendMode mode = detail::mode_from_string(v, "XAR_BACKEND");
    cfg.embed.mode = mode;
    cfg.caption.mode = mode;
    cfg.rag.llm.mode = mode;
  }
  if (const char* v = std::getenv("XAR_EMBED_URL")) cfg.embed.endpoint_url = v;
  if (const char* v = std::getenv("XAR_VLM_URL")) cfg.caption.endpoint_url = v;
  if (const char* v = std::getenv("XAR_LLM_URL")) cfg.rag.llm.endpoint_url = v;
  if (const char* v = std::getenv("XAR_PORT")) {
    try {
      cfg.port = std::stoi(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string("XAR_PORT: not an integer: \"") + v + "\"");
    }
  }
}

/// File + env layers; CLI flag overrides are applied by the caller afterwards.
inline AppConfig load_app_config(const std::optional<std::string>& config_path) {
  AppConfig cfg;
  if (config_path) apply_config_file(cfg, *config_path);
  apply_env(cfg);
  return cfg;
}

inline void validate_app_config(const AppConfig& cfg) {
  if (cfg.store_path.empty()) throw ConfigError("store_path must be non-empty");
  if (auto reason = invariant_error(cfg.monitor)) throw ConfigError(*reason);
  if (cfg.rag.k == 0) throw ConfigError("rag.k must be >= 1");
  detail::check_template(cfg.rag.template_text);
  if (cfg.port < 1 || cfg.port > 65535) throw ConfigError("port must be in 1..65535");
  if (cfg.embed.mode == BackendMode::Http && cfg.embed.endpoint_url.empty()) {
    throw ConfigError("http embed backend requires a url (XAR_EMBED_URL)");
  }
  if (cfg.caption.mode == BackendMode::Http && cfg.caption.endpoint_url.empty()) {
    throw ConfigError("http caption backend requires a url (XAR_VLM_URL)");
  }
  if (cfg.rag.llm.mode == BackendMode::Http && cfg.rag.llm.endpoint_url.empty()) {
    throw ConfigError("http LLM backend requires a url (XAR_LLM_URL)");
  }
}

// ---- ingest -----------------------------------------------------------------

struct IngestSummary {
  std::uint64_t records_ingested = 0;
  std::uint64_t deviations_detected = 0;
  std::uint64_t captions_injected = 0;
  std::uint64_t duplicates_skipped = 0;
};

inline nlohmann::ordered_json to_json(const IngestSummary& summary) {
  nlohmann::ordered_json j;
  j["records_ingested"] = summary.records_ingested;
  j["deviations_detected"] = summary.deviations_detected;
  j["captions_injected"] = summary.captions_injected;
  j["duplicates_skipped"] = summary.duplicates_skipped;
  return j;
}

inline VectorStore load_store_if_present(const std::string& path) {
  if (!std::filesystem::exists(path)) return VectorStore{};
  return VectorStore::load(detail::read_text_file(path));
}

/// Streams a session through the monitor, injects deviation + caption logs at
/// event time, embeds every log record at or above the configured level and
/// persists the updated store.
inline IngestSummary run_ingest(const std::string& session_path, const AppConfig& cfg) {
  validate_app_config(cfg);
  const std::vector<SessionEvent> events = parse_session(detail::read_text_file(session_path));

  PathMonitor monitor(cfg.monitor);
  std::vector<FrameRecord> frames;
  std::vector<LogRecord> logs;
  IngestSummary summary;

  for (const SessionEvent& event : events) {
    if (const auto* rec = std::get_if<LogRecord>(&event)) {
      logs.push_back(*rec);
    } else if (const auto* frame = std::get_if<FrameRecord>(&event)) {
      frames.push_back(*frame);
    } else {
      const auto& plan = std::get<PlanSnapshot>(event);
      if (auto deviation = monitor.observe_plan(plan, frames)) {
        ++summary.deviations_detected;
        logs.push_back(deviation_log(*deviation));
        // No synchronized frame means no caption; the deviation itself is
        // still logged.
        if (deviation->frame) {
          logs.push_back(caption_log(*deviation, caption(*deviation->frame, cfg.caption)));
          ++summary.captions_injected;
        }
      }
    }
  }

  VectorStore store = load_store_if_present(cfg.store_path);
  Embedder embedder(cfg.embed);
  for (const LogRecord& record : logs) {
    if (record.level < cfg.rag.min_level) continue;
    if (store.add(record, embedder.embed(record.msg)) == VectorStore::AddResult::Inserted) {
      ++summary.records_ingested;
    } else {
      ++summary.duplicates_skipped;
    }
  }
  detail::write_text_file(cfg.store_path, store.save());
  return summary;
}

// ---- ask --------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const ExplanationResult& result) {
  nlohmann::ordered_json j;
  j["answer"] = result.answer;
  nlohmann::ordered_json context = nlohmann::ordered_json::array();
  for (const ScoredRecord& scored : result.context) {
    nlohmann::ordered_json c;
    c["t"] = scored.record.t;
    c["level"] = to_string(scored.record.level);
    c["node"] = scored.record.node;
    c["msg"] = scored.record.msg;
    c["similarity"] = scored.similarity;
    context.push_back(std::move(c));
  }
  j["context"] = std::move(context);
  j["prompt"] = result.prompt;
  return j;
}

/// Loads the store and answers one question. A missing or empty knowledge
/// base is an input error ("knowledge base is empty").
inline ExplanationResult run_ask(const std::string& question, const AppConfig& cfg) {
  validate_app_config(cfg);
  if (!std::filesystem::exists(cfg.store_path)) throw EmptyStore();
  const VectorStore store = VectorStore::load(detail::read_text_file(cfg.store_path));
  if (store.empty()) throw EmptyStore();
  Embedder embedder(cfg.embed);
  return answer(question, store, cfg.rag, embedder);
}

// ---- ask-service ------------------------------------------------------------

/// HTTP surrogate for the explanation service: POST /ask answers questions
/// against the store loaded at startup, GET /health reports liveness.
/// Requests run concurrently against the read-locked store.
class AskService {
 public:
  explicit AskService(AppConfig cfg) : cfg_(std::move(cfg)) {
    validate_app_config(cfg_);
    store_ = load_store_if_present(cfg_.store_path);

    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(nlohmann::json{{"status", "ok"}}.dump(), "application/json");
    });

    server_.Post("/ask", [this](const httplib::Request& req, httplib::Response& res) {
      handle_ask(req, res);
    });
  }

  /// Blocks until stop(); false on bind failure.
  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  void stop() { server_.stop(); }

  httplib::Server& server() { return server_; }
  const VectorStore& store() const { return store_; }

 private:
  static void fail(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", message}}.dump(), "application/json");
  }

  void handle_ask(const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error&) {
      fail(res, 400, "request body is not valid JSON");
      return;
    }
    if (!body.is_object() || !body.contains("question") || !body.at("question").is_string() ||
        body.at("question").get<std::string>().empty()) {
      fail(res, 400, "body must be an object with a non-empty \"question\" string");
      return;
    }
    std::size_t k = cfg_.rag.k;
    if (body.contains("k")) {
      if (!body.at("k").is_number_unsigned() || body.at("k").get<std::uint64_t>() == 0) {
        fail(res, 400, "\"k\" must be a positive integer");
        return;
      }
      k = body.at("k").get<std::size_t>();
    }
    for (auto it = body.begin(); it != body.end(); ++it) {
      if (it.key() != "question" && it.key() != "k") {
        fail(res, 400, "unknown key \"" + it.key() + "\"");
        return;
      }
    }

    try {
      std::shared_lock lock(mutex_);
      if (store_.empty()) {
        fail(res, 409, "knowledge base is empty");
        return;
      }
      RagConfig rag = cfg_.rag;
      rag.k = k;
      Embedder embedder(cfg_.embed);
      const ExplanationResult result =
          answer(body.at("question").get<std::string>(), store_, rag, embedder);
      res.set_content(to_json(result).dump(), "application/json");
    } catch (const Error& e) {
      if (e.category() == ErrorCategory::Backend) {
        fail(res, 502, e.what());
      } else {
        fail(res, 500, e.what());
      }
    } catch (const std::exception& e) {
      fail(res, 500, e.what());
    }
  }

  AppConfig cfg_;
  VectorStore store_;
  std::shared_mutex mutex_;
  httplib::Server server_;
};

}  // namespace xar
