// Retrieval-augmented answering: embed the question, pull the top-k most
// similar log records, render them into the prompt template and call the
// configured LLM backend. The fake LLM echoes the context block, which lets
// end-to-end tests assert that retrieved content reaches the answer.

#pragma once

#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xar/embedder.hpp"
#include "xar/errors.hpp"
#include "xar/http_backend.hpp"
#include "xar/session.hpp"
#include "xar/vector_store.hpp"

namespace xar {

inline constexpr std::string_view kDefaultPromptTemplate =
    "You are an explainability assistant for an autonomous robot.\n"
    "Use ONLY the context below, which contains the robot's most relevant logs.\n"
    "\n"
    "Context:\n"
    "{context}\n"
    "\n"
    "Question: {question}\n"
    "\n"
    "Answer:";

struct LlmBackendConfig {
  BackendMode mode = BackendMode::Fake;
  std::string endpoint_url;  // required for http mode
  double timeout_s = 60.0;
  std::string model_name;
};

struct RagConfig {
  std::size_t k = 5;
  std::string template_text = std::string(kDefaultPromptTemplate);
  LogLevel min_level = LogLevel::Debug;  // ingestion cutoff; Debug keeps all
  LlmBackendConfig llm;
};

struct ScoredRecord {
  LogRecord record;
  double similarity = 0.0;
};

struct ExplanationResult {
  std::string answer;
  std::vector<ScoredRecord> context;
  std::string prompt;
};

namespace detail {

inline std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

inline void check_template(std::string_view template_text) {
  for (const char* placeholder : {"{context}", "{question}"}) {
    const std::size_t n = count_occurrences(template_text, placeholder);
    if (n == 0) throw BadTemplate(std::string(placeholder) + " placeholder missing");
    if (n > 1) throw BadTemplate(std::string(placeholder) + " placeholder repeated");
  }
}

inline std::string replace_once(std::string text, std::string_view placeholder,
                                std::string_view value) {
  const std::size_t pos = text.find(placeholder);
  text.replace(pos, placeholder.size(), value);
  return text;
}

inline std::string render_with_block(std::string_view template_text,
                                     std::string_view context_block,
                                     std::string_view question) {
  check_template(template_text);
  std::string out = replace_once(std::string(template_text), "{context}", context_block);
  return replace_once(std::move(out), "{question}", question);
}

}  // namespace detail

/// One context line per record: "[{t:.3f}] [{node}] {msg}".
inline std::string format_context_line(const LogRecord& record) {
  char t_buf[48];
  std::snprintf(t_buf, sizeof(t_buf), "%.3f", record.t);
  std::string line = "[";
  line += t_buf;
  line += "] [";
  line += record.node;
  line += "] ";
  line += record.msg;
  return line;
}

inline std::string format_context_block(std::span<const ScoredRecord> context) {
  std::string block;
  for (std::size_t i = 0; i < context.size(); ++i) {
    if (i > 0) block += '\n';
    block += format_context_line(context[i].record);
  }
  return block;
}

/// The k records most similar to the question, in retrieval order.
inline std::vector<ScoredRecord> build_context(const VectorStore& store,
                                               const std::string& question, std::size_t k,
                                               Embedder& embedder) {
  std::vector<ScoredRecord> context;
  for (const ScoredDocument& scored : store.top_k(embedder.embed(question), k)) {
    context.push_back({scored.document.record, scored.similarity});
  }
  return context;
}

/// Substitutes {context} and {question}; everything else passes through
/// untouched. The template must contain each placeholder exactly once.
inline std::string render_prompt(std::string_view template_text,
                                 std::span<const ScoredRecord> context,
                                 std::string_view question) {
  return detail::render_with_block(template_text, format_context_block(context), question);
}

namespace detail {

inline std::string call_llm(const LlmBackendConfig& cfg, const std::string& prompt,
                            const std::string& context_block) {
  if (cfg.mode == BackendMode::Fake) {
    return "ECHO:\n" + context_block;
  }
  if (cfg.endpoint_url.empty()) {
    throw ConfigError("http LLM backend requires an endpoint url");
  }
  nlohmann::json body;
  if (cfg.model_name.empty()) {
    body["model"] = nullptr;
  } else {
    body["model"] = cfg.model_name;
  }
  body["messages"] = nlohmann::json::array({
      nlohmann::json{{"role", "user"}, {"content", prompt}},
  });
  const nlohmann::json res =
      post_json(cfg.endpoint_url, "/v1/chat/completions", body, cfg.timeout_s);
  // OpenAI-compatible wire shape: choices[0].message.content
  if (!res.is_object() || !res.contains("choices") || !res.at("choices").is_array() ||
      res.at("choices").empty()) {
    throw BackendUnavailable(cfg.endpoint_url, "response lacks \"choices\"");
  }
  const nlohmann::json& first = res.at("choices").at(0);
  if (!first.is_object() || !first.contains("message") ||
      !first.at("message").is_object() || !first.at("message").contains("content") ||
      !first.at("message").at("content").is_string()) {
    throw BackendUnavailable(cfg.endpoint_url, "response lacks choices[0].message.content");
  }
  return first.at("message").at("content").get<std::string>();
}

}  // namespace detail

/// Full question-to-explanation path: retrieve, render, generate.
inline ExplanationResult answer(const std::string& question, const VectorStore& store,
                                const RagConfig& cfg, Embedder& embedder) {
  if (store.empty()) throw EmptyStore();
  detail::check_template(cfg.template_text);

  ExplanationResult result;
  result.context = build_context(store, question, cfg.k, embedder);
  const std::string context_block =
      format_context_block(std::span<const ScoredRecord>(result.context));
  result.prompt = detail::render_with_block(cfg.template_text, context_block, question);
  result.answer = detail::call_llm(cfg.llm, result.prompt, context_block);
  if (result.answer.empty()) throw EmptyAnswer();
  return result;
}

}  // namespace xar
