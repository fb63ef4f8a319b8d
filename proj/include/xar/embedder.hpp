// Text-to-vector embedding with a pluggable backend. The fake backend is a
// deterministic signed feature hash: lowercase, split on non-alphanumeric
// bytes, FNV-1a 64 each token, accumulate ±1 into component (h mod 64) with
// the sign taken from bit 6 of h, then L2-normalize. Identical text always
// yields a bit-identical vector, which is what the retrieval tests rely on.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xar/errors.hpp"
#include "xar/http_backend.hpp"

namespace xar {

using Embedding = std::vector<double>;

inline constexpr std::size_t kFakeEmbeddingDim = 64;
inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = kFnvOffsetBasis;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

namespace detail {

// ASCII-only token alphabet; anything else (including multi-byte UTF-8
// sequences) acts as a separator. Keeps the hash reproducible byte-for-byte
// in any language.
inline bool is_token_byte(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z');
}

inline char fold_byte(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

template <typename Fn>
inline void for_each_token(std::string_view text, Fn&& fn) {
  std::string token;
  for (char raw : text) {
    const char c = fold_byte(raw);
    if (is_token_byte(c)) {
      token += c;
    } else if (!token.empty()) {
      fn(token);
      token.clear();
    }
  }
  if (!token.empty()) fn(token);
}

}  // namespace detail

/// Deterministic 64-dimension bag-of-words embedding. Returns the all-zero
/// vector when the text has no tokens; otherwise the result has unit L2 norm.
inline Embedding fake_embedding(std::string_view text) {
  Embedding v(kFakeEmbeddingDim, 0.0);
  bool any = false;
  detail::for_each_token(text, [&](const std::string& token) {
    const std::uint64_t h = fnv1a64(token);
    const double sign = ((h >> 6) & 1u) ? -1.0 : 1.0;
    v[h % kFakeEmbeddingDim] += sign;
    any = true;
  });
  if (!any) return v;
  double norm_sq = 0.0;
  for (double x : v) norm_sq += x * x;
  const double norm = std::sqrt(norm_sq);
  if (norm == 0.0) return v;  // tokens can cancel pairwise
  for (double& x : v) x /= norm;
  return v;
}

/// dot(a,b) / (|a||b|), clamped to [-1, 1]; 0.0 when either norm is zero.
inline double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double sim = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::min(1.0, std::max(-1.0, sim));
}

struct EmbedBackendConfig {
  BackendMode mode = BackendMode::Fake;
  std::string endpoint_url;  // required for http mode
  double timeout_s = 30.0;
};

/// Backend-dispatching embedder. The http backend posts {"input": text} to
/// {endpoint_url}/embed and expects {"embedding": [..]}; the served dimension
/// is free but must stay constant across calls. Vectors are normalized on
/// receipt so every stored embedding is unit length or all-zero.
class Embedder {
 public:
  Embedder() = default;
  explicit Embedder(EmbedBackendConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.mode == BackendMode::Http && cfg_.endpoint_url.empty()) {
      throw ConfigError("http embed backend requires an endpoint url");
    }
  }

  Embedding embed(const std::string& text) {
    if (cfg_.mode == BackendMode::Fake) return fake_embedding(text);
    return embed_http(text);
  }

  const EmbedBackendConfig& config() const { return cfg_; }

 private:
  Embedding embed_http(const std::string& text) {
    nlohmann::json body;
    body["input"] = text;
    const nlohmann::json res = post_json(cfg_.endpoint_url, "/embed", body, cfg_.timeout_s);
    if (!res.is_object() || !res.contains("embedding") || !res.at("embedding").is_array()) {
      throw BackendUnavailable(cfg_.endpoint_url, "response lacks \"embedding\" array");
    }
    Embedding v;
    v.reserve(res.at("embedding").size());
    for (const nlohmann::json& x : res.at("embedding")) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) {
        throw BackendUnavailable(cfg_.endpoint_url, "non-finite embedding component");
      }
      v.push_back(x.get<double>());
    }
    if (dimension_ && v.size() != *dimension_) throw DimensionMismatch(*dimension_, v.size());
    dimension_ = v.size();
    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    const double norm = std::sqrt(norm_sq);
    if (norm > 0.0) {
      for (double& x : v) x /= norm;
    }
    return v;
  }

  EmbedBackendConfig cfg_;
  std::optional<std::size_t> dimension_;
};

}  // namespace xar
