// The vector knowledge base: embedded log records, exact top-k cosine
// retrieval and a versioned JSON persistence format. Search is a linear scan
// over the whole store; corpora here are one session's logs, and exactness is
// what makes the ranking testable against a brute-force oracle.

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "xar/embedder.hpp"
#include "xar/errors.hpp"
#include "xar/session.hpp"

namespace xar {

/// Content-addressed document id: FNV-1a 64 of "{t:.6f}|{node}|{msg}".
/// Replaying a session never double-inserts a record.
inline std::uint64_t document_id(const LogRecord& record) {
  char t_buf[64];
  std::snprintf(t_buf, sizeof(t_buf), "%.6f", record.t);
  std::string key = t_buf;
  key += '|';
  key += record.node;
  key += '|';
  key += record.msg;
  return fnv1a64(key);
}

struct EmbeddedDocument {
  std::uint64_t doc_id = 0;
  LogRecord record;
  Embedding vector;

  bool operator==(const EmbeddedDocument&) const = default;
};

struct ScoredDocument {
  EmbeddedDocument document;
  double similarity = 0.0;
};

class VectorStore {
 public:
  enum class AddResult { Inserted, Duplicate };

  /// First insert fixes the store dimension; later vectors must match it.
  AddResult add(const LogRecord& record, Embedding vector) {
    if (dimension_ == 0) {
      dimension_ = vector.size();
    } else if (vector.size() != dimension_) {
      throw DimensionMismatch(dimension_, vector.size());
    }
    const std::uint64_t id = document_id(record);
    if (ids_.contains(id)) return AddResult::Duplicate;
    ids_.insert(id);
    documents_.push_back({id, record, std::move(vector)});
    return AddResult::Inserted;
  }

  /// The min(k, size) most similar documents, sorted by similarity descending;
  /// exact ties broken by ascending doc_id.
  std::vector<ScoredDocument> top_k(const Embedding& query, std::size_t k) const {
    if (k == 0) throw Error(ErrorCategory::Input, "top_k requires k >= 1");
    if (documents_.empty()) throw EmptyStore();
    if (query.size() != dimension_) throw DimensionMismatch(dimension_, query.size());

    std::vector<std::size_t> order(documents_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> sims(documents_.size());
    for (std::size_t i = 0; i < documents_.size(); ++i) {
      sims[i] = cosine_similarity(documents_[i].vector, query);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (sims[a] != sims[b]) return sims[a] > sims[b];
      return documents_[a].doc_id < documents_[b].doc_id;
    });

    const std::size_t n = std::min(k, documents_.size());
    std::vector<ScoredDocument> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back({documents_[order[i]], sims[order[i]]});
    }
    return out;
  }

  /// Serializes the store as a single versioned JSON document.
  std::string save() const {
    nlohmann::ordered_json root;
    root["version"] = 1;
    root["dimension"] = dimension_;
    nlohmann::ordered_json docs = nlohmann::ordered_json::array();
    for (const EmbeddedDocument& doc : documents_) {
      nlohmann::ordered_json d;
      d["doc_id"] = doc.doc_id;
      nlohmann::ordered_json rec;
      rec["t"] = doc.record.t;
      rec["level"] = to_string(doc.record.level);
      rec["node"] = doc.record.node;
      rec["msg"] = doc.record.msg;
      d["record"] = std::move(rec);
      d["vector"] = doc.vector;
      docs.push_back(std::move(d));
    }
    root["documents"] = std::move(docs);
    return root.dump();
  }

  static VectorStore load(std::string_view bytes) {
    nlohmann::json root;
    try {
      root = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
      throw CorruptStoreFile(e.what());
    }
    if (!root.is_object() || !root.contains("version") ||
        !root.at("version").is_number_integer()) {
      throw CorruptStoreFile("missing integer \"version\"");
    }
    const auto version = root.at("version").get<std::int64_t>();
    if (version != 1) throw VersionMismatch(version);
    if (!root.contains("dimension") || !root.at("dimension").is_number_unsigned()) {
      throw CorruptStoreFile("missing non-negative integer \"dimension\"");
    }
    if (!root.contains("documents") || !root.at("documents").is_array()) {
      throw CorruptStoreFile("missing \"documents\" array");
    }

    VectorStore store;
    store.dimension_ = root.at("dimension").get<std::size_t>();
    for (const nlohmann::json& d : root.at("documents")) {
      if (!d.is_object() || !d.contains("doc_id") || !d.contains("record") ||
          !d.contains("vector")) {
        throw CorruptStoreFile("document lacks doc_id/record/vector");
      }
      if (!d.at("doc_id").is_number_unsigned()) {
        throw CorruptStoreFile("doc_id must be an unsigned integer");
      }
      const nlohmann::json& r = d.at("record");
      if (!r.is_object() || !r.contains("t") || !r.at("t").is_number() ||
          !r.contains("level") || !r.at("level").is_string() ||
          !r.contains("node") || !r.at("node").is_string() ||
          !r.contains("msg") || !r.at("msg").is_string()) {
        throw CorruptStoreFile("record lacks t/level/node/msg");
      }
      EmbeddedDocument doc;
      doc.doc_id = d.at("doc_id").get<std::uint64_t>();
      doc.record.t = r.at("t").get<double>();
      auto level = parse_log_level(r.at("level").get<std::string>());
      if (!level) throw CorruptStoreFile("unknown log level");
      doc.record.level = *level;
      doc.record.node = r.at("node").get<std::string>();
      doc.record.msg = r.at("msg").get<std::string>();
      if (auto reason = invariant_error(doc.record)) throw CorruptStoreFile(*reason);
      if (document_id(doc.record) != doc.doc_id) {
        throw CorruptStoreFile("doc_id does not match record content");
      }
      const nlohmann::json& vec = d.at("vector");
      if (!vec.is_array() || vec.size() != store.dimension_) {
        throw CorruptStoreFile("vector length does not match store dimension");
      }
      doc.vector.reserve(vec.size());
      for (const nlohmann::json& x : vec) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) {
          throw CorruptStoreFile("non-finite vector component");
        }
        doc.vector.push_back(x.get<double>());
      }
      if (store.ids_.contains(doc.doc_id)) throw CorruptStoreFile("duplicate doc_id");
      store.ids_.insert(doc.doc_id);
      store.documents_.push_back(std::move(doc));
    }
    return store;
  }

  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }
  std::size_t dimension() const { return dimension_; }  // 0 until first insert
  const std::vector<EmbeddedDocument>& documents() const { return documents_; }

 private:
  std::size_t dimension_ = 0;
  std::vector<EmbeddedDocument> documents_;
  std::unordered_set<std::uint64_t> ids_;
};

}  // namespace xar
