// Embedding backends (offline signed-hash mock, remote HTTP) and cosine
// similarity.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "memattack/core.hpp"
#include "memattack/http_backend.hpp"
#include "memattack/rng.hpp"

namespace memattack {

/// Fixed-dimension real vector with cached L2 norm. All components finite.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw Error(ErrorCode::kInvalidInput, "embedding must have dim >= 1");
    double sq = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw Error(ErrorCode::kInvalidInput, "embedding component " + std::to_string(i) + " is not finite");
      }
      sq += values_[i] * values_[i];
    }
    norm_ = std::sqrt(sq);
  }

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double norm() const { return norm_; }

  bool operator==(const EmbeddingVector& other) const { return values_ == other.values_; }

 private:
  std::vector<double> values_;
  double norm_ = 0.0;
};

inline double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  const auto av = a.values();
  const auto bv = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  return s;
}

/// dot(a,b) / (|a| |b|), clamped to [-1, 1]. Exactly symmetric.
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kInvalidInput,
                "dimension mismatch " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  if (a.norm() == 0.0 || b.norm() == 0.0) throw Error(ErrorCode::kDegenerateVector, "zero-norm operand");
  const double s = dot(a, b) / (a.norm() * b.norm());
  return std::clamp(s, -1.0, 1.0);
}

enum class BackendMode { kMock, kHttp };

inline std::string_view to_string(BackendMode m) { return m == BackendMode::kMock ? "mock" : "http"; }

inline BackendMode parse_backend_mode(std::string_view name) {
  if (name == "mock") return BackendMode::kMock;
  if (name == "http") return BackendMode::kHttp;
  throw Error(ErrorCode::kConfigError, "unknown backend mode '" + std::string(name) + "'");
}

struct EmbedderConfig {
  BackendMode mode = BackendMode::kMock;
  std::size_t dim = 256;
  std::string model_name = "nomic-embed-text";
  std::string base_url = "http://localhost:11434";
  std::uint64_t hash_seed = 0;
  double timeout_seconds = 30.0;
  int retries = 0;

  bool operator==(const EmbedderConfig&) const = default;

  void validate() const {
    if (mode == BackendMode::kMock && dim < 8) throw Error(ErrorCode::kConfigError, "mock embedder needs dim >= 8");
    if (mode == BackendMode::kHttp && trim(base_url).empty()) {
      throw Error(ErrorCode::kConfigError, "http embedder needs a base_url");
    }
    if (timeout_seconds <= 0.0) throw Error(ErrorCode::kConfigError, "timeout must be positive");
    if (retries < 0) throw Error(ErrorCode::kConfigError, "retries must be >= 0");
  }
};

/// Lowercased runs of alphanumeric bytes. Bytes >= 0x80 count as word
/// characters so UTF-8 words stay whole.
inline std::vector<std::string> embedding_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

/// Signed feature hashing over the token multiset, L2-normalized. Word order
/// never matters, so any permutation of the tokens embeds identically.
inline EmbeddingVector mock_embed(std::string_view text, std::size_t dim, std::uint64_t hash_seed) {
  if (trim(text).empty()) throw Error(ErrorCode::kInvalidInput, "cannot embed empty text");
  std::vector<double> raw(dim, 0.0);
  for (const auto& token : embedding_tokens(text)) {
    const std::uint64_t h = splitmix64(fnv1a64(token) ^ splitmix64(hash_seed));
    const std::size_t index = static_cast<std::size_t>((h & 0xffffffffULL) % dim);
    const double sign = (h >> 63) ? -1.0 : 1.0;
    raw[index] += sign;
  }
  double sq = 0.0;
  for (double v : raw) sq += v * v;
  if (sq == 0.0) {
    throw Error(ErrorCode::kDegenerateVector, "text has no tokens or its token hashes cancel: '" + std::string(text) + "'");
  }
  const double norm = std::sqrt(sq);
  for (double& v : raw) v /= norm;
  return EmbeddingVector(std::move(raw));
}

/// Produces embeddings for one experiment. Thread-safe; keeps a per-run cache
/// keyed by exact text.
class Embedder {
 public:
  explicit Embedder(EmbedderConfig config) : config_(std::move(config)) {
    config_.validate();
    if (config_.mode == BackendMode::kHttp) {
      client_ = std::make_shared<LlmServerClient>(config_.base_url, config_.timeout_seconds, config_.retries);
    }
  }

  const EmbedderConfig& config() const { return config_; }

  /// Dimension for mock mode; 0 for http mode (known only after a call).
  std::size_t declared_dim() const { return config_.mode == BackendMode::kMock ? config_.dim : 0; }

  EmbeddingVector embed(std::string_view text) const {
    if (trim(text).empty()) throw Error(ErrorCode::kInvalidInput, "cannot embed empty text");
    if (config_.mode == BackendMode::kMock) return mock_embed(text, config_.dim, config_.hash_seed);

    const std::string key(text);
    {
      std::lock_guard lock(cache_->mutex);
      if (auto it = cache_->entries.find(key); it != cache_->entries.end()) return it->second;
    }
    EmbeddingVector v(client_->embeddings(config_.model_name, key));
    std::lock_guard lock(cache_->mutex);
    cache_->entries.emplace(key, v);
    return v;
  }

 private:
  struct Cache {
    std::mutex mutex;
    std::unordered_map<std::string, EmbeddingVector> entries;
  };

  EmbedderConfig config_;
  std::shared_ptr<LlmServerClient> client_;
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

inline EmbeddingVector embed(std::string_view text, const EmbedderConfig& config) {
  return Embedder(config).embed(text);
}

}  // namespace memattack
