// Append-only, conversation-scoped memory bank with exact top-k cosine
// retrieval and the clean-before-adversarial write discipline.
#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "memattack/core.hpp"
#include "memattack/embedding.hpp"

namespace memattack {

struct MemoryRecord {
  RecordId id = 0;
  std::string conversation_id;
  std::string text;
  EmbeddingVector embedding;
  Provenance provenance = Provenance::kClean;
  std::optional<AttackKind> attack_kind;
  std::optional<SourceRef> source;
  std::optional<std::string> timestamp_label;

  bool operator==(const MemoryRecord&) const = default;
};

struct ScoredRecord {
  RecordId id = 0;
  double score = 0.0;

  bool operator==(const ScoredRecord&) const = default;
};

/// Ranked by (score desc, id asc); at most k entries, ids distinct.
struct RetrievalResult {
  std::vector<ScoredRecord> ranked;
  std::string query_text;
  std::vector<RecordId> adversarial_ids;  // subset of ranked, in rank order

  std::vector<RecordId> ids() const {
    std::vector<RecordId> out;
    out.reserve(ranked.size());
    for (const auto& r : ranked) out.push_back(r.id);
    return out;
  }

  bool operator==(const RetrievalResult&) const = default;
};

struct AdversarialInput {
  std::string text;
  AttackKind kind = AttackKind::kInstruction;
  SourceRef source = RecordId{0};
};

struct ImperceptibilityCheck {
  bool pass = false;
  double best_clean_similarity = -1.0;
  RecordId best_clean_id = 0;
};

/// Ranking order used by retrieval: higher similarity first, older id on ties.
inline bool ranks_before(const ScoredRecord& a, const ScoredRecord& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

class MemoryStore {
 public:
  /// dim = 0 adopts the dimension of the first record written.
  explicit MemoryStore(std::string conversation_id, std::size_t dim = 0)
      : conversation_id_(std::move(conversation_id)), dim_(dim) {}

  const std::string& conversation_id() const { return conversation_id_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  bool frozen() const { return frozen_; }
  std::span<const MemoryRecord> records() const { return records_; }

  bool has_adversarial() const {
    return std::any_of(records_.begin(), records_.end(),
                       [](const MemoryRecord& r) { return r.provenance == Provenance::kAdversarial; });
  }

  const MemoryRecord& record(RecordId id) const {
    if (id >= records_.size()) throw Error(ErrorCode::kInvalidInput, "no record with id " + std::to_string(id));
    return records_[id];
  }

  void freeze() { frozen_ = true; }

  RecordId write_clean(std::string_view text, std::string_view conversation_id,
                       std::optional<std::string> timestamp_label, const Embedder& embedder) {
    if (frozen_) throw Error(ErrorCode::kStoreFrozen, "store '" + conversation_id_ + "' is frozen");
    if (conversation_id != conversation_id_) {
      throw Error(ErrorCode::kInvalidInput, "record for conversation '" + std::string(conversation_id) +
                                                "' written to store '" + conversation_id_ + "'");
    }
    if (has_adversarial()) {
      throw Error(ErrorCode::kOrderingViolation, "clean write after adversarial injection in '" + conversation_id_ + "'");
    }
    check_text(text);
    MemoryRecord rec;
    rec.conversation_id = conversation_id_;
    rec.text = std::string(text);
    rec.embedding = embedder.embed(text);
    rec.provenance = Provenance::kClean;
    rec.timestamp_label = std::move(timestamp_label);
    return append(std::move(rec));
  }

  /// Appends the whole batch in order or nothing at all.
  std::vector<RecordId> inject_adversarial(std::span<const AdversarialInput> batch, const Embedder& embedder) {
    if (frozen_) throw Error(ErrorCode::kStoreFrozen, "store '" + conversation_id_ + "' is frozen");
    for (const auto& item : batch) {
      check_text(item.text);
      if (const auto* mem = std::get_if<RecordId>(&item.source)) {
        if (*mem >= records_.size()) {
          throw Error(ErrorCode::kUnknownSource, "source memory " + std::to_string(*mem) + " does not exist");
        }
        if (records_[*mem].provenance != Provenance::kClean) {
          throw Error(ErrorCode::kUnknownSource, "source memory " + std::to_string(*mem) + " is not clean");
        }
      }
    }
    std::vector<MemoryRecord> staged;
    staged.reserve(batch.size());
    std::size_t dim = dim_;
    for (const auto& item : batch) {
      MemoryRecord rec;
      rec.conversation_id = conversation_id_;
      rec.text = item.text;
      rec.embedding = embedder.embed(item.text);
      if (dim == 0) dim = rec.embedding.dim();
      if (rec.embedding.dim() != dim) throw Error(ErrorCode::kInvalidInput, "embedding dimension mismatch");
      rec.provenance = Provenance::kAdversarial;
      rec.attack_kind = item.kind;
      rec.source = item.source;
      staged.push_back(std::move(rec));
    }
    std::vector<RecordId> ids;
    ids.reserve(staged.size());
    for (auto& rec : staged) ids.push_back(append(std::move(rec)));
    return ids;
  }

  RetrievalResult retrieve_top_k(std::string_view query_text, std::size_t k, const Embedder& embedder) const {
    if (records_.empty()) throw Error(ErrorCode::kEmptyStore, "store '" + conversation_id_ + "' is empty");
    auto result = retrieve_top_k(embedder.embed(query_text), k);
    result.query_text = std::string(query_text);
    return result;
  }

  /// Exhaustive scan; exact.
  RetrievalResult retrieve_top_k(const EmbeddingVector& query, std::size_t k) const {
    if (k < 1) throw Error(ErrorCode::kInvalidInput, "k must be >= 1");
    if (records_.empty()) throw Error(ErrorCode::kEmptyStore, "store '" + conversation_id_ + "' is empty");
    std::vector<ScoredRecord> scored;
    scored.reserve(records_.size());
    for (const auto& rec : records_) scored.push_back({rec.id, cosine_similarity(query, rec.embedding)});
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), ranks_before);
    scored.resize(n);

    RetrievalResult result;
    result.ranked = std::move(scored);
    for (const auto& r : result.ranked) {
      if (records_[r.id].provenance == Provenance::kAdversarial) result.adversarial_ids.push_back(r.id);
    }
    return result;
  }

  /// Best cosine between an adversarial record and any clean record.
  ImperceptibilityCheck verify_imperceptibility(RecordId adversarial_id, double sigma_s) const {
    const auto& adv = record(adversarial_id);
    if (adv.provenance != Provenance::kAdversarial) {
      throw Error(ErrorCode::kInvalidInput, "record " + std::to_string(adversarial_id) + " is not adversarial");
    }
    ImperceptibilityCheck check;
    for (const auto& rec : records_) {
      if (rec.provenance != Provenance::kClean) continue;
      const double s = cosine_similarity(adv.embedding, rec.embedding);
      if (s > check.best_clean_similarity) {
        check.best_clean_similarity = s;
        check.best_clean_id = rec.id;
      }
    }
    check.pass = check.best_clean_similarity >= sigma_s;
    return check;
  }

  void save(const std::filesystem::path& path) const;
  static MemoryStore load(const std::filesystem::path& path, const EmbedderConfig& embedder_config);

  bool operator==(const MemoryStore&) const = default;

 private:
  static void check_text(std::string_view text) {
    if (trim(text).empty()) throw Error(ErrorCode::kInvalidInput, "memory text is empty");
  }

  RecordId append(MemoryRecord rec) {
    if (dim_ == 0) dim_ = rec.embedding.dim();
    if (rec.embedding.dim() != dim_) {
      throw Error(ErrorCode::kInvalidInput, "embedding dim " + std::to_string(rec.embedding.dim()) +
                                                " != store dim " + std::to_string(dim_));
    }
    rec.id = records_.size();
    records_.push_back(std::move(rec));
    return records_.back().id;
  }

  std::string conversation_id_;
  std::size_t dim_ = 0;
  bool frozen_ = false;
  std::vector<MemoryRecord> records_;
};

// ---- persistence -----------------------------------------------------------

inline constexpr std::string_view kStoreFormat = "memattack-store";
inline constexpr int kStoreFormatVersion = 1;

inline nlohmann::json source_to_json(const SourceRef& source) {
  if (const auto* mem = std::get_if<RecordId>(&source)) return {{"memory", *mem}};
  return {{"question", std::get<QuestionId>(source).value}};
}

inline SourceRef source_from_json(const nlohmann::json& j) {
  if (j.contains("memory")) return j.at("memory").get<RecordId>();
  if (j.contains("question")) return QuestionId{j.at("question").get<std::string>()};
  throw Error(ErrorCode::kPersistenceError, "source must name a memory or a question");
}

inline std::string describe_source(const SourceRef& source) {
  if (const auto* mem = std::get_if<RecordId>(&source)) return "memory:" + std::to_string(*mem);
  return "question:" + std::get<QuestionId>(source).value;
}

inline void MemoryStore::save(const std::filesystem::path& path) const {
  nlohmann::json doc;
  doc["format"] = kStoreFormat;
  doc["version"] = kStoreFormatVersion;
  doc["conversation_id"] = conversation_id_;
  doc["dim"] = dim_;
  doc["frozen"] = frozen_;
  auto& arr = doc["records"] = nlohmann::json::array();
  for (const auto& rec : records_) {
    nlohmann::json j;
    j["id"] = rec.id;
    j["conversation_id"] = rec.conversation_id;
    j["text"] = rec.text;
    j["embedding"] = std::vector<double>(rec.embedding.values().begin(), rec.embedding.values().end());
    j["provenance"] = to_string(rec.provenance);
    j["attack_kind"] = rec.attack_kind ? nlohmann::json(to_string(*rec.attack_kind)) : nlohmann::json();
    j["source"] = rec.source ? source_to_json(*rec.source) : nlohmann::json();
    j["timestamp_label"] = rec.timestamp_label ? nlohmann::json(*rec.timestamp_label) : nlohmann::json();
    arr.push_back(std::move(j));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kPersistenceError, "cannot open '" + path.string() + "' for writing");
  out << doc.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::kPersistenceError, "write to '" + path.string() + "' failed");
}

inline MemoryStore MemoryStore::load(const std::filesystem::path& path, const EmbedderConfig& embedder_config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kPersistenceError, "cannot open '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kPersistenceError, "corrupt store file '" + path.string() + "': " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kStoreFormat) {
      throw Error(ErrorCode::kPersistenceError, "not a store file");
    }
    if (doc.at("version").get<int>() != kStoreFormatVersion) {
      throw Error(ErrorCode::kPersistenceError, "unsupported store version");
    }
    const auto dim = doc.at("dim").get<std::size_t>();
    if (embedder_config.mode == BackendMode::kMock && dim != embedder_config.dim) {
      throw Error(ErrorCode::kPersistenceError, "store dim " + std::to_string(dim) + " does not match embedder dim " +
                                                    std::to_string(embedder_config.dim));
    }
    MemoryStore store(doc.at("conversation_id").get<std::string>(), dim);
    bool seen_adversarial = false;
    for (const auto& j : doc.at("records")) {
      MemoryRecord rec;
      rec.id = j.at("id").get<RecordId>();
      if (rec.id != store.records_.size()) throw Error(ErrorCode::kPersistenceError, "record ids are not 0..n-1 in order");
      rec.conversation_id = j.at("conversation_id").get<std::string>();
      rec.text = j.at("text").get<std::string>();
      auto values = j.at("embedding").get<std::vector<double>>();
      if (values.size() != dim) {
        throw Error(ErrorCode::kPersistenceError, "record " + std::to_string(rec.id) + " has dim " +
                                                      std::to_string(values.size()) + ", store dim is " +
                                                      std::to_string(dim));
      }
      rec.embedding = EmbeddingVector(std::move(values));
      rec.provenance = parse_provenance(j.at("provenance").get<std::string>());
      if (!j.at("attack_kind").is_null()) rec.attack_kind = parse_attack_kind(j.at("attack_kind").get<std::string>());
      if (!j.at("source").is_null()) rec.source = source_from_json(j.at("source"));
      if (!j.at("timestamp_label").is_null()) rec.timestamp_label = j.at("timestamp_label").get<std::string>();

      if ((rec.provenance == Provenance::kAdversarial) != rec.attack_kind.has_value()) {
        throw Error(ErrorCode::kPersistenceError, "record " + std::to_string(rec.id) + " has inconsistent provenance");
      }
      if (rec.provenance == Provenance::kAdversarial) seen_adversarial = true;
      if (rec.provenance == Provenance::kClean && seen_adversarial) {
        throw Error(ErrorCode::kPersistenceError, "clean record " + std::to_string(rec.id) + " follows adversarial ones");
      }
      store.records_.push_back(std::move(rec));
    }
    store.frozen_ = doc.at("frozen").get<bool>();
    return store;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kPersistenceError) throw;
    throw Error(ErrorCode::kPersistenceError, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kPersistenceError, std::string("malformed store file: ") + e.what());
  }
}

}  // namespace memattack
