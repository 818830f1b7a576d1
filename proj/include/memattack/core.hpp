// Shared domain types for the memory-injection red-teaming harness.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace memattack {

enum class ErrorCode {
  kInvalidInput,
  kDegenerateVector,
  kBackendError,
  kStoreFrozen,
  kOrderingViolation,
  kUnknownSource,
  kEmptyStore,
  kPersistenceError,
  kTooShort,
  kDegenerateInput,
  kCalibrationFailed,
  kMalformedGeneration,
  kImperceptibilityViolation,
  kDivisionByZeroBaseline,
  kDatasetError,
  kReportError,
  kConfigError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kDegenerateVector: return "DegenerateVector";
    case ErrorCode::kBackendError: return "BackendError";
    case ErrorCode::kStoreFrozen: return "StoreFrozen";
    case ErrorCode::kOrderingViolation: return "OrderingViolation";
    case ErrorCode::kUnknownSource: return "UnknownSource";
    case ErrorCode::kEmptyStore: return "EmptyStore";
    case ErrorCode::kPersistenceError: return "PersistenceError";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kCalibrationFailed: return "CalibrationFailed";
    case ErrorCode::kMalformedGeneration: return "MalformedGeneration";
    case ErrorCode::kImperceptibilityViolation: return "ImperceptibilityViolation";
    case ErrorCode::kDivisionByZeroBaseline: return "DivisionByZeroBaseline";
    case ErrorCode::kDatasetError: return "DatasetError";
    case ErrorCode::kReportError: return "ReportError";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries an ErrorCode so callers can
/// branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

using RecordId = std::uint64_t;

/// Identifier of a QA item, kept distinct from free-form strings.
struct QuestionId {
  std::string value;
  bool operator==(const QuestionId&) const = default;
};

/// An adversarial record points back either at the clean memory it perturbs
/// or at the question it targets.
using SourceRef = std::variant<RecordId, QuestionId>;

enum class Provenance { kClean, kAdversarial };

enum class AttackKind {
  kInstruction,
  kGeneralNegation,
  kHarshInstruction,
  kIgnore,
  kContradiction,
  kNegation,
  kEmbeddingCloseNoise,
  kLexicalShuffling,
  kQuestionTargeted,
};

inline constexpr AttackKind kAllAttackKinds[] = {
    AttackKind::kInstruction,         AttackKind::kGeneralNegation, AttackKind::kHarshInstruction,
    AttackKind::kIgnore,              AttackKind::kContradiction,   AttackKind::kNegation,
    AttackKind::kEmbeddingCloseNoise, AttackKind::kLexicalShuffling, AttackKind::kQuestionTargeted,
};

inline std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kInstruction: return "instruction";
    case AttackKind::kGeneralNegation: return "general_negation";
    case AttackKind::kHarshInstruction: return "harsh_instruction";
    case AttackKind::kIgnore: return "ignore";
    case AttackKind::kContradiction: return "contradiction";
    case AttackKind::kNegation: return "negation";
    case AttackKind::kEmbeddingCloseNoise: return "embedding_close_noise";
    case AttackKind::kLexicalShuffling: return "lexical_shuffling";
    case AttackKind::kQuestionTargeted: return "question_targeted";
  }
  return "unknown";
}

inline AttackKind parse_attack_kind(std::string_view name) {
  for (AttackKind kind : kAllAttackKinds) {
    if (to_string(kind) == name) return kind;
  }
  if (name == "lexical_shuffle") return AttackKind::kLexicalShuffling;
  throw Error(ErrorCode::kInvalidInput, "unknown attack kind '" + std::string(name) + "'");
}

/// The six kinds produced from a prompt template (or its offline fallback).
inline bool is_prompted(AttackKind kind) {
  switch (kind) {
    case AttackKind::kInstruction:
    case AttackKind::kGeneralNegation:
    case AttackKind::kHarshInstruction:
    case AttackKind::kIgnore:
    case AttackKind::kContradiction:
    case AttackKind::kNegation:
      return true;
    default:
      return false;
  }
}

inline bool is_programmatic(AttackKind kind) {
  return kind == AttackKind::kEmbeddingCloseNoise || kind == AttackKind::kLexicalShuffling;
}

inline std::string_view to_string(Provenance p) {
  return p == Provenance::kClean ? "clean" : "adversarial";
}

inline Provenance parse_provenance(std::string_view name) {
  if (name == "clean") return Provenance::kClean;
  if (name == "adversarial") return Provenance::kAdversarial;
  throw Error(ErrorCode::kInvalidInput, "unknown provenance '" + std::string(name) + "'");
}

enum class Category { kSingleHop, kMultiHop, kTemporal, kOpenDomain };

inline constexpr Category kAllCategories[] = {Category::kMultiHop, Category::kSingleHop,
                                              Category::kTemporal, Category::kOpenDomain};

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::kSingleHop: return "single_hop";
    case Category::kMultiHop: return "multi_hop";
    case Category::kTemporal: return "temporal";
    case Category::kOpenDomain: return "open_domain";
  }
  return "unknown";
}

inline Category parse_category(std::string_view name) {
  for (Category c : kAllCategories) {
    if (to_string(c) == name) return c;
  }
  throw Error(ErrorCode::kInvalidInput, "unknown category '" + std::string(name) + "'");
}

struct QAItem {
  std::string question;
  std::string gold_answer;
  Category category = Category::kSingleHop;
  std::string conversation_id;
  std::string qid;

  bool operator==(const QAItem&) const = default;
};

enum class Scenario { kContentBased, kQuestionTargeted };

inline std::string_view to_string(Scenario s) {
  return s == Scenario::kContentBased ? "content_based" : "question_targeted";
}

inline Scenario parse_scenario(std::string_view name) {
  if (name == "content_based") return Scenario::kContentBased;
  if (name == "question_targeted") return Scenario::kQuestionTargeted;
  throw Error(ErrorCode::kInvalidInput, "unknown scenario '" + std::string(name) + "'");
}

struct NoiseWindow {
  double lo = 0.80;
  double hi = 0.95;

  bool contains(double s) const { return s >= lo && s <= hi; }
  bool operator==(const NoiseWindow&) const = default;
};

struct AttackPlan {
  Scenario scenario = Scenario::kContentBased;
  std::vector<AttackKind> kinds;
  std::size_t per_target_count = 1;
  double sigma_s = 0.6;
  NoiseWindow noise_window;
  std::size_t budget = 500;
  std::uint64_t seed = 0;

  bool operator==(const AttackPlan&) const = default;

  void validate() const {
    if (kinds.empty()) throw Error(ErrorCode::kConfigError, "attack plan needs at least one kind");
    if (scenario == Scenario::kQuestionTargeted &&
        !(kinds.size() == 1 && kinds.front() == AttackKind::kQuestionTargeted)) {
      throw Error(ErrorCode::kConfigError, "question_targeted scenario admits only the question_targeted kind");
    }
    if (scenario == Scenario::kContentBased) {
      for (std::size_t i = 0; i < kinds.size(); ++i) {
        if (kinds[i] == AttackKind::kQuestionTargeted) {
          throw Error(ErrorCode::kConfigError, "question_targeted kind requires the question_targeted scenario");
        }
        for (std::size_t j = i + 1; j < kinds.size(); ++j) {
          if (kinds[i] == kinds[j]) {
            throw Error(ErrorCode::kConfigError,
                        "duplicate attack kind '" + std::string(to_string(kinds[i])) + "'");
          }
        }
      }
    }
    if (per_target_count < 1) throw Error(ErrorCode::kConfigError, "per_target_count must be >= 1");
    if (!(sigma_s > 0.0 && sigma_s < 1.0)) throw Error(ErrorCode::kConfigError, "sigma_s must lie in (0,1)");
    if (!(noise_window.lo > 0.0 && noise_window.lo <= noise_window.hi && noise_window.hi <= 1.0)) {
      throw Error(ErrorCode::kConfigError, "noise window must satisfy 0 < lo <= hi <= 1");
    }
    if (budget < 1) throw Error(ErrorCode::kConfigError, "budget must be >= 1");
  }
};

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\n\r\f\v";
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kSpace);
  return s.substr(first, last - first + 1);
}

}  // namespace memattack
