// Token-overlap QA metrics: F1, BLEU-1, ROUGE-1 F and exact match.
#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "memattack/text.hpp"

namespace memattack {

namespace detail {

// Clipped multiset intersection size.
inline std::size_t overlap_count(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  std::unordered_map<std::string_view, std::size_t> gold_counts;
  for (const auto& t : gold) ++gold_counts[t];
  std::size_t overlap = 0;
  for (const auto& t : pred) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return overlap;
}

inline double unigram_f(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  const std::size_t o = overlap_count(pred, gold);
  if (o == 0) return 0.0;
  const double p = static_cast<double>(o) / static_cast<double>(pred.size());
  const double r = static_cast<double>(o) / static_cast<double>(gold.size());
  return 2.0 * p * r / (p + r);
}

}  // namespace detail

inline double token_f1(std::string_view pred, std::string_view gold, const NormalizationConfig& config = {}) {
  return detail::unigram_f(normalize(pred, config), normalize(gold, config));
}

/// Not symmetric: precision is measured on pred and the brevity penalty only
/// punishes short predictions. Both sides empty counts as a perfect match so
/// that exact_match = 1 implies bleu1 = 1.
inline double bleu1(std::string_view pred, std::string_view gold, const NormalizationConfig& config = {}) {
  const auto p_tokens = normalize(pred, config);
  const auto g_tokens = normalize(gold, config);
  if (p_tokens.empty()) return g_tokens.empty() ? 1.0 : 0.0;
  const double n_pred = static_cast<double>(p_tokens.size());
  const double n_gold = static_cast<double>(g_tokens.size());
  const std::size_t o = detail::overlap_count(p_tokens, g_tokens);
  const double precision = o == 0 ? 1.0 / (2.0 * n_pred) : static_cast<double>(o) / n_pred;
  const double bp = n_pred >= n_gold ? 1.0 : std::exp(1.0 - n_gold / n_pred);
  return bp * precision;
}

/// ROUGE-1 F-measure with beta = 1. Pointwise identical to token_f1; both are
/// kept because reports carry both columns.
inline double rouge1_f(std::string_view pred, std::string_view gold, const NormalizationConfig& config = {}) {
  const auto p_tokens = normalize(pred, config);
  const auto g_tokens = normalize(gold, config);
  if (p_tokens.empty() && g_tokens.empty()) return 1.0;
  if (p_tokens.empty() || g_tokens.empty()) return 0.0;
  const double o = static_cast<double>(detail::overlap_count(p_tokens, g_tokens));
  if (o == 0.0) return 0.0;
  const double precision = o / static_cast<double>(p_tokens.size());
  const double recall = o / static_cast<double>(g_tokens.size());
  constexpr double kBeta2 = 1.0;
  return (1.0 + kBeta2) * precision * recall / (kBeta2 * precision + recall);
}

inline int exact_match(std::string_view pred, std::string_view gold, const NormalizationConfig& config = {}) {
  return normalize(pred, config) == normalize(gold, config) ? 1 : 0;
}

enum class Metric { kF1, kBleu1, kRouge1, kExactMatch };

inline constexpr Metric kAllMetrics[] = {Metric::kF1, Metric::kBleu1, Metric::kRouge1, Metric::kExactMatch};

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::kF1: return "f1";
    case Metric::kBleu1: return "bleu1";
    case Metric::kRouge1: return "rouge1_f";
    case Metric::kExactMatch: return "exact_match";
  }
  return "unknown";
}

struct MetricScores {
  double f1 = 0.0;
  double bleu1 = 0.0;
  double rouge1 = 0.0;
  double exact_match = 0.0;

  double get(Metric m) const {
    switch (m) {
      case Metric::kF1: return f1;
      case Metric::kBleu1: return bleu1;
      case Metric::kRouge1: return rouge1;
      case Metric::kExactMatch: return exact_match;
    }
    return 0.0;
  }

  bool operator==(const MetricScores&) const = default;
};

inline MetricScores score_answer(std::string_view pred, std::string_view gold, const NormalizationConfig& config = {}) {
  return MetricScores{token_f1(pred, gold, config), bleu1(pred, gold, config), rouge1_f(pred, gold, config),
                      static_cast<double>(exact_match(pred, gold, config))};
}

}  // namespace memattack
