// Answer normalization and content-word extraction.
#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "memattack/rng.hpp"

namespace memattack {

struct NormalizationConfig {
  bool lowercase = true;
  bool strip_punctuation = true;
  bool remove_articles = true;  // exactly {a, an, the}
  bool collapse_whitespace = true;

  bool operator==(const NormalizationConfig&) const = default;

  std::string describe() const {
    std::string s = "lowercase=";
    s += lowercase ? "1" : "0";
    s += ",strip_punctuation=";
    s += strip_punctuation ? "1" : "0";
    s += ",remove_articles=";
    s += remove_articles ? "1" : "0";
    s += ",collapse_whitespace=";
    s += collapse_whitespace ? "1" : "0";
    return s;
  }

  std::uint64_t hash() const { return fnv1a64(describe()); }
};

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

/// lowercase -> punctuation to space -> drop articles -> collapse -> split.
/// With collapse_whitespace off, runs of separators yield empty tokens.
inline std::vector<std::string> normalize(std::string_view text, const NormalizationConfig& config = {}) {
  std::string buf(text);
  if (config.lowercase) {
    for (char& c : buf) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (config.strip_punctuation) {
    for (char& c : buf) {
      if (std::ispunct(static_cast<unsigned char>(c))) c = ' ';
    }
  }

  std::vector<std::string> tokens;
  std::string current;
  bool pending = false;
  for (char c : buf) {
    if (is_ascii_space(c)) {
      if (pending || !config.collapse_whitespace) tokens.push_back(current);
      current.clear();
      pending = false;
    } else {
      current.push_back(c);
      pending = true;
    }
  }
  if (pending) tokens.push_back(current);

  if (config.remove_articles) {
    std::erase_if(tokens, [](const std::string& t) { return t == "a" || t == "an" || t == "the"; });
  }
  if (config.collapse_whitespace) {
    std::erase_if(tokens, [](const std::string& t) { return t.empty(); });
  }
  return tokens;
}

inline constexpr std::array<std::string_view, 50> kStopwords = {
    "a",    "an",   "the",   "is",    "are",  "was",  "were", "be",   "been",  "this",
    "has",  "have", "had",   "do",    "does", "did",  "will", "can",  "would", "of",
    "in",   "on",   "at",    "to",    "for",  "with", "by",   "from", "about", "and",
    "or",   "that", "i",     "you",   "he",   "she",  "it",   "we",   "they",  "her",
    "his",  "their", "what", "when",  "where", "who", "how",  "which", "there", "not",
};

inline bool is_stopword(std::string_view token) {
  return std::find(kStopwords.begin(), kStopwords.end(), token) != kStopwords.end();
}

/// Normalized tokens minus stopwords, first occurrence order, no duplicates.
inline std::vector<std::string> content_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : normalize(text)) {
    if (is_stopword(t)) continue;
    if (std::find(out.begin(), out.end(), t) != out.end()) continue;
    out.push_back(std::move(t));
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    if (is_ascii_space(c)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace memattack
