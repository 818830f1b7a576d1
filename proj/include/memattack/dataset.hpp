// LoCoMo-format conversation loading and deterministic synthetic corpora.
#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "memattack/core.hpp"
#include "memattack/log.hpp"
#include "memattack/rng.hpp"
#include "memattack/text.hpp"

namespace memattack {

struct Turn {
  std::string speaker;
  std::string utterance;
  std::string timestamp_label;  // opaque; empty when the file has none

  bool operator==(const Turn&) const = default;
};

struct Conversation {
  std::string conversation_id;
  std::vector<Turn> sessions;  // all turns, session order then turn order
  std::vector<QAItem> qa_items;
  /// Memory texts supplied directly (synthetic corpora). When empty, memories
  /// are derived from the turns.
  std::vector<std::string> prepared_memories;

  bool operator==(const Conversation&) const = default;
};

struct MemoryText {
  std::string text;
  std::optional<std::string> timestamp_label;
};

/// "{speaker}: {utterance}. timestamp: {label}" per turn, or the prepared
/// memories verbatim.
inline std::vector<MemoryText> memory_texts(const Conversation& conv) {
  std::vector<MemoryText> out;
  if (!conv.prepared_memories.empty()) {
    for (const auto& m : conv.prepared_memories) out.push_back({m, std::nullopt});
    return out;
  }
  for (const auto& turn : conv.sessions) {
    if (trim(turn.utterance).empty()) continue;
    std::string text = turn.speaker + ": " + turn.utterance + ".";
    std::optional<std::string> label;
    if (!turn.timestamp_label.empty()) {
      text += " timestamp: " + turn.timestamp_label;
      label = turn.timestamp_label;
    }
    out.push_back({std::move(text), std::move(label)});
  }
  return out;
}

// ---- LoCoMo ------------------------------------------------------------------

/// Category codes seen across LoCoMo releases. nullopt marks the adversarial
/// category, which is excluded from evaluation.
///   1 multi_hop, 2 temporal, 3 open_domain, 4 single_hop, 5 adversarial
inline std::optional<Category> map_locomo_category(const nlohmann::ordered_json& code, const std::string& where) {
  if (code.is_number_integer()) {
    switch (code.get<int>()) {
      case 1: return Category::kMultiHop;
      case 2: return Category::kTemporal;
      case 3: return Category::kOpenDomain;
      case 4: return Category::kSingleHop;
      case 5: return std::nullopt;
      default: break;
    }
  } else if (code.is_string()) {
    std::string name = to_lower(trim(code.get<std::string>()));
    std::replace(name.begin(), name.end(), '-', '_');
    std::replace(name.begin(), name.end(), ' ', '_');
    if (name == "multi_hop" || name == "multihop") return Category::kMultiHop;
    if (name == "single_hop" || name == "singlehop") return Category::kSingleHop;
    if (name == "temporal") return Category::kTemporal;
    if (name == "open_domain" || name == "opendomain") return Category::kOpenDomain;
    if (name == "adversarial") return std::nullopt;
    if (name.size() == 1 && std::isdigit(static_cast<unsigned char>(name[0]))) {
      return map_locomo_category(nlohmann::ordered_json(name[0] - '0'), where);
    }
  }
  throw Error(ErrorCode::kDatasetError, where + ": unknown category code " + code.dump());
}

inline int locomo_category_code(Category c) {
  switch (c) {
    case Category::kMultiHop: return 1;
    case Category::kTemporal: return 2;
    case Category::kOpenDomain: return 3;
    case Category::kSingleHop: return 4;
  }
  return 0;
}

namespace detail {

inline std::optional<int> session_number(std::string_view key) {
  constexpr std::string_view kPrefix = "session_";
  if (!key.starts_with(kPrefix) || key.size() == kPrefix.size()) return std::nullopt;
  int n = 0;
  for (char c : key.substr(kPrefix.size())) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    n = n * 10 + (c - '0');
  }
  return n;
}

inline std::string scalar_text(const nlohmann::ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  throw Error(ErrorCode::kDatasetError, "expected a string or number, got " + v.dump());
}

}  // namespace detail

struct LocomoLoad {
  std::vector<Conversation> conversations;
  std::size_t dropped_adversarial = 0;
};

inline LocomoLoad parse_locomo(const nlohmann::ordered_json& doc) {
  if (!doc.is_array()) throw Error(ErrorCode::kDatasetError, "top level must be an array of conversations");
  LocomoLoad result;
  for (std::size_t ci = 0; ci < doc.size(); ++ci) {
    const auto& sample = doc[ci];
    const std::string where_conv = "conversation[" + std::to_string(ci) + "]";
    if (!sample.is_object()) throw Error(ErrorCode::kDatasetError, where_conv + " is not an object");
    try {
      Conversation conv;
      conv.conversation_id = sample.contains("sample_id") ? detail::scalar_text(sample["sample_id"])
                                                           : "conv-" + std::to_string(ci);
      if (!sample.contains("conversation") || !sample["conversation"].is_object()) {
        throw Error(ErrorCode::kDatasetError, where_conv + " lacks the 'conversation' object");
      }
      const auto& body = sample["conversation"];
      // Numeric session order, whatever order the keys appear in.
      std::vector<std::pair<int, std::string>> session_keys;
      for (auto it = body.begin(); it != body.end(); ++it) {
        if (const auto n = detail::session_number(it.key())) session_keys.emplace_back(*n, it.key());
      }
      std::sort(session_keys.begin(), session_keys.end());
      for (const auto& [n, key] : session_keys) {
        const auto& turns = body[key];
        if (!turns.is_array()) throw Error(ErrorCode::kDatasetError, where_conv + "." + key + " is not an array");
        const std::string stamp_key = key + "_date_time";
        const std::string label = body.contains(stamp_key) ? detail::scalar_text(body[stamp_key]) : std::string();
        for (std::size_t ti = 0; ti < turns.size(); ++ti) {
          const auto& turn = turns[ti];
          const std::string where = where_conv + "." + key + "[" + std::to_string(ti) + "]";
          if (!turn.is_object() || !turn.contains("speaker") || !turn.contains("text")) {
            throw Error(ErrorCode::kDatasetError, where + " needs 'speaker' and 'text'");
          }
          conv.sessions.push_back({detail::scalar_text(turn["speaker"]), detail::scalar_text(turn["text"]), label});
        }
      }
      if (sample.contains("qa")) {
        if (!sample["qa"].is_array()) throw Error(ErrorCode::kDatasetError, where_conv + ".qa is not an array");
        for (std::size_t qi = 0; qi < sample["qa"].size(); ++qi) {
          const auto& qa = sample["qa"][qi];
          const std::string where = where_conv + ".qa[" + std::to_string(qi) + "]";
          if (!qa.is_object() || !qa.contains("question") || !qa.contains("category")) {
            throw Error(ErrorCode::kDatasetError, where + " needs 'question' and 'category'");
          }
          const auto category = map_locomo_category(qa["category"], where);
          if (!category) {
            ++result.dropped_adversarial;
            continue;
          }
          if (!qa.contains("answer")) throw Error(ErrorCode::kDatasetError, where + " lacks 'answer'");
          QAItem item;
          item.question = detail::scalar_text(qa["question"]);
          if (trim(item.question).empty()) throw Error(ErrorCode::kDatasetError, where + " has an empty question");
          item.gold_answer = detail::scalar_text(qa["answer"]);
          item.category = *category;
          item.conversation_id = conv.conversation_id;
          item.qid = qa.contains("qid") ? detail::scalar_text(qa["qid"])
                                        : conv.conversation_id + ":q" + std::to_string(qi);
          conv.qa_items.push_back(std::move(item));
        }
      }
      result.conversations.push_back(std::move(conv));
    } catch (const Error& e) {
      const std::string what = e.what();
      if (what.find("conversation[") != std::string::npos) throw;
      throw Error(ErrorCode::kDatasetError, where_conv + ": " + what);
    }
  }
  return result;
}

inline std::vector<Conversation> load_locomo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kDatasetError, "cannot open '" + path.string() + "'");
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kDatasetError, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
  auto loaded = parse_locomo(doc);
  Log::info("loaded " + std::to_string(loaded.conversations.size()) + " conversations from '" + path.string() +
            "', dropped " + std::to_string(loaded.dropped_adversarial) + " adversarial-category questions");
  return std::move(loaded.conversations);
}

/// Writes the retained content back in LoCoMo layout. Consecutive turns with
/// the same timestamp label form one session.
inline nlohmann::ordered_json to_locomo_json(const std::vector<Conversation>& conversations) {
  auto doc = nlohmann::ordered_json::array();
  for (const auto& conv : conversations) {
    nlohmann::ordered_json sample;
    sample["sample_id"] = conv.conversation_id;
    nlohmann::ordered_json body = nlohmann::ordered_json::object();
    std::vector<std::string> speakers;
    for (const auto& t : conv.sessions) {
      if (std::find(speakers.begin(), speakers.end(), t.speaker) == speakers.end()) speakers.push_back(t.speaker);
    }
    if (!speakers.empty()) body["speaker_a"] = speakers[0];
    if (speakers.size() > 1) body["speaker_b"] = speakers[1];
    int session = 0;
    std::optional<std::string> current_label;
    nlohmann::ordered_json* turns = nullptr;
    for (const auto& t : conv.sessions) {
      if (!current_label || *current_label != t.timestamp_label) {
        ++session;
        current_label = t.timestamp_label;
        const std::string key = "session_" + std::to_string(session);
        if (!t.timestamp_label.empty()) body[key + "_date_time"] = t.timestamp_label;
        body[key] = nlohmann::ordered_json::array();
        turns = &body[key];
      }
      turns->push_back({{"speaker", t.speaker}, {"text", t.utterance}});
    }
    sample["conversation"] = std::move(body);
    auto qa = nlohmann::ordered_json::array();
    for (const auto& item : conv.qa_items) {
      qa.push_back({{"question", item.question},
                    {"answer", item.gold_answer},
                    {"category", locomo_category_code(item.category)},
                    {"qid", item.qid}});
    }
    sample["qa"] = std::move(qa);
    doc.push_back(std::move(sample));
  }
  return doc;
}

// ---- synthetic corpora ---------------------------------------------------------

struct SynthSpec {
  std::uint64_t seed = 42;
  std::size_t n_conversations = 4;
  std::size_t facts_per_conversation = 25;
  std::size_t distractors_per_conversation = 25;

  bool operator==(const SynthSpec&) const = default;
};

namespace detail {

struct Relation {
  std::string_view first;
  std::string_view second;
};

inline constexpr Relation kRelations[] = {
    {"favorite", "color"},  {"home", "city"},      {"pet", "name"},       {"lucky", "number"},
    {"dream", "job"},       {"childhood", "toy"},  {"best", "friend"},    {"morning", "drink"},
    {"garden", "flower"},   {"music", "teacher"},  {"weekend", "hobby"},  {"travel", "destination"},
};

inline constexpr Relation kTemporalRelations[] = {
    {"wedding", "date"},  {"graduation", "date"}, {"relocation", "date"},
    {"adoption", "date"}, {"promotion", "date"},  {"marathon", "date"},
};

inline constexpr std::string_view kMonths[] = {"January", "February", "March",     "April",   "May",      "June",
                                               "July",    "August",   "September", "October", "November", "December"};

class PseudoWords {
 public:
  explicit PseudoWords(Rng& rng) : rng_(rng) {}

  std::string next() {
    constexpr std::string_view kConsonants = "bdfgklmnprstvz";
    constexpr std::string_view kVowels = "aeiou";
    for (;;) {
      std::string w;
      const std::size_t syllables = 2 + rng_.below(2);
      for (std::size_t i = 0; i < syllables; ++i) {
        w += kConsonants[rng_.below(kConsonants.size())];
        w += kVowels[rng_.below(kVowels.size())];
      }
      if (rng_.below(2)) w += kConsonants[rng_.below(kConsonants.size())];
      if (is_stopword(w) || !used_.insert(w).second) continue;
      return w;
    }
  }

  std::string next_capitalized() {
    auto w = next();
    w.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(w.front())));
    return w;
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

inline constexpr Category kRoundRobin[] = {Category::kSingleHop, Category::kMultiHop, Category::kTemporal,
                                           Category::kOpenDomain};

inline std::string synth_question(Category category, const std::string& relation, const std::string& subject) {
  switch (category) {
    case Category::kSingleHop: return "What is the " + relation + " of " + subject + "?";
    case Category::kMultiHop: return "Which " + relation + " does " + subject + " have?";
    case Category::kTemporal: return "When is the " + relation + " of " + subject + "?";
    case Category::kOpenDomain: return "What would " + subject + " call their " + relation + "?";
  }
  return {};
}

}  // namespace detail

/// Facts "fact: {subject} {relation} answer: {answer}" each paired with one
/// question naming the subject and relation, plus distractor memories made
/// of pseudo-words that no question mentions.
inline std::vector<Conversation> synth_corpus(const SynthSpec& spec) {
  if (spec.n_conversations < 1 || spec.facts_per_conversation < 1 || spec.distractors_per_conversation < 1) {
    throw Error(ErrorCode::kInvalidInput, "synthetic corpus counts must all be >= 1");
  }
  Rng rng(spec.seed);
  detail::PseudoWords words(rng);
  std::vector<Conversation> out;
  for (std::size_t c = 0; c < spec.n_conversations; ++c) {
    Conversation conv;
    conv.conversation_id = "synth-" + std::to_string(c);
    std::vector<std::string> memories;
    for (std::size_t f = 0; f < spec.facts_per_conversation; ++f) {
      const Category category = detail::kRoundRobin[f % 4];
      const std::string subject = words.next_capitalized() + " " + words.next_capitalized();
      std::string relation;
      std::string answer;
      if (category == Category::kTemporal) {
        const auto& r = detail::kTemporalRelations[rng.below(std::size(detail::kTemporalRelations))];
        relation = std::string(r.first) + " " + std::string(r.second);
        answer = std::to_string(1 + rng.below(28)) + " " + std::string(detail::kMonths[rng.below(12)]) + ", " +
                 std::to_string(2000 + rng.below(24));
      } else {
        const auto& r = detail::kRelations[rng.below(std::size(detail::kRelations))];
        relation = std::string(r.first) + " " + std::string(r.second);
        answer = words.next_capitalized();
        if (rng.below(2)) answer += " " + words.next_capitalized();
      }
      memories.push_back("fact: " + subject + " " + relation + " answer: " + answer);
      QAItem item;
      item.question = detail::synth_question(category, relation, subject);
      item.gold_answer = answer;
      item.category = category;
      item.conversation_id = conv.conversation_id;
      item.qid = conv.conversation_id + ":q" + std::to_string(f);
      conv.qa_items.push_back(std::move(item));
    }
    for (std::size_t d = 0; d < spec.distractors_per_conversation; ++d) {
      const std::size_t n = 6 + rng.below(4);
      std::string text = words.next_capitalized();
      for (std::size_t i = 1; i < n; ++i) text += " " + words.next();
      memories.push_back(text + ".");
    }
    rng.shuffle(memories);
    conv.prepared_memories = std::move(memories);
    out.push_back(std::move(conv));
  }
  return out;
}

}  // namespace memattack
