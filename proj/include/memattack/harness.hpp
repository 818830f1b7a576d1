// Run configuration and the write -> inject -> freeze -> answer -> score
// pipeline.
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "memattack/analysis.hpp"
#include "memattack/attacks.hpp"
#include "memattack/core.hpp"
#include "memattack/dataset.hpp"
#include "memattack/embedding.hpp"
#include "memattack/log.hpp"
#include "memattack/memory_store.hpp"
#include "memattack/metrics.hpp"
#include "memattack/prompt_templates.hpp"
#include "memattack/report.hpp"
#include "memattack/rng.hpp"
#include "memattack/text.hpp"
#include "memattack/victim.hpp"

namespace memattack {

enum class DatasetKind { kSynthetic, kLocomo };

inline std::string_view to_string(DatasetKind k) { return k == DatasetKind::kSynthetic ? "synthetic" : "locomo"; }

struct DatasetConfig {
  DatasetKind kind = DatasetKind::kSynthetic;
  SynthSpec synth;
  std::string path;                   // locomo only
  std::size_t max_conversations = 0;  // 0 keeps all

  bool operator==(const DatasetConfig&) const = default;
};

struct RunConfig {
  DatasetConfig dataset;
  EmbedderConfig embedder;
  VictimConfig victim;
  std::optional<AttackPlan> attack;  // nullopt: clean baseline only
  /// Explicit attack seed; otherwise derived from master_seed.
  std::optional<std::uint64_t> attack_seed;
  GenerationConfig generation;
  std::vector<std::size_t> k_values{10};
  std::uint64_t master_seed = 42;
  std::string output_dir = "memattack-out";
  NormalizationConfig normalization;
  std::size_t workers = 4;

  bool operator==(const RunConfig&) const = default;

  /// The attack plan with its seed resolved.
  std::optional<AttackPlan> effective_attack() const {
    if (!attack) return std::nullopt;
    AttackPlan plan = *attack;
    plan.seed = attack_seed.value_or(derive_seed(master_seed, "attack"));
    return plan;
  }

  void validate() const {
    if (k_values.empty()) throw Error(ErrorCode::kConfigError, "k_values must not be empty");
    for (std::size_t k : k_values) {
      if (k < 1) throw Error(ErrorCode::kConfigError, "every k must be >= 1");
    }
    if (dataset.kind == DatasetKind::kLocomo && trim(dataset.path).empty()) {
      throw Error(ErrorCode::kConfigError, "locomo dataset needs a path");
    }
    if (dataset.kind == DatasetKind::kSynthetic &&
        (dataset.synth.n_conversations < 1 || dataset.synth.facts_per_conversation < 1 ||
         dataset.synth.distractors_per_conversation < 1)) {
      throw Error(ErrorCode::kConfigError, "synthetic dataset counts must be >= 1");
    }
    embedder.validate();
    victim.validate();
    if (auto plan = effective_attack()) plan->validate();
    if (generation.temperature < 0.0) throw Error(ErrorCode::kConfigError, "generation temperature must be >= 0");
    if (!(generation.top_p > 0.0 && generation.top_p <= 1.0)) {
      throw Error(ErrorCode::kConfigError, "generation top_p must lie in (0, 1]");
    }
    if (generation.max_tokens < 1) throw Error(ErrorCode::kConfigError, "generation max_tokens must be >= 1");
    if (workers < 1) throw Error(ErrorCode::kConfigError, "workers must be >= 1");
  }
};

// ---- attack spec strings ---------------------------------------------------------

/// "harsh_instruction", "ensemble:ignore+general_negation", "question_targeted",
/// or "none". Other plan fields come from `base`.
inline std::optional<AttackPlan> parse_attack_spec(std::string_view spec, AttackPlan base = {}) {
  spec = trim(spec);
  if (spec.empty() || spec == "none") return std::nullopt;
  base.kinds.clear();
  constexpr std::string_view kEnsemble = "ensemble:";
  try {
    if (spec.starts_with(kEnsemble)) {
      std::string_view rest = spec.substr(kEnsemble.size());
      while (true) {
        const auto plus = rest.find('+');
        base.kinds.push_back(parse_attack_kind(trim(rest.substr(0, plus))));
        if (plus == std::string_view::npos) break;
        rest = rest.substr(plus + 1);
      }
      if (base.kinds.size() < 2) throw Error(ErrorCode::kConfigError, "an ensemble needs at least 2 kinds");
    } else {
      base.kinds.push_back(parse_attack_kind(spec));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    throw Error(ErrorCode::kConfigError, "bad attack spec '" + std::string(spec) + "': " + e.what());
  }
  base.scenario = base.kinds.front() == AttackKind::kQuestionTargeted ? Scenario::kQuestionTargeted
                                                                      : Scenario::kContentBased;
  return base;
}

inline std::string attack_spec_string(const AttackPlan& plan) {
  if (plan.kinds.size() == 1) return std::string(to_string(plan.kinds.front()));
  std::string s = "ensemble:";
  for (std::size_t i = 0; i < plan.kinds.size(); ++i) {
    if (i) s += '+';
    s += to_string(plan.kinds[i]);
  }
  return s;
}

// ---- config JSON -----------------------------------------------------------------

namespace detail {

/// Reads an object field by field and rejects keys nobody asked for.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw Error(ErrorCode::kConfigError, where_ + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::kConfigError, where_ + "." + key + " has the wrong type");
    }
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.contains(key)) throw Error(ErrorCode::kConfigError, "unknown key " + where_ + "." + key);
    }
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline BackendMode read_mode(StrictObject& obj, const char* key, BackendMode fallback) {
  std::string name(to_string(fallback));
  obj.read(key, name);
  try {
    return parse_backend_mode(name);
  } catch (const Error&) {
    throw Error(ErrorCode::kConfigError, obj.path(key) + ": unknown backend mode '" + name + "'");
  }
}

inline void require_unsigned(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number_unsigned()) throw Error(ErrorCode::kConfigError, where + " must be a non-negative integer");
}

}  // namespace detail

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json doc;
  if (c.dataset.kind == DatasetKind::kSynthetic) {
    doc["dataset"] = {{"kind", "synthetic"},
                      {"seed", c.dataset.synth.seed},
                      {"conversations", c.dataset.synth.n_conversations},
                      {"facts_per_conversation", c.dataset.synth.facts_per_conversation},
                      {"distractors_per_conversation", c.dataset.synth.distractors_per_conversation},
                      {"max_conversations", c.dataset.max_conversations}};
  } else {
    doc["dataset"] = {{"kind", "locomo"}, {"path", c.dataset.path}, {"max_conversations", c.dataset.max_conversations}};
  }
  doc["embedder"] = {{"mode", to_string(c.embedder.mode)},       {"dim", c.embedder.dim},
                     {"model", c.embedder.model_name},           {"base_url", c.embedder.base_url},
                     {"hash_seed", c.embedder.hash_seed},        {"timeout_seconds", c.embedder.timeout_seconds},
                     {"retries", c.embedder.retries}};
  doc["victim"] = {{"mode", to_string(c.victim.mode)},
                   {"model", c.victim.model_name},
                   {"base_url", c.victim.base_url},
                   {"temperature", c.victim.temperature},
                   {"top_p", c.victim.top_p},
                   {"max_tokens", c.victim.max_tokens},
                   {"timeout_seconds", c.victim.timeout_seconds},
                   {"retries", c.victim.retries},
                   {"max_in_flight", c.victim.max_in_flight}};
  doc["generation"] = {{"mode", to_string(c.generation.mode)},
                       {"model", c.generation.model_name},
                       {"base_url", c.generation.base_url},
                       {"temperature", c.generation.temperature},
                       {"top_p", c.generation.top_p},
                       {"max_tokens", c.generation.max_tokens},
                       {"timeout_seconds", c.generation.timeout_seconds},
                       {"retries", c.generation.retries}};
  if (c.attack) {
    std::vector<std::string> kinds;
    for (AttackKind k : c.attack->kinds) kinds.emplace_back(to_string(k));
    nlohmann::json a{{"scenario", to_string(c.attack->scenario)},
                     {"kinds", kinds},
                     {"per_target_count", c.attack->per_target_count},
                     {"sigma_s", c.attack->sigma_s},
                     {"noise_window", {{"lo", c.attack->noise_window.lo}, {"hi", c.attack->noise_window.hi}}},
                     {"budget", c.attack->budget}};
    if (c.attack_seed) a["seed"] = *c.attack_seed;
    doc["attack"] = a;
  } else {
    doc["attack"] = nullptr;
  }
  doc["k_values"] = c.k_values;
  doc["master_seed"] = c.master_seed;
  doc["output_dir"] = c.output_dir;
  doc["normalization"] = {{"lowercase", c.normalization.lowercase},
                          {"strip_punctuation", c.normalization.strip_punctuation},
                          {"remove_articles", c.normalization.remove_articles},
                          {"collapse_whitespace", c.normalization.collapse_whitespace}};
  doc["workers"] = c.workers;
  return doc;
}

/// Strict: unknown keys and wrong types are ConfigError. Missing keys keep
/// their defaults.
inline RunConfig config_from_json(const nlohmann::json& doc) {
  RunConfig c;
  detail::StrictObject root(doc, "config");

  if (const auto* d = root.child("dataset")) {
    detail::StrictObject obj(*d, "config.dataset");
    std::string kind = "synthetic";
    obj.read("kind", kind);
    if (kind == "synthetic") {
      c.dataset.kind = DatasetKind::kSynthetic;
      obj.read("seed", c.dataset.synth.seed);
      obj.read("conversations", c.dataset.synth.n_conversations);
      obj.read("facts_per_conversation", c.dataset.synth.facts_per_conversation);
      obj.read("distractors_per_conversation", c.dataset.synth.distractors_per_conversation);
    } else if (kind == "locomo") {
      c.dataset.kind = DatasetKind::kLocomo;
      obj.read("path", c.dataset.path);
    } else {
      throw Error(ErrorCode::kConfigError, "config.dataset.kind must be 'synthetic' or 'locomo'");
    }
    obj.read("max_conversations", c.dataset.max_conversations);
    obj.finish();
  }

  if (const auto* e = root.child("embedder")) {
    detail::StrictObject obj(*e, "config.embedder");
    c.embedder.mode = detail::read_mode(obj, "mode", c.embedder.mode);
    obj.read("dim", c.embedder.dim);
    obj.read("model", c.embedder.model_name);
    obj.read("base_url", c.embedder.base_url);
    obj.read("hash_seed", c.embedder.hash_seed);
    obj.read("timeout_seconds", c.embedder.timeout_seconds);
    obj.read("retries", c.embedder.retries);
    obj.finish();
  }

  if (const auto* v = root.child("victim")) {
    detail::StrictObject obj(*v, "config.victim");
    c.victim.mode = detail::read_mode(obj, "mode", c.victim.mode);
    obj.read("model", c.victim.model_name);
    obj.read("base_url", c.victim.base_url);
    obj.read("temperature", c.victim.temperature);
    obj.read("top_p", c.victim.top_p);
    obj.read("max_tokens", c.victim.max_tokens);
    obj.read("timeout_seconds", c.victim.timeout_seconds);
    obj.read("retries", c.victim.retries);
    obj.read("max_in_flight", c.victim.max_in_flight);
    obj.finish();
  }

  if (const auto* g = root.child("generation")) {
    detail::StrictObject obj(*g, "config.generation");
    std::string mode(to_string(c.generation.mode));
    obj.read("mode", mode);
    c.generation.mode = parse_generation_mode(mode);
    obj.read("model", c.generation.model_name);
    obj.read("base_url", c.generation.base_url);
    obj.read("temperature", c.generation.temperature);
    obj.read("top_p", c.generation.top_p);
    obj.read("max_tokens", c.generation.max_tokens);
    obj.read("timeout_seconds", c.generation.timeout_seconds);
    obj.read("retries", c.generation.retries);
    obj.finish();
  }

  if (const auto* a = root.child("attack"); a && !a->is_null()) {
    detail::StrictObject obj(*a, "config.attack");
    AttackPlan plan;
    std::vector<std::string> kinds;
    obj.read("kinds", kinds);
    if (kinds.empty()) throw Error(ErrorCode::kConfigError, "config.attack.kinds must list at least one kind");
    try {
      for (const auto& k : kinds) plan.kinds.push_back(parse_attack_kind(k));
    } catch (const Error& err) {
      throw Error(ErrorCode::kConfigError, std::string("config.attack.kinds: ") + err.what());
    }
    plan.scenario = plan.kinds.front() == AttackKind::kQuestionTargeted ? Scenario::kQuestionTargeted
                                                                        : Scenario::kContentBased;
    std::string scenario(to_string(plan.scenario));
    obj.read("scenario", scenario);
    try {
      plan.scenario = parse_scenario(scenario);
    } catch (const Error& err) {
      throw Error(ErrorCode::kConfigError, std::string("config.attack.scenario: ") + err.what());
    }
    obj.read("per_target_count", plan.per_target_count);
    obj.read("sigma_s", plan.sigma_s);
    if (const auto* w = obj.child("noise_window")) {
      detail::StrictObject win(*w, "config.attack.noise_window");
      win.read("lo", plan.noise_window.lo);
      win.read("hi", plan.noise_window.hi);
      win.finish();
    }
    obj.read("budget", plan.budget);
    if (const auto* s = obj.child("seed"); s && !s->is_null()) {
      detail::require_unsigned(*s, "config.attack.seed");
      c.attack_seed = s->get<std::uint64_t>();
    }
    obj.finish();
    c.attack = plan;
  }

  if (const auto* k = root.child("k_values")) {
    if (!k->is_array()) throw Error(ErrorCode::kConfigError, "config.k_values must be an array");
    c.k_values.clear();
    for (const auto& v : *k) {
      detail::require_unsigned(v, "config.k_values[]");
      c.k_values.push_back(v.get<std::size_t>());
    }
  }
  if (const auto* s = root.child("master_seed")) {
    detail::require_unsigned(*s, "config.master_seed");
    c.master_seed = s->get<std::uint64_t>();
  }
  root.read("output_dir", c.output_dir);
  if (const auto* n = root.child("normalization")) {
    detail::StrictObject obj(*n, "config.normalization");
    obj.read("lowercase", c.normalization.lowercase);
    obj.read("strip_punctuation", c.normalization.strip_punctuation);
    obj.read("remove_articles", c.normalization.remove_articles);
    obj.read("collapse_whitespace", c.normalization.collapse_whitespace);
    obj.finish();
  }
  root.read("workers", c.workers);
  root.finish();
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open config '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, "config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

inline constexpr const char* kEmbedUrlEnv = "MEMATTACK_EMBED_URL";
inline constexpr const char* kLlmUrlEnv = "MEMATTACK_LLM_URL";

/// MEMATTACK_EMBED_URL replaces the embedder URL; MEMATTACK_LLM_URL the
/// victim and generation URLs.
inline void apply_env_overrides(RunConfig& c) {
  if (const char* url = std::getenv(kEmbedUrlEnv); url && *url) c.embedder.base_url = url;
  if (const char* url = std::getenv(kLlmUrlEnv); url && *url) {
    c.victim.base_url = url;
    c.generation.base_url = url;
  }
}

/// Config echo stored in reports: everything that can change results.
inline nlohmann::json canonical_config_json(const RunConfig& c) {
  auto doc = config_to_json(c);
  doc.erase("output_dir");
  doc.erase("workers");
  if (auto plan = c.effective_attack()) doc["attack"]["seed"] = plan->seed;
  return doc;
}

inline std::string config_hash(const RunConfig& c) {
  std::string material = canonical_config_json(c).dump();
  material += "|templates=" + std::to_string(kPromptTemplateVersion);
  material += "|victim=" + std::string(kVictimPromptTemplate);
  material += "|normalization=" + c.normalization.describe();
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(material)));
  return buf;
}

// ---- pipeline ----------------------------------------------------------------------

namespace detail {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The exception of
/// the lowest failing index is rethrown, so failures are deterministic.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(workers, n));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct PreparedConversation {
  const Conversation* conversation = nullptr;
  MemoryStore clean{""};
  std::optional<MemoryStore> attacked;
  std::vector<AuditEntry> audit;
};

inline RetrievalResult retrieval_prefix(const RetrievalResult& full, std::size_t k, const MemoryStore& store) {
  RetrievalResult r;
  r.query_text = full.query_text;
  const std::size_t n = std::min(k, full.ranked.size());
  r.ranked.assign(full.ranked.begin(), full.ranked.begin() + static_cast<std::ptrdiff_t>(n));
  for (const auto& s : r.ranked) {
    if (store.record(s.id).provenance == Provenance::kAdversarial) r.adversarial_ids.push_back(s.id);
  }
  return r;
}

inline void audit_injection(PreparedConversation& prep, std::span<const RecordId> ids,
                            std::span<const GeneratedAttack> generated, const AttackPlan& plan,
                            const Embedder& embedder) {
  const MemoryStore& store = *prep.attacked;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& rec = store.record(ids[i]);
    const auto check = store.verify_imperceptibility(ids[i], plan.sigma_s);
    AuditEntry entry;
    entry.conversation_id = rec.conversation_id;
    entry.record_id = rec.id;
    entry.kind = *rec.attack_kind;
    entry.source = describe_source(*rec.source);
    entry.text = rec.text;
    entry.best_clean_similarity = check.best_clean_similarity;
    entry.passed = check.pass;
    if (i < generated.size()) {
      entry.generator = generated[i].generator;
      entry.calibration = generated[i].calibration;
      entry.rounds = generated[i].rounds;
    }
    if (const auto* qid = std::get_if<QuestionId>(&*rec.source)) {
      const auto& qa = prep.conversation->qa_items;
      const auto it = std::find_if(qa.begin(), qa.end(), [&](const QAItem& q) { return q.qid == qid->value; });
      if (it != qa.end()) {
        entry.target_similarity = cosine_similarity(rec.embedding, embedder.embed(it->question));
        entry.passed = entry.passed || *entry.target_similarity >= plan.sigma_s;
      }
    }
    if (!entry.passed) {
      throw Error(ErrorCode::kImperceptibilityViolation,
                  "record " + std::to_string(rec.id) + " of '" + rec.conversation_id + "' (" +
                      std::string(to_string(entry.kind)) + ") is below sigma_s " + std::to_string(plan.sigma_s));
    }
    prep.audit.push_back(std::move(entry));
  }
}

inline void prepare_conversation(PreparedConversation& prep, const std::optional<AttackPlan>& plan,
                                 const Embedder& embedder, const GenerationBackend& generator) {
  const Conversation& conv = *prep.conversation;
  prep.clean = MemoryStore(conv.conversation_id, embedder.declared_dim());
  for (const auto& m : memory_texts(conv)) {
    prep.clean.write_clean(m.text, conv.conversation_id, m.timestamp_label, embedder);
  }
  if (prep.clean.empty()) throw Error(ErrorCode::kDatasetError, "conversation '" + conv.conversation_id + "' has no memories");

  if (plan) {
    prep.attacked = prep.clean;
    std::vector<AdversarialInput> batch;
    std::vector<GeneratedAttack> generated;
    if (plan->scenario == Scenario::kQuestionTargeted) {
      for (const auto& qa : conv.qa_items) {
        auto attacks = question_targeted_attack(qa, plan->per_target_count, generator,
                                                derive_seed(plan->seed, conv.conversation_id, qa.qid));
        for (auto& g : attacks) {
          batch.push_back({g.text, g.kind, QuestionId{qa.qid}});
          generated.push_back(std::move(g));
        }
      }
    } else {
      const AttackContext ctx{generator, embedder, plan->sigma_s, plan->noise_window, plan->budget};
      for (const auto& rec : prep.clean.records()) {
        const std::uint64_t base_seed = derive_seed(plan->seed, rec.conversation_id, rec.id);
        for (std::size_t copy = 0; copy < plan->per_target_count; ++copy) {
          const std::uint64_t seed = copy == 0 ? base_seed : derive_seed(base_seed, std::uint64_t{copy});
          std::vector<GeneratedAttack> members;
          if (plan->kinds.size() == 1) {
            members.push_back(
                generate_content_attack(rec.text, plan->kinds.front(), ctx, member_seed(seed, plan->kinds.front())));
          } else {
            members = ensemble_attack(rec.text, plan->kinds, ctx, seed);
          }
          for (auto& g : members) {
            batch.push_back({g.text, g.kind, rec.id});
            generated.push_back(std::move(g));
          }
        }
      }
    }
    const auto ids = prep.attacked->inject_adversarial(batch, embedder);
    prep.attacked->freeze();
    audit_injection(prep, ids, generated, *plan, embedder);
  }
  prep.clean.freeze();
}

struct QuestionTask {
  std::size_t conversation = 0;
  std::size_t question = 0;
};

}  // namespace detail

inline std::vector<Conversation> load_dataset(const DatasetConfig& config) {
  std::vector<Conversation> conversations =
      config.kind == DatasetKind::kSynthetic ? synth_corpus(config.synth) : load_locomo(config.path);
  if (config.max_conversations > 0 && conversations.size() > config.max_conversations) {
    conversations.resize(config.max_conversations);
  }
  return conversations;
}

/// Runs the full pipeline on already-loaded conversations.
inline ExperimentReport run_experiment(const RunConfig& config, const std::vector<Conversation>& conversations,
                                       const GenerationBackend& generator, const VictimBackend& victim) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  const auto plan = config.effective_attack();
  const Embedder embedder(config.embedder);

  std::vector<std::size_t> ks = config.k_values;
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());

  // Phase 1: stores, injection, audit. Any failure aborts before answering.
  std::vector<detail::PreparedConversation> prepared(conversations.size());
  for (std::size_t i = 0; i < conversations.size(); ++i) prepared[i].conversation = &conversations[i];
  detail::parallel_for(prepared.size(), config.workers, [&](std::size_t i) {
    detail::prepare_conversation(prepared[i], plan, embedder, generator);
  });

  // Phase 2: answer every question once per (condition, k) over frozen stores.
  std::vector<detail::QuestionTask> tasks;
  for (std::size_t c = 0; c < conversations.size(); ++c) {
    for (std::size_t q = 0; q < conversations[c].qa_items.size(); ++q) tasks.push_back({c, q});
  }
  const std::size_t conditions = plan ? 2 : 1;
  std::vector<std::vector<ReportRow>> slots(tasks.size());
  std::size_t answer_workers = config.workers;
  if (config.victim.mode == BackendMode::kHttp) answer_workers = std::min(answer_workers, config.victim.max_in_flight);

  detail::parallel_for(tasks.size(), answer_workers, [&](std::size_t t) {
    const auto& prep = prepared[tasks[t].conversation];
    const QAItem& qa = prep.conversation->qa_items[tasks[t].question];
    auto& rows = slots[t];
    for (std::size_t k : ks) {
      for (std::size_t cond = 0; cond < conditions; ++cond) {
        ReportRow row;
        row.conversation_id = prep.conversation->conversation_id;
        row.qid = qa.qid;
        row.category = qa.category;
        row.k = k;
        row.condition = cond == 0 ? Condition::kClean : Condition::kAttacked;
        row.gold_answer = qa.gold_answer;
        rows.push_back(std::move(row));
      }
    }
    for (std::size_t cond = 0; cond < conditions; ++cond) {
      const MemoryStore& store = cond == 0 ? prep.clean : *prep.attacked;
      std::optional<RetrievalResult> full;
      std::optional<std::string> retrieval_error;
      try {
        full = store.retrieve_top_k(qa.question, k_max, embedder);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kBackendError) throw;
        retrieval_error = e.what();
      }
      for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        ReportRow& row = rows[ki * conditions + cond];
        if (retrieval_error) {
          row.error = retrieval_error;
          continue;
        }
        const auto retrieval = detail::retrieval_prefix(*full, ks[ki], store);
        try {
          const auto rec = answer_from_retrieval(qa, retrieval, store, victim, row.condition);
          row.answer = rec.answer_text;
          row.retrieved_ids = rec.retrieved_ids;
          row.adversarial_retrieved = rec.adversarial_retrieved;
          row.scores = score_answer(row.answer, row.gold_answer, config.normalization);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kBackendError) throw;
          row.error = e.what();
          row.retrieved_ids = retrieval.ids();
          row.adversarial_retrieved = !retrieval.adversarial_ids.empty();
        }
      }
    }
  });

  ExperimentReport report;
  report.config_hash = config_hash(config);
  report.config = canonical_config_json(config);
  report.victim_prompt_template = std::string(kVictimPromptTemplate);
  report.prompt_template_version = kPromptTemplateVersion;
  report.normalization = config.normalization.describe();
  report.memory_writing = config.dataset.kind == DatasetKind::kSynthetic
                              ? "synthetic: prepared fact and distractor memories, one record each"
                              : "locomo: one record per turn, '{speaker}: {utterance}. timestamp: {label}'";
  report.baseline = "clean condition of this run (config " + report.config_hash + ")";
  for (auto& slot : slots) {
    for (auto& row : slot) {
      if (row.error) ++report.backend_errors;
      report.rows.push_back(std::move(row));
    }
  }
  report.summaries = summarize(report.rows, ks, plan.has_value());
  for (auto& prep : prepared) {
    for (auto& entry : prep.audit) report.audit.push_back(std::move(entry));
    for (const auto& rec : prep.clean.records()) {
      ++report.footprint.clean_count;
      report.footprint.clean_chars += rec.text.size();
    }
    if (prep.attacked) {
      for (const auto& rec : prep.attacked->records()) {
        if (rec.provenance != Provenance::kAdversarial) continue;
        ++report.footprint.adversarial_count;
        report.footprint.adversarial_chars += rec.text.size();
      }
    }
  }
  if (report.footprint.clean_count > 0) {
    report.footprint.count_ratio =
        static_cast<double>(report.footprint.adversarial_count) / static_cast<double>(report.footprint.clean_count);
  }
  if (report.footprint.clean_chars > 0) {
    report.footprint.char_ratio =
        static_cast<double>(report.footprint.adversarial_chars) / static_cast<double>(report.footprint.clean_chars);
  }
  if (report.backend_errors > 0) {
    Log::warn(std::to_string(report.backend_errors) + " answers failed with backend errors");
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

/// Loads the dataset and builds backends from the config.
inline ExperimentReport run_experiment(const RunConfig& config) {
  config.validate();
  const auto conversations = load_dataset(config.dataset);
  const auto generator = config.attack ? GenerationBackend::from_config(config.generation)
                                       : GenerationBackend::template_fallback();
  const VictimBackend victim(config.victim);
  return run_experiment(config, conversations, generator, victim);
}

}  // namespace memattack
