// Experiment reports: row-level records, derived summaries, and the JSON /
// CSV / text emitters. Every summary is recomputable from the rows.
#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "memattack/analysis.hpp"
#include "memattack/attacks.hpp"
#include "memattack/core.hpp"
#include "memattack/memory_store.hpp"
#include "memattack/metrics.hpp"
#include "memattack/victim.hpp"

namespace memattack {

inline constexpr std::string_view kReportFormat = "memattack-report";
inline constexpr int kReportFormatVersion = 1;

struct ReportRow {
  std::string conversation_id;
  std::string qid;
  Category category = Category::kSingleHop;
  std::size_t k = 10;
  Condition condition = Condition::kClean;
  std::string gold_answer;
  std::string answer;
  std::optional<std::string> error;  // backend failure; scores are then meaningless
  std::vector<RecordId> retrieved_ids;
  bool adversarial_retrieved = false;
  MetricScores scores;

  bool operator==(const ReportRow&) const = default;
};

struct AsrEntry {
  double decreased = 0.0;
  double zeroed = 0.0;

  bool operator==(const AsrEntry&) const = default;
};

struct KSummary {
  std::size_t k = 10;
  Aggregate clean;
  std::optional<Aggregate> attacked;
  std::array<std::optional<double>, 4> delta_percent{};  // indexed like kAllMetrics
  std::optional<std::array<AsrEntry, 4>> asr;
  std::optional<double> retrieval_frequency;
  std::size_t paired_count = 0;
  std::size_t clean_errors = 0;
  std::size_t attacked_errors = 0;

  bool operator==(const KSummary&) const = default;
};

struct AuditEntry {
  std::string conversation_id;
  RecordId record_id = 0;
  AttackKind kind = AttackKind::kInstruction;
  std::string source;
  std::string text;
  GeneratorKind generator = GeneratorKind::kTemplateFallback;
  double best_clean_similarity = 0.0;
  std::optional<double> target_similarity;  // question-targeted: cosine to the question
  std::optional<Calibration> calibration;
  std::size_t rounds = 1;
  bool passed = false;

  bool operator==(const AuditEntry&) const = default;
};

/// Adversarial share of the memory banks, by record count and by characters.
struct Footprint {
  std::size_t clean_count = 0;
  std::size_t adversarial_count = 0;
  double count_ratio = 0.0;
  std::size_t clean_chars = 0;
  std::size_t adversarial_chars = 0;
  double char_ratio = 0.0;

  bool operator==(const Footprint&) const = default;
};

struct ExperimentReport {
  std::string config_hash;
  nlohmann::json config;
  std::string victim_prompt_template;
  int prompt_template_version = kPromptTemplateVersion;
  std::string normalization;
  std::string memory_writing;
  std::string baseline;
  std::vector<ReportRow> rows;
  std::vector<KSummary> summaries;
  std::vector<AuditEntry> audit;
  Footprint footprint;
  std::size_t backend_errors = 0;
  double wall_clock_seconds = 0.0;  // runtime only, not part of the body

  bool operator==(const ExperimentReport&) const = default;
};

// ---- derived summaries ---------------------------------------------------------

namespace detail {

inline std::string row_key(const ReportRow& r) {
  return r.conversation_id + '\x1f' + r.qid + '\x1f' + std::to_string(r.k);
}

}  // namespace detail

/// Pairs clean and attacked rows of one k that both completed without error.
inline std::vector<PairedResult> pair_rows(const std::vector<ReportRow>& rows, std::size_t k) {
  std::map<std::string, const ReportRow*> clean;
  for (const auto& r : rows) {
    if (r.k == k && r.condition == Condition::kClean && !r.error) clean[detail::row_key(r)] = &r;
  }
  std::vector<PairedResult> out;
  for (const auto& r : rows) {
    if (r.k != k || r.condition != Condition::kAttacked || r.error) continue;
    auto it = clean.find(detail::row_key(r));
    if (it == clean.end()) continue;
    out.push_back({r.conversation_id, r.qid, r.category, k, it->second->scores, r.scores, r.adversarial_retrieved});
  }
  return out;
}

inline std::vector<KSummary> summarize(const std::vector<ReportRow>& rows, const std::vector<std::size_t>& k_values,
                                       bool attacked) {
  std::vector<KSummary> out;
  for (std::size_t k : k_values) {
    KSummary s;
    s.k = k;
    std::vector<CategoryScore> clean_rows;
    std::vector<CategoryScore> attacked_rows;
    for (const auto& r : rows) {
      if (r.k != k) continue;
      const bool is_clean = r.condition == Condition::kClean;
      if (r.error) {
        ++(is_clean ? s.clean_errors : s.attacked_errors);
        continue;
      }
      (is_clean ? clean_rows : attacked_rows).push_back({r.category, r.scores});
    }
    s.clean = aggregate(clean_rows);
    if (attacked) {
      s.attacked = aggregate(attacked_rows);
      for (std::size_t m = 0; m < 4; ++m) {
        try {
          s.delta_percent[m] = delta_percent(*s.attacked, s.clean, kAllMetrics[m]);
        } catch (const Error&) {
          s.delta_percent[m] = std::nullopt;
        }
      }
      const auto paired = pair_rows(rows, k);
      s.paired_count = paired.size();
      if (!paired.empty()) {
        std::array<AsrEntry, 4> table{};
        for (std::size_t m = 0; m < 4; ++m) {
          table[m] = {memattack::asr(paired, kAllMetrics[m], AsrMode::kDecreased),
                      memattack::asr(paired, kAllMetrics[m], AsrMode::kZeroed)};
        }
        s.asr = table;
        s.retrieval_frequency = retrieval_frequency(paired);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

// ---- JSON --------------------------------------------------------------------

namespace detail {

inline nlohmann::json to_json(const MetricScores& s) {
  return {{"f1", s.f1}, {"bleu1", s.bleu1}, {"rouge1_f", s.rouge1}, {"exact_match", s.exact_match}};
}

inline MetricScores scores_from_json(const nlohmann::json& j) {
  return {j.at("f1").get<double>(), j.at("bleu1").get<double>(), j.at("rouge1_f").get<double>(),
          j.at("exact_match").get<double>()};
}

inline nlohmann::json to_json(const MetricMeans& m) { return {{"mean", to_json(m.mean)}, {"count", m.count}}; }

inline MetricMeans means_from_json(const nlohmann::json& j) {
  return {scores_from_json(j.at("mean")), j.at("count").get<std::size_t>()};
}

inline nlohmann::json to_json(const Aggregate& a) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [c, m] : a.per_category) per[std::string(to_string(c))] = to_json(m);
  return {{"per_category", per}, {"overall", to_json(a.overall)}, {"category_weighted", to_json(a.category_weighted)}};
}

inline Aggregate aggregate_from_json(const nlohmann::json& j) {
  Aggregate a;
  for (const auto& [name, m] : j.at("per_category").items()) a.per_category[parse_category(name)] = means_from_json(m);
  a.overall = means_from_json(j.at("overall"));
  a.category_weighted = means_from_json(j.at("category_weighted"));
  return a;
}

template <typename T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json();
}

template <typename T>
std::optional<T> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace detail

inline nlohmann::json report_body_json(const ExperimentReport& r) {
  using detail::to_json;
  nlohmann::json doc;
  doc["format"] = kReportFormat;
  doc["version"] = kReportFormatVersion;
  doc["config_hash"] = r.config_hash;
  doc["config"] = r.config;
  doc["victim_prompt_template"] = r.victim_prompt_template;
  doc["prompt_template_version"] = r.prompt_template_version;
  doc["normalization"] = r.normalization;
  doc["memory_writing"] = r.memory_writing;
  doc["baseline"] = r.baseline;

  auto& rows = doc["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"conversation_id", row.conversation_id},
                    {"qid", row.qid},
                    {"category", to_string(row.category)},
                    {"k", row.k},
                    {"condition", to_string(row.condition)},
                    {"gold_answer", row.gold_answer},
                    {"answer", row.answer},
                    {"error", detail::optional_json(row.error)},
                    {"retrieved_ids", row.retrieved_ids},
                    {"adversarial_retrieved", row.adversarial_retrieved},
                    {"scores", to_json(row.scores)}});
  }

  auto& summaries = doc["summaries"] = nlohmann::json::array();
  for (const auto& s : r.summaries) {
    nlohmann::json j;
    j["k"] = s.k;
    j["clean"] = to_json(s.clean);
    j["attacked"] = s.attacked ? to_json(*s.attacked) : nlohmann::json();
    nlohmann::json delta = nlohmann::json::object();
    for (std::size_t m = 0; m < 4; ++m) delta[std::string(to_string(kAllMetrics[m]))] = detail::optional_json(s.delta_percent[m]);
    j["delta_percent"] = delta;
    if (s.asr) {
      nlohmann::json asr = nlohmann::json::object();
      for (std::size_t m = 0; m < 4; ++m) {
        asr[std::string(to_string(kAllMetrics[m]))] = {{"decreased", (*s.asr)[m].decreased},
                                                       {"zeroed", (*s.asr)[m].zeroed}};
      }
      j["asr"] = asr;
    } else {
      j["asr"] = nullptr;
    }
    j["retrieval_frequency"] = detail::optional_json(s.retrieval_frequency);
    j["paired_count"] = s.paired_count;
    j["clean_errors"] = s.clean_errors;
    j["attacked_errors"] = s.attacked_errors;
    summaries.push_back(std::move(j));
  }

  auto& audit = doc["injection_audit"] = nlohmann::json::array();
  for (const auto& a : r.audit) {
    nlohmann::json j{{"conversation_id", a.conversation_id},
                     {"record_id", a.record_id},
                     {"kind", to_string(a.kind)},
                     {"source", a.source},
                     {"text", a.text},
                     {"generator", to_string(a.generator)},
                     {"best_clean_similarity", a.best_clean_similarity},
                     {"target_similarity", detail::optional_json(a.target_similarity)},
                     {"rounds", a.rounds},
                     {"passed", a.passed}};
    j["calibration"] = a.calibration ? nlohmann::json{{"achieved_similarity", a.calibration->achieved_similarity},
                                                      {"attempts", a.calibration->attempts}}
                                     : nlohmann::json();
    audit.push_back(std::move(j));
  }

  doc["footprint"] = {{"clean_count", r.footprint.clean_count},
                      {"adversarial_count", r.footprint.adversarial_count},
                      {"count_ratio", r.footprint.count_ratio},
                      {"clean_chars", r.footprint.clean_chars},
                      {"adversarial_chars", r.footprint.adversarial_chars},
                      {"char_ratio", r.footprint.char_ratio}};
  doc["backend_errors"] = r.backend_errors;
  return doc;
}

inline nlohmann::json report_to_json(const ExperimentReport& r) {
  auto doc = report_body_json(r);
  doc["runtime"] = {{"wall_clock_seconds", r.wall_clock_seconds}};
  return doc;
}

namespace detail {

inline GeneratorKind parse_generator(std::string_view name) {
  for (auto g : {GeneratorKind::kLlm, GeneratorKind::kTemplateFallback, GeneratorKind::kProgrammatic}) {
    if (to_string(g) == name) return g;
  }
  throw Error(ErrorCode::kReportError, "unknown generator '" + std::string(name) + "'");
}

}  // namespace detail

inline ExperimentReport report_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kReportFormat) throw Error(ErrorCode::kReportError, "not a report");
    if (doc.at("version").get<int>() != kReportFormatVersion) {
      throw Error(ErrorCode::kReportError, "unsupported report version");
    }
    ExperimentReport r;
    r.config_hash = doc.at("config_hash").get<std::string>();
    r.config = doc.at("config");
    r.victim_prompt_template = doc.at("victim_prompt_template").get<std::string>();
    r.prompt_template_version = doc.at("prompt_template_version").get<int>();
    r.normalization = doc.at("normalization").get<std::string>();
    r.memory_writing = doc.at("memory_writing").get<std::string>();
    r.baseline = doc.at("baseline").get<std::string>();
    for (const auto& j : doc.at("rows")) {
      ReportRow row;
      row.conversation_id = j.at("conversation_id").get<std::string>();
      row.qid = j.at("qid").get<std::string>();
      row.category = parse_category(j.at("category").get<std::string>());
      row.k = j.at("k").get<std::size_t>();
      row.condition = parse_condition(j.at("condition").get<std::string>());
      row.gold_answer = j.at("gold_answer").get<std::string>();
      row.answer = j.at("answer").get<std::string>();
      row.error = detail::optional_from<std::string>(j, "error");
      row.retrieved_ids = j.at("retrieved_ids").get<std::vector<RecordId>>();
      row.adversarial_retrieved = j.at("adversarial_retrieved").get<bool>();
      row.scores = detail::scores_from_json(j.at("scores"));
      r.rows.push_back(std::move(row));
    }
    for (const auto& j : doc.at("summaries")) {
      KSummary s;
      s.k = j.at("k").get<std::size_t>();
      s.clean = detail::aggregate_from_json(j.at("clean"));
      if (!j.at("attacked").is_null()) s.attacked = detail::aggregate_from_json(j.at("attacked"));
      for (std::size_t m = 0; m < 4; ++m) {
        s.delta_percent[m] = detail::optional_from<double>(j.at("delta_percent"), to_string(kAllMetrics[m]).data());
      }
      if (!j.at("asr").is_null()) {
        std::array<AsrEntry, 4> table{};
        for (std::size_t m = 0; m < 4; ++m) {
          const auto& e = j.at("asr").at(std::string(to_string(kAllMetrics[m])));
          table[m] = {e.at("decreased").get<double>(), e.at("zeroed").get<double>()};
        }
        s.asr = table;
      }
      s.retrieval_frequency = detail::optional_from<double>(j, "retrieval_frequency");
      s.paired_count = j.at("paired_count").get<std::size_t>();
      s.clean_errors = j.at("clean_errors").get<std::size_t>();
      s.attacked_errors = j.at("attacked_errors").get<std::size_t>();
      r.summaries.push_back(std::move(s));
    }
    for (const auto& j : doc.at("injection_audit")) {
      AuditEntry a;
      a.conversation_id = j.at("conversation_id").get<std::string>();
      a.record_id = j.at("record_id").get<RecordId>();
      a.kind = parse_attack_kind(j.at("kind").get<std::string>());
      a.source = j.at("source").get<std::string>();
      a.text = j.at("text").get<std::string>();
      a.generator = detail::parse_generator(j.at("generator").get<std::string>());
      a.best_clean_similarity = j.at("best_clean_similarity").get<double>();
      a.target_similarity = detail::optional_from<double>(j, "target_similarity");
      if (!j.at("calibration").is_null()) {
        a.calibration = Calibration{j.at("calibration").at("achieved_similarity").get<double>(),
                                    j.at("calibration").at("attempts").get<std::size_t>()};
      }
      a.rounds = j.at("rounds").get<std::size_t>();
      a.passed = j.at("passed").get<bool>();
      r.audit.push_back(std::move(a));
    }
    const auto& fp = doc.at("footprint");
    r.footprint = {fp.at("clean_count").get<std::size_t>(),       fp.at("adversarial_count").get<std::size_t>(),
                   fp.at("count_ratio").get<double>(),            fp.at("clean_chars").get<std::size_t>(),
                   fp.at("adversarial_chars").get<std::size_t>(), fp.at("char_ratio").get<double>()};
    r.backend_errors = doc.at("backend_errors").get<std::size_t>();
    if (doc.contains("runtime")) r.wall_clock_seconds = doc.at("runtime").at("wall_clock_seconds").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kReportError, std::string("malformed report: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kReportError) throw;
    throw Error(ErrorCode::kReportError, e.what());
  }
}

inline ExperimentReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kReportError, "cannot open '" + path.string() + "'");
  try {
    return report_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kReportError, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

// ---- CSV ---------------------------------------------------------------------

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr std::string_view kCsvHeader =
    "conversation_id,qid,category,k,condition,f1,bleu1,rouge1_f,exact_match,adversarial_retrieved,retrieved_ids,"
    "error,answer,gold_answer";

inline std::string rows_to_csv(const std::vector<ReportRow>& rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    std::string ids;
    for (std::size_t i = 0; i < r.retrieved_ids.size(); ++i) {
      if (i) ids += ' ';
      ids += std::to_string(r.retrieved_ids[i]);
    }
    out += csv_field(r.conversation_id) + ',' + csv_field(r.qid) + ',' + std::string(to_string(r.category)) + ',' +
           std::to_string(r.k) + ',' + std::string(to_string(r.condition)) + ',' + format_double(r.scores.f1) + ',' +
           format_double(r.scores.bleu1) + ',' + format_double(r.scores.rouge1) + ',' +
           format_double(r.scores.exact_match) + ',' + (r.adversarial_retrieved ? "1" : "0") + ',' + ids + ',' +
           csv_field(r.error.value_or("")) + ',' + csv_field(r.answer) + ',' + csv_field(r.gold_answer) + '\n';
  }
  return out;
}

// ---- text tables ---------------------------------------------------------------

namespace detail {

inline std::string fixed(double v, int decimals) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

inline std::string table_line(std::string_view label, const Aggregate& agg, const std::optional<double>& delta_f1) {
  std::string line(label);
  if (line.size() < 10) line.append(10 - line.size(), ' ');
  for (Category c : kAllCategories) {
    const auto it = agg.per_category.find(c);
    if (it == agg.per_category.end()) {
      line += pad("-", 8) + pad("-", 8);
    } else {
      line += pad(fixed(100.0 * it->second.mean.f1, 2), 8) + pad(fixed(100.0 * it->second.mean.bleu1, 2), 8);
    }
  }
  line += pad(fixed(100.0 * agg.overall.mean.f1, 2), 8) + pad(fixed(100.0 * agg.overall.mean.bleu1, 2), 8);
  line += pad(delta_f1 ? fixed(*delta_f1, 2) : std::string("-"), 10);
  return line;
}

}  // namespace detail

/// Categories x (F1, BLEU-1) in percent, overall columns and the F1 change
/// relative to the clean baseline; then ASR and retrieval frequency.
inline std::string report_to_text(const ExperimentReport& r) {
  std::ostringstream out;
  out << "config " << r.config_hash << "  baseline: " << r.baseline << "\n";
  for (const auto& s : r.summaries) {
    out << "\nk = " << s.k << "\n";
    out << "          " << detail::pad("Multi-Hop", 16) << detail::pad("Single-Hop", 16) << detail::pad("Temporal", 16)
        << detail::pad("Open-Domain", 16) << detail::pad("Overall", 16) << detail::pad("Delta F1", 10) << "\n";
    out << "condition ";
    for (int i = 0; i < 5; ++i) out << detail::pad("F1", 8) << detail::pad("BLEU-1", 8);
    out << detail::pad("(%)", 10) << "\n";
    out << detail::table_line("clean", s.clean, 0.0) << "\n";
    if (s.attacked) out << detail::table_line("attacked", *s.attacked, s.delta_percent[0]) << "\n";
    if (s.asr) {
      out << "ASR (%)     " << detail::pad("decreased", 10) << detail::pad("zeroed", 10) << "\n";
      for (std::size_t m = 0; m < 4; ++m) {
        std::string name(to_string(kAllMetrics[m]));
        name.resize(12, ' ');
        out << name << detail::pad(detail::fixed((*s.asr)[m].decreased, 2), 10)
            << detail::pad(detail::fixed((*s.asr)[m].zeroed, 2), 10) << "\n";
      }
    }
    if (s.retrieval_frequency) {
      out << "adversarial retrieval frequency: " << detail::fixed(*s.retrieval_frequency, 2) << "%\n";
    }
    if (s.clean_errors + s.attacked_errors > 0) {
      out << "backend errors: clean " << s.clean_errors << ", attacked " << s.attacked_errors << "\n";
    }
  }
  if (r.footprint.adversarial_count > 0) {
    out << "\nadversarial footprint: " << r.footprint.adversarial_count << " of "
        << r.footprint.clean_count + r.footprint.adversarial_count << " records (count ratio "
        << detail::fixed(r.footprint.count_ratio, 4) << ", char ratio " << detail::fixed(r.footprint.char_ratio, 4)
        << " vs clean)\n";
  }
  return out.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kReportError, "cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw Error(ErrorCode::kReportError, "write to '" + path.string() + "' failed");
}

struct EmittedFiles {
  std::filesystem::path json;
  std::filesystem::path csv;
  std::filesystem::path text;
};

inline EmittedFiles emit_report(const ExperimentReport& report, const std::filesystem::path& output_dir) {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw Error(ErrorCode::kReportError, "cannot create '" + output_dir.string() + "': " + ec.message());
  EmittedFiles files{output_dir / "report.json", output_dir / "rows.csv", output_dir / "report.txt"};
  write_text_file(files.json, report_to_json(report).dump(2) + "\n");
  write_text_file(files.csv, rows_to_csv(report.rows));
  write_text_file(files.text, report_to_text(report));
  return files;
}

// ---- replay --------------------------------------------------------------------

namespace detail {

inline bool close(double a, double b) { return std::abs(a - b) <= 1e-9; }

inline void compare_aggregate(const Aggregate& want, const Aggregate& got, const std::string& where,
                              std::vector<std::string>& problems) {
  auto check = [&](const MetricMeans& w, const MetricMeans& g, const std::string& at) {
    if (w.count != g.count) problems.push_back(at + ": count " + std::to_string(g.count) + " vs " + std::to_string(w.count));
    for (Metric m : kAllMetrics) {
      if (!close(w.mean.get(m), g.mean.get(m))) {
        problems.push_back(at + "." + std::string(to_string(m)) + ": " + format_double(g.mean.get(m)) + " vs recomputed " +
                           format_double(w.mean.get(m)));
      }
    }
  };
  if (want.per_category.size() != got.per_category.size()) problems.push_back(where + ": category sets differ");
  for (const auto& [c, w] : want.per_category) {
    auto it = got.per_category.find(c);
    if (it == got.per_category.end()) {
      problems.push_back(where + ": missing category " + std::string(to_string(c)));
      continue;
    }
    check(w, it->second, where + "." + std::string(to_string(c)));
  }
  check(want.overall, got.overall, where + ".overall");
  check(want.category_weighted, got.category_weighted, where + ".category_weighted");
}

}  // namespace detail

/// Recomputes every summary from the report's rows; returns the mismatches.
inline std::vector<std::string> replay_report(const ExperimentReport& report) {
  std::vector<std::size_t> ks;
  for (const auto& s : report.summaries) ks.push_back(s.k);
  bool attacked = false;
  for (const auto& row : report.rows) attacked = attacked || row.condition == Condition::kAttacked;
  const auto recomputed = summarize(report.rows, ks, attacked);

  std::vector<std::string> problems;
  for (std::size_t i = 0; i < recomputed.size(); ++i) {
    const auto& want = recomputed[i];
    const auto& got = report.summaries[i];
    const std::string where = "k=" + std::to_string(want.k);
    detail::compare_aggregate(want.clean, got.clean, where + ".clean", problems);
    if (want.attacked.has_value() != got.attacked.has_value()) {
      problems.push_back(where + ": attacked aggregate presence differs");
    } else if (want.attacked) {
      detail::compare_aggregate(*want.attacked, *got.attacked, where + ".attacked", problems);
    }
    for (std::size_t m = 0; m < 4; ++m) {
      const auto& w = want.delta_percent[m];
      const auto& g = got.delta_percent[m];
      if (w.has_value() != g.has_value() || (w && !detail::close(*w, *g))) {
        problems.push_back(where + ".delta_percent." + std::string(to_string(kAllMetrics[m])) + " differs");
      }
    }
    if (want.asr.has_value() != got.asr.has_value()) {
      problems.push_back(where + ": ASR presence differs");
    } else if (want.asr) {
      for (std::size_t m = 0; m < 4; ++m) {
        if (!detail::close((*want.asr)[m].decreased, (*got.asr)[m].decreased) ||
            !detail::close((*want.asr)[m].zeroed, (*got.asr)[m].zeroed)) {
          problems.push_back(where + ".asr." + std::string(to_string(kAllMetrics[m])) + " differs");
        }
      }
    }
    if (want.retrieval_frequency.has_value() != got.retrieval_frequency.has_value() ||
        (want.retrieval_frequency && !detail::close(*want.retrieval_frequency, *got.retrieval_frequency))) {
      problems.push_back(where + ".retrieval_frequency differs");
    }
    if (want.paired_count != got.paired_count || want.clean_errors != got.clean_errors ||
        want.attacked_errors != got.attacked_errors) {
      problems.push_back(where + ": counts differ");
    }
  }
  return problems;
}

}  // namespace memattack
