// memattack: run memory-injection experiments, validate configs, replay reports.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "memattack/memattack.hpp"

namespace {

using namespace memattack;

std::vector<std::size_t> parse_k_list(const std::string& text) {
  std::vector<std::size_t> ks;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string part(trim(std::string_view(text).substr(start, comma - start)));
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(ErrorCode::kConfigError, "--k expects a comma-separated list of positive integers, got '" + text + "'");
    }
    ks.push_back(std::stoull(part));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return ks;
}

void apply_backend(RunConfig& config, const std::string& backend) {
  const BackendMode mode = parse_backend_mode(backend);
  config.embedder.mode = mode;
  config.victim.mode = mode;
  config.generation.mode = mode == BackendMode::kHttp ? GenerationMode::kLlm : GenerationMode::kTemplate;
}

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string k_list;
  std::string attack;
  std::string backend;
  std::string out;
  std::optional<std::size_t> workers;
  bool quiet = false;
};

RunConfig resolve_config(const RunOptions& opt) {
  RunConfig config = opt.config_path.empty() ? RunConfig{} : load_config(opt.config_path);
  if (opt.seed) config.master_seed = *opt.seed;
  if (!opt.k_list.empty()) config.k_values = parse_k_list(opt.k_list);
  if (!opt.attack.empty()) config.attack = parse_attack_spec(opt.attack, config.attack.value_or(AttackPlan{}));
  if (!opt.backend.empty()) apply_backend(config, opt.backend);
  if (!opt.out.empty()) config.output_dir = opt.out;
  if (opt.workers) config.workers = *opt.workers;
  apply_env_overrides(config);
  config.validate();
  return config;
}

int exit_code_for(const Error& e) { return e.code() == ErrorCode::kConfigError ? 2 : 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memory-injection attack harness for memory-augmented LLM agents"};
  app.require_subcommand(1);

  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "Run an experiment and write report.json, rows.csv and report.txt");
  run->add_option("--config", run_opt.config_path, "JSON run configuration");
  run->add_option("--seed", run_opt.seed, "Master seed");
  run->add_option("--k", run_opt.k_list, "Comma-separated retrieval depths, e.g. 10,20,30");
  run->add_option("--attack", run_opt.attack, "Attack kind, ensemble:KIND+KIND, or none");
  run->add_option("--backend", run_opt.backend, "mock or http")->check(CLI::IsMember({"mock", "http"}));
  run->add_option("--out", run_opt.out, "Output directory");
  run->add_option("--workers", run_opt.workers, "Worker threads");
  run->add_flag("--quiet", run_opt.quiet, "Do not print the result table");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate-config", "Check a configuration and print its canonical form");
  validate->add_option("config", validate_path, "JSON run configuration")->required();

  std::string replay_path;
  auto* replay = app.add_subcommand("replay-report", "Recompute every aggregate of a report from its rows");
  replay->add_option("report", replay_path, "report.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const RunConfig config = resolve_config(run_opt);
      if (config.embedder.mode == BackendMode::kHttp || config.victim.mode == BackendMode::kHttp) {
        Log::set_min_level(LogLevel::kInfo);
      }
      const auto report = run_experiment(config);
      const auto files = emit_report(report, config.output_dir);
      if (!run_opt.quiet) std::cout << report_to_text(report);
      std::cout << "wrote " << files.json.string() << ", " << files.csv.string() << ", " << files.text.string()
                << " (" << report.wall_clock_seconds << " s)\n";
      return 0;
    }
    if (*validate) {
      const RunConfig config = load_config(validate_path);
      std::cout << "config " << config_hash(config) << " is valid\n" << canonical_config_json(config).dump(2) << "\n";
      return 0;
    }
    if (*replay) {
      const auto report = load_report(replay_path);
      const auto problems = replay_report(report);
      if (problems.empty()) {
        std::cout << "report " << report.config_hash << ": " << report.rows.size() << " rows, " << report.summaries.size()
                  << " summaries; all aggregates match\n";
        return 0;
      }
      for (const auto& p : problems) std::cout << "mismatch: " << p << "\n";
      return 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
