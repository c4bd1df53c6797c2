// Command-line front end: generate | evaluate | ablate | stats.
// `--backend mock` makes every subcommand runnable offline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "refgpt/http_transport.hpp"
#include "refgpt/refgpt.hpp"

namespace {

using namespace refgpt;

struct CliOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string backend;
  std::string scenario;
  std::string language;
  std::string out;
  bool drop_invalid = false;
  bool strict = false;
  std::optional<int> max_in_flight;
  std::optional<int> rpm;
  bool verbose = false;
};

void add_common_flags(CLI::App* cmd, CliOverrides& o, bool config_required) {
  auto* config = cmd->add_option("--config", o.config_path, "Run config file (JSON)");
  if (config_required) config->required();
  cmd->add_option("--seed", o.seed, "Global RNG seed (overrides config)");
  cmd->add_option("--backend", o.backend, "Backend kind: mock | openai_compatible")
      ->check(CLI::IsMember({"mock", "openai_compatible"}));
  cmd->add_option("--scenario", o.scenario, "Scenario: fact | code-ds | code-cr | code-bg")
      ->check(CLI::IsMember({"fact", "code-ds", "code-cr", "code-bg"}));
  cmd->add_option("--language", o.language, "Dialogue language: en | zh")
      ->check(CLI::IsMember({"en", "zh"}));
  cmd->add_option("--out", o.out, "Output path (overrides config)");
  cmd->add_flag("--drop-invalid", o.drop_invalid, "Drop records that fail template validation");
  cmd->add_flag("--strict", o.strict, "Strict parsing (no lenient recovery)");
  cmd->add_option("--max-in-flight", o.max_in_flight, "Max concurrent backend requests");
  cmd->add_option("--rpm", o.rpm, "Backend requests per minute");
  cmd->add_flag("--verbose", o.verbose, "JSON line logging");
}

RunConfig effective_config(const CliOverrides& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.backend.empty()) cfg.backend.kind = backend_kind_from_string(o.backend);
  if (!o.scenario.empty()) {
    cfg.scenario = scenario_from_string(o.scenario);
    cfg.references.default_domain = cfg.scenario == Scenario::fact ? DomainTag::fact : DomainTag::code;
  }
  if (!o.language.empty()) cfg.language = language_from_string(o.language);
  if (!o.out.empty()) cfg.output.path = o.out;
  if (o.drop_invalid) cfg.output.drop_invalid = true;
  if (o.strict) cfg.strict_parse = true;
  if (o.max_in_flight) cfg.backend.max_in_flight = *o.max_in_flight;
  if (o.rpm) cfg.backend.requests_per_minute = *o.rpm;
  return cfg;
}

ScenarioRegistry registry_for(const RunConfig& cfg) {
  return cfg.prompts_dir ? ScenarioRegistry::load(*cfg.prompts_dir) : ScenarioRegistry::builtin();
}

void wire_debug_log(ChatClient& client, const Logger& log, bool verbose) {
  if (!verbose) return;
  client.set_debug_log([&log](std::string_view event, std::string_view body) {
    log.event(event, {{"body", std::string(body)}});
  });
}

std::string percent(double fraction) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
  return buf;
}

std::string percent_or_dash(const std::optional<double>& fraction) {
  return fraction ? percent(*fraction) + "%" : std::string("-");
}

void print_summary(const RunSummary& s) {
  std::cout << "references loaded: " << s.references_loaded << " (skipped " << s.load_skipped << ")\n"
            << "filtered out:      " << s.filtered_out << "\n"
            << "generated:         " << s.generated << " (parse failures " << s.parse_failures
            << ", backend failures " << s.backend_failures << ")\n";
  if (s.written > 0 || s.dropped_invalid > 0)
    std::cout << "written:           " << s.written << " (dropped invalid " << s.dropped_invalid << ")\n";
  if (s.trailing_commentary > 0)
    std::cout << "note:              " << s.trailing_commentary
              << " completion(s) had commentary after </chat>, discarded\n";
  if (s.success) {
    const SuccessRate& r = *s.success;
    std::cout << "success rate:      overall " << percent(r.overall()) << "% | w/ </chat> "
              << percent_or_dash(r.with_end_marker()) << " (n=" << r.n_with << ") | w/o </chat> "
              << percent_or_dash(r.without_end_marker()) << " (n=" << r.n_without << ")\n";
  }
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
}

nlohmann::json summary_json(const RunSummary& s) {
  nlohmann::json j{{"references_loaded", s.references_loaded},
                   {"load_skipped", s.load_skipped},
                   {"filtered_out", s.filtered_out},
                   {"attempted", s.attempted},
                   {"generated", s.generated},
                   {"parse_failures", s.parse_failures},
                   {"backend_failures", s.backend_failures},
                   {"written", s.written},
                   {"dropped_invalid", s.dropped_invalid},
                   {"trailing_commentary", s.trailing_commentary},
                   {"warnings", s.warnings}};
  if (s.success) {
    const SuccessRate& r = *s.success;
    j["success"] = {{"overall", r.overall()},
                    {"n_total", r.n_total},
                    {"with_end_marker", r.with_end_marker() ? nlohmann::json(*r.with_end_marker())
                                                            : nlohmann::json()},
                    {"n_with", r.n_with},
                    {"without_end_marker", r.without_end_marker()
                                               ? nlohmann::json(*r.without_end_marker())
                                               : nlohmann::json()},
                    {"n_without", r.n_without}};
  }
  return j;
}

int cmd_generate(const CliOverrides& o) {
  RunConfig cfg = effective_config(o);
  Logger log{o.verbose};
  ScenarioRegistry registry = registry_for(cfg);
  ChatClient client = make_chat_client(cfg.backend);
  wire_debug_log(client, log, o.verbose);
  GenerateOutcome outcome = run_generate(cfg, client, registry, o.verbose ? &log : nullptr);
  print_summary(outcome.summary);
  if (!cfg.output.path.empty()) {
    std::ofstream out(cfg.output.path.string() + ".summary.json", std::ios::trunc);
    out << summary_json(outcome.summary).dump(2) << '\n';
  }
  return outcome.summary.fatal ? 1 : 0;
}

int cmd_evaluate(const CliOverrides& o, const std::string& records_path) {
  RunConfig cfg = effective_config(o);
  Logger log{o.verbose};
  std::vector<DatasetRecord> records = load_records(records_path);
  if (records.empty()) throw Error("records file is empty: " + records_path);

  LoadOptions opts;
  opts.default_language = cfg.references.default_language;
  opts.default_domain = cfg.references.default_domain;
  if (cfg.references.path.empty()) throw ConfigError("evaluate needs references.path in the config");
  LoadResult corpus_load = load_references(cfg.references.path, cfg.references.format, opts);
  std::map<std::string, Reference> corpus;
  for (auto& ref : corpus_load.references) corpus.emplace(ref.id, std::move(ref));

  std::optional<ChatClient> judge;
  ChatClient* judge_ptr = nullptr;
  if (cfg.backend.kind == BackendKind::openai_compatible) {
    judge.emplace(cfg.backend, make_http_transport(cfg.backend));
    wire_debug_log(*judge, log, o.verbose);
    judge_ptr = &*judge;
  }
  EvalOutcome outcome = evaluate_records(records, corpus, judge_ptr, o.verbose ? &log : nullptr);

  std::filesystem::path verdicts_path =
      o.out.empty() ? std::filesystem::path(records_path + ".verdicts.jsonl") : std::filesystem::path(o.out);
  std::ofstream out(verdicts_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write verdicts: " + verdicts_path.string());
  for (const auto& v : outcome.verdicts) {
    nlohmann::json j{{"record_id", v.record_id},
                     {"explanation", v.explanation},
                     {"truthful", v.truthful ? nlohmann::json(*v.truthful) : nlohmann::json()},
                     {"judge_model", v.judge_model}};
    out << j.dump() << '\n';
  }

  nlohmann::json summary{
      {"n_records", outcome.verdicts.size()},
      {"accuracy_count_null_as_fail", outcome.count_as_fail.accuracy},
      {"accuracy_exclude_null", outcome.exclude.accuracy},
      {"n_true", outcome.count_as_fail.n_true},
      {"n_null", outcome.count_as_fail.n_null}};
  std::ofstream sum(verdicts_path.string() + ".summary.json", std::ios::trunc);
  sum << summary.dump(2) << '\n';

  {
    std::ifstream records_in(records_path, std::ios::binary);
    std::ostringstream buf;
    buf << records_in.rdbuf();
    nlohmann::json manifest{{"config", to_json(cfg)},
                            {"inputs", {{"records", sha256_hex(buf.str())}}},
                            {"judge_model", judge_ptr ? cfg.backend.model
                                                      : std::string(kScriptedJudgeModel)}};
    std::ofstream mf(verdicts_path.string() + ".manifest.json", std::ios::trunc);
    mf << manifest.dump(2) << '\n';
  }

  std::cout << "records evaluated: " << outcome.verdicts.size() << "\n"
            << "truthfulness:      " << percent(outcome.count_as_fail.accuracy)
            << "% (nulls as fail) | " << percent(outcome.exclude.accuracy) << "% (nulls excluded, "
            << outcome.count_as_fail.n_null << " null)\n"
            << "verdicts:          " << verdicts_path.string() << "\n";
  return 0;
}

int cmd_ablate(const CliOverrides& o, const std::string& kind_str) {
  RunConfig cfg = effective_config(o);
  Logger log{o.verbose};
  ScenarioRegistry registry = registry_for(cfg);
  ChatClient client = make_chat_client(cfg.backend);
  wire_debug_log(client, log, o.verbose);
  AblationKind kind = ablation_kind_from_string(kind_str);
  AblationTable table = run_ablate(cfg, kind, client, registry, o.verbose ? &log : nullptr);

  if (kind == AblationKind::structure) {
    std::cout << "word count | turns | w/ </chat> | w/o </chat> | n\n";
    for (const auto& cell : table.cells) {
      std::printf("%10d | %5d | %10s | %11s | %zu (w/ %zu, w/o %zu)\n", *cell.word_count, *cell.turns,
                  percent_or_dash(cell.success_with_end).c_str(),
                  percent_or_dash(cell.success_without_end).c_str(), cell.n_records, cell.n_with_end,
                  cell.n_without_end);
    }
  } else {
    std::cout << (kind == AblationKind::ref_length ? "ref. ratio" : "noise level")
              << " | truthfulness | n\n";
    for (const auto& cell : table.cells)
      std::printf("%10s | %12s | %zu\n", cell.label.c_str(), percent_or_dash(cell.truthfulness).c_str(),
                  cell.n_records);
  }
  if (!o.out.empty()) {  // the table goes only where --out explicitly points
    std::ofstream out(o.out, std::ios::trunc);
    if (!out) throw IoError("cannot write ablation table: " + o.out);
    out << to_json(table).dump(2) << '\n';

    LoadOptions opts;
    opts.default_language = cfg.references.default_language;
    opts.default_domain = cfg.references.default_domain;
    auto loaded = load_references(cfg.references.path, cfg.references.format, opts);
    write_manifest(cfg, loaded.references, registry, o.out);
    std::cout << "table written to " << o.out << "\n";
  }
  return 0;
}

int cmd_stats(const std::string& records_path, const std::string& strategy_str,
              const std::string& out_path) {
  std::vector<DatasetRecord> records = load_records(records_path);
  if (records.empty()) throw Error("records file is empty: " + records_path);
  CountingStrategy strategy = counting_strategy_from_string(strategy_str);
  DatasetStats stats = compute_stats(records, strategy);

  std::cout << "records:            " << stats.n_records << "\n";
  std::printf("avg user length:    %.1f %s\n", stats.avg_user_len, to_string(strategy).c_str());
  std::printf("avg assistant len:  %.1f %s\n", stats.avg_assistant_len, to_string(strategy).c_str());
  std::cout << "turns histogram:   ";
  for (const auto& [turns, count] : stats.turn_histogram)
    std::cout << " " << turns << "x" << count;
  std::cout << "\nparse success:      overall " << percent(stats.parse_success.overall())
            << "% | w/ </chat> " << percent_or_dash(stats.parse_success.with_end_marker())
            << " | w/o </chat> " << percent_or_dash(stats.parse_success.without_end_marker()) << "\n";

  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [turns, count] : stats.turn_histogram) hist[std::to_string(turns)] = count;
  nlohmann::json j{{"n_records", stats.n_records},
                   {"avg_user_len", stats.avg_user_len},
                   {"avg_assistant_len", stats.avg_assistant_len},
                   {"turn_histogram", hist},
                   {"counting_strategy", to_string(strategy)},
                   {"parse_success",
                    {{"overall", stats.parse_success.overall()},
                     {"n_with", stats.parse_success.n_with},
                     {"n_without", stats.parse_success.n_without}}}};
  std::string path = out_path.empty() ? records_path + ".stats.json" : out_path;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write stats: " + path);
  out << j.dump(2) << '\n';
  std::cout << "summary written to " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference-grounded multi-turn dialogue synthesis"};
  app.require_subcommand(1);

  CliOverrides gen_opts, eval_opts, ablate_opts;
  std::string records_path, ablate_kind, stats_records, stats_strategy = "words", stats_out;

  CLI::App* generate = app.add_subcommand("generate", "Generate dialogues from references");
  add_common_flags(generate, gen_opts, true);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Judge records against their references");
  add_common_flags(evaluate, eval_opts, true);
  evaluate->add_option("records", records_path, "Records JSONL produced by generate")->required();

  CLI::App* ablate = app.add_subcommand("ablate", "Run an ablation sweep");
  add_common_flags(ablate, ablate_opts, true);
  ablate->add_option("kind", ablate_kind, "ref-length | noise | structure")
      ->required()
      ->check(CLI::IsMember({"ref-length", "ref_length", "noise", "structure"}));

  CLI::App* stats = app.add_subcommand("stats", "Dataset statistics for a records file");
  stats->add_option("records", stats_records, "Records JSONL")->required();
  stats->add_option("--strategy", stats_strategy, "words | chars")
      ->check(CLI::IsMember({"words", "chars"}));
  stats->add_option("--out", stats_out, "Write the JSON summary here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(gen_opts);
    if (evaluate->parsed()) return cmd_evaluate(eval_opts, records_path);
    if (ablate->parsed()) return cmd_ablate(ablate_opts, ablate_kind);
    if (stats->parsed()) return cmd_stats(stats_records, stats_strategy, stats_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
