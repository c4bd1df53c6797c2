#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "refgpt/client.hpp"
#include "refgpt/config.hpp"
#include "refgpt/eval.hpp"
#include "refgpt/hash.hpp"
#include "refgpt/parser.hpp"
#include "refgpt/plan.hpp"
#include "refgpt/postprocess.hpp"
#include "refgpt/prompt.hpp"
#include "refgpt/reference.hpp"
#include "refgpt/stats.hpp"

namespace refgpt {

// Minimal run logger: human-readable lines by default, one JSON object per
// line in verbose mode.
struct Logger {
  bool json_lines = false;
  std::ostream* sink = nullptr;  // nullptr: stderr

  void event(std::string_view name,
             std::initializer_list<std::pair<std::string, std::string>> fields = {}) const {
    std::ostream& out = sink ? *sink : std::cerr;
    if (json_lines) {
      nlohmann::json j{{"event", std::string(name)}};
      for (const auto& [k, v] : fields) j[k] = v;
      out << j.dump() << std::endl;
    } else {
      out << name;
      for (const auto& [k, v] : fields) out << " " << k << "=" << v;
      out << std::endl;
    }
  }
};

struct RunSummary {
  std::size_t references_loaded = 0;
  std::size_t load_skipped = 0;
  std::size_t filtered_out = 0;
  std::size_t attempted = 0;
  std::size_t generated = 0;
  std::size_t parse_failures = 0;
  std::size_t backend_failures = 0;
  std::size_t written = 0;
  std::size_t dropped_invalid = 0;
  std::size_t trailing_commentary = 0;  // completions with text after </chat>, discarded
  std::optional<SuccessRate> success;
  std::vector<std::string> warnings;

  bool fatal = false;  // any backend/IO condition that should fail the run
};

struct GenerateOutcome {
  RunSummary summary;
  std::vector<DatasetRecord> records;          // sequence order
  std::map<std::string, Reference> references;  // as used (post ablation transforms)
};

namespace detail {

inline std::string rfc3339_utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

inline std::string record_id_for(std::uint64_t sequence) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "r%06llu", static_cast<unsigned long long>(sequence));
  return buf;
}

// Corpus fingerprint for the run manifest: order-independent of filesystem
// iteration because references arrive sorted from the loader.
inline std::string corpus_hash(const std::vector<Reference>& refs) {
  Sha256 h;
  for (const auto& ref : refs) {
    h.update(ref.id);
    h.update(std::string_view("\0", 1));
    h.update(content_hash(ref.text));
    h.update("\n");
  }
  return h.hex_digest();
}

}  // namespace detail

// Writes "<output>.manifest.json": the effective config, the seed, and
// content hashes of every input. Replaying the manifest's config against the
// same inputs reproduces a mock run bit for bit.
inline void write_manifest(const RunConfig& config, const std::vector<Reference>& loaded_refs,
                           const ScenarioRegistry& registry, const std::filesystem::path& out_path) {
  nlohmann::json manifest;
  manifest["config"] = to_json(config);
  manifest["seed"] = config.seed ? *config.seed : 0;
  nlohmann::json prompt_hashes = nlohmann::json::object();
  for (Scenario s : {Scenario::fact, Scenario::code_ds, Scenario::code_cr, Scenario::code_bg})
    for (Language l : {Language::en, Language::zh})
      if (const std::string* text = registry.find(s, l))
        prompt_hashes[to_string(s) + "_" + to_string(l)] = content_hash(*text);
  manifest["inputs"] = {{"references", detail::corpus_hash(loaded_refs)},
                        {"prompt_templates", prompt_hashes}};
  std::filesystem::path path = out_path;
  path += ".manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << manifest.dump(2) << '\n';
}

// End-to-end generation: load references, apply ablation transforms, then per
// reference sample a plan, filter by length, render, prompt, complete, parse,
// validate, post-process, and emit in input order. Fan-out is bounded by
// backend.max_in_flight; output order never depends on completion order.
inline GenerateOutcome run_generate(const RunConfig& config, ChatClient& client,
                                    const ScenarioRegistry& registry, const Logger* log = nullptr) {
  validate_run_config(config);
  GenerateOutcome outcome;
  RunSummary& summary = outcome.summary;

  LoadOptions load_opts;
  load_opts.default_language = config.references.default_language;
  load_opts.default_domain = config.references.default_domain;
  load_opts.strict = config.references.strict;
  LoadResult loaded = load_references(config.references.path, config.references.format, load_opts);
  summary.references_loaded = loaded.references.size();
  summary.load_skipped = loaded.skipped;
  summary.warnings = loaded.warnings;
  if (log)
    log->event("references_loaded", {{"count", std::to_string(loaded.references.size())},
                                     {"skipped", std::to_string(loaded.skipped)}});

  const std::uint64_t seed = *config.seed;

  // Ablation transforms, applied before anything is sampled.
  std::vector<Reference> refs;
  refs.reserve(loaded.references.size());
  for (std::size_t i = 0; i < loaded.references.size(); ++i) {
    Reference ref = loaded.references[i];
    if (config.ablation.truncation_ratio < 1.0)
      ref = truncate_reference(ref, config.ablation.truncation_ratio);
    if (config.ablation.noise_level > 0.0) {
      NoiseSpec spec;
      spec.level = config.ablation.noise_level;
      spec.tag_vocabulary = config.ablation.noise_tags;
      spec.seed = derive_seed(config.ablation.noise_seed, i);
      ref = inject_noise(ref, spec);
    }
    refs.push_back(std::move(ref));
  }

  struct Job {
    std::uint64_t sequence;
    const Reference* ref;
    DialoguePlan plan;
    std::uint64_t plan_seed;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    std::uint64_t plan_seed = derive_seed(seed, i);
    DialoguePlan plan = sample_plan(config.sampling, config.scenario, config.language, plan_seed);
    if (config.length_filter.enabled &&
        !filter_by_length(refs[i], plan, config.length_filter.threshold, config.length_filter.roles)) {
      ++summary.filtered_out;
      continue;
    }
    jobs.push_back(Job{jobs.size(), &refs[i], std::move(plan), plan_seed});
  }
  summary.attempted = jobs.size();
  if (log) log->event("jobs_ready", {{"count", std::to_string(jobs.size())},
                                     {"filtered_out", std::to_string(summary.filtered_out)}});

  const MarkerLexicon lexicon =
      config.markers == MarkerChoice::canonical ? canonical_markers() : human_markers();
  const bool deterministic = config.backend.kind == BackendKind::mock;
  const std::string timestamp =
      deterministic ? "1970-01-01T00:00:00Z" : detail::rfc3339_utc_now();

  std::optional<OrderedEmitter> emitter;
  if (!config.output.path.empty()) emitter.emplace(config.output.path, config.output.drop_invalid);

  std::mutex collect_mutex;
  std::map<std::uint64_t, DatasetRecord> collected;
  std::vector<ValidationReport> reports;
  std::atomic<std::size_t> next_job{0};
  std::atomic<std::size_t> parse_failures{0};
  std::atomic<std::size_t> backend_failures{0};
  std::atomic<std::size_t> trailing_commentary{0};

  auto worker = [&]() {
    while (true) {
      std::size_t j = next_job.fetch_add(1);
      if (j >= jobs.size()) break;
      const Job& job = jobs[j];
      try {
        std::string template_text = render_template(job.plan, lexicon);
        PromptBundle prompt =
            registry.build_generation_prompt(*job.ref, job.plan, template_text, config.persona);
        CompletionResult completion = client.complete(prompt);
        if (!completion.ok()) {
          ++backend_failures;
          std::lock_guard lock(collect_mutex);
          if (emitter)
            emitter->push_rejected(job.sequence, {{"sequence", job.sequence},
                                                  {"reference_id", job.ref->id},
                                                  {"error", completion.error_message}});
          continue;
        }
        ParseResult parsed = parse_dialogue(completion.text, !config.strict_parse,
                                            counting_strategy_for(config.language));
        if (!parsed.ok()) {
          ++parse_failures;
          std::lock_guard lock(collect_mutex);
          reports.push_back(failed_validation(*parsed.error));
          if (emitter)
            emitter->push_rejected(job.sequence,
                                   {{"sequence", job.sequence},
                                    {"reference_id", job.ref->id},
                                    {"error", to_string(parsed.error->reason) + ": " + parsed.error->message},
                                    {"raw", completion.text}});
          continue;
        }

        ValidationReport report = validate(*parsed.dialogue, job.plan, config.word_tolerance);
        if (parsed.dialogue->trailing_text_discarded) ++trailing_commentary;
        ParsedDialogue dialogue = std::move(*parsed.dialogue);
        if (config.scenario == Scenario::code_ds)
          dialogue = attach_reference_code(dialogue, *job.ref).dialogue;

        DatasetRecord record;
        record.record_id = detail::record_id_for(job.sequence);
        record.sequence = job.sequence;
        record.scenario = config.scenario;
        record.language = config.language;
        record.reference_id = job.ref->id;
        record.reference_text_hash = content_hash(job.ref->text);
        record.plan = job.plan;
        record.turns = std::move(dialogue.turns);
        record.generation.backend = to_string(config.backend.kind);
        record.generation.model = config.backend.model;
        record.generation.seed = job.plan_seed;
        record.generation.timestamp = timestamp;
        record.generation.attempt_count = completion.attempt_count;
        record.validation = report;

        std::lock_guard lock(collect_mutex);
        reports.push_back(record.validation);
        collected[record.sequence] = record;
        if (emitter) emitter->push(std::move(record));
      } catch (const std::exception& e) {
        ++backend_failures;
        std::lock_guard lock(collect_mutex);
        summary.warnings.push_back(std::string("record failed: ") + e.what());
        if (emitter)
          emitter->push_rejected(job.sequence, {{"sequence", job.sequence},
                                                {"reference_id", job.ref->id},
                                                {"error", e.what()}});
      }
    }
  };

  std::size_t n_threads = std::min<std::size_t>(
      jobs.size(), static_cast<std::size_t>(std::max(1, config.backend.max_in_flight)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  summary.parse_failures = parse_failures.load();
  summary.backend_failures = backend_failures.load();
  summary.trailing_commentary = trailing_commentary.load();
  summary.generated = collected.size();
  if (!reports.empty()) summary.success = success_rate(reports);
  summary.fatal = summary.backend_failures > 0 && summary.generated == 0 && summary.attempted > 0;

  if (emitter) {
    EmitSummary emitted = emitter->finish();
    summary.written = emitted.written;
    summary.dropped_invalid = emitted.dropped_invalid;
    write_manifest(config, loaded.references, registry, config.output.path);
  }

  outcome.records.reserve(collected.size());
  for (auto& [sequence, record] : collected) outcome.records.push_back(std::move(record));
  for (auto& ref : refs) outcome.references.emplace(ref.id, std::move(ref));

  if (log)
    log->event("generate_done", {{"generated", std::to_string(summary.generated)},
                                 {"parse_failures", std::to_string(summary.parse_failures)},
                                 {"backend_failures", std::to_string(summary.backend_failures)}});
  return outcome;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalOutcome {
  std::vector<EvalVerdict> verdicts;
  AccuracyReport count_as_fail;
  AccuracyReport exclude;
};

// Judges every record against its reference. With a null client the scripted
// containment judge runs locally; otherwise each record costs one judge call.
inline EvalOutcome evaluate_records(const std::vector<DatasetRecord>& records,
                                    const std::map<std::string, Reference>& corpus,
                                    ChatClient* judge_client = nullptr,
                                    const Logger* log = nullptr) {
  if (records.empty()) throw Error("no records to evaluate");
  EvalOutcome outcome;
  outcome.verdicts.reserve(records.size());
  for (const auto& record : records) {
    auto it = corpus.find(record.reference_id);
    if (it == corpus.end())
      throw Error("record " + record.record_id + " references unknown id: " + record.reference_id);
    const Reference& ref = it->second;
    EvalVerdict verdict;
    if (judge_client) {
      CompletionResult reply = judge_client->complete(build_judge_prompt(record.turns, ref));
      if (reply.ok()) {
        verdict = parse_verdict(reply.text);
      }  // !ok leaves truthful = nullopt: an unanswerable judge call is a null verdict
      verdict.judge_model = judge_client->config().model;
    } else {
      verdict = parse_verdict(scripted_judge_reply(record.turns, ref));
      verdict.judge_model = std::string(kScriptedJudgeModel);
    }
    verdict.record_id = record.record_id;
    outcome.verdicts.push_back(std::move(verdict));
  }
  outcome.count_as_fail = accuracy(outcome.verdicts, NullPolicy::count_as_fail);
  outcome.exclude = accuracy(outcome.verdicts, NullPolicy::exclude);
  if (log)
    log->event("evaluate_done", {{"n", std::to_string(outcome.verdicts.size())},
                                 {"accuracy", std::to_string(outcome.count_as_fail.accuracy)}});
  return outcome;
}

// ---------------------------------------------------------------------------
// Ablation sweeps
// ---------------------------------------------------------------------------

enum class AblationKind { ref_length, noise, structure };

inline AblationKind ablation_kind_from_string(std::string_view s) {
  if (s == "ref_length" || s == "ref-length") return AblationKind::ref_length;
  if (s == "noise") return AblationKind::noise;
  if (s == "structure") return AblationKind::structure;
  throw ConfigError("unknown ablation kind: " + std::string(s));
}

struct AblationCell {
  std::string label;
  std::size_t n_records = 0;
  // ref_length / noise sweeps:
  std::optional<double> truthfulness;
  // structure sweep:
  std::optional<int> word_count;
  std::optional<int> turns;
  std::optional<double> success_with_end;
  std::optional<double> success_without_end;
  std::size_t n_with_end = 0;
  std::size_t n_without_end = 0;
};

struct AblationTable {
  AblationKind kind = AblationKind::ref_length;
  std::vector<AblationCell> cells;
};

// Sweeps follow the canonical grids: reference length 100/50/25 percent,
// noise 0/10/20 percent, and dialogue structure word count {100, 300, 600}
// by turns {3, 5} with success rates split by end-marker presence.
inline AblationTable run_ablate(const RunConfig& base_config, AblationKind kind, ChatClient& client,
                                const ScenarioRegistry& registry, const Logger* log = nullptr) {
  AblationTable table;
  table.kind = kind;

  auto generate_cell = [&](const RunConfig& cfg) {
    RunConfig quiet = cfg;
    quiet.output.path.clear();  // cells stay in memory; only the table is written
    return run_generate(quiet, client, registry, log);
  };

  if (kind == AblationKind::ref_length || kind == AblationKind::noise) {
    const std::vector<double> values =
        kind == AblationKind::ref_length ? std::vector<double>{1.0, 0.5, 0.25}
                                         : std::vector<double>{0.0, 0.10, 0.20};
    for (double value : values) {
      RunConfig cfg = base_config;
      if (kind == AblationKind::ref_length) {
        cfg.ablation.truncation_ratio = value;
        // Truncated references get proportionally shorter; the length filter
        // would empty the sweep, which is the point of the experiment.
        cfg.length_filter.enabled = value >= 1.0;
      } else {
        cfg.ablation.noise_level = value;
      }
      GenerateOutcome outcome = generate_cell(cfg);
      AblationCell cell;
      char label[32];
      std::snprintf(label, sizeof(label), "%.0f%%", value * 100.0);
      cell.label = label;
      cell.n_records = outcome.records.size();
      if (!outcome.records.empty()) {
        ChatClient* judge = cfg.backend.kind == BackendKind::mock ? nullptr : &client;
        EvalOutcome eval = evaluate_records(outcome.records, outcome.references, judge, log);
        cell.truthfulness = eval.count_as_fail.accuracy;
      }
      table.cells.push_back(std::move(cell));
    }
    return table;
  }

  for (int word_count : {100, 300, 600}) {
    for (int turns : {3, 5}) {
      RunConfig cfg = base_config;
      cfg.sampling.assistant_mu = word_count;
      cfg.sampling.assistant_sigma = 0.0;
      cfg.sampling.max_words = std::max(cfg.sampling.max_words, word_count);
      cfg.sampling.turn_weights = {{turns, 1.0}};
      GenerateOutcome outcome = generate_cell(cfg);
      AblationCell cell;
      cell.label = std::to_string(word_count) + "w/" + std::to_string(turns) + "t";
      cell.word_count = word_count;
      cell.turns = turns;
      cell.n_records = outcome.records.size();
      if (outcome.summary.success) {
        const SuccessRate& rate = *outcome.summary.success;
        cell.success_with_end = rate.with_end_marker();
        cell.success_without_end = rate.without_end_marker();
        cell.n_with_end = rate.n_with;
        cell.n_without_end = rate.n_without;
      }
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

inline nlohmann::json to_json(const AblationTable& table) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : table.cells) {
    nlohmann::json j{{"label", cell.label}, {"n_records", cell.n_records}};
    if (cell.truthfulness) j["truthfulness"] = *cell.truthfulness;
    if (cell.word_count) j["word_count"] = *cell.word_count;
    if (cell.turns) j["turns"] = *cell.turns;
    j["success_with_end_marker"] =
        cell.success_with_end ? nlohmann::json(*cell.success_with_end) : nlohmann::json();
    j["success_without_end_marker"] =
        cell.success_without_end ? nlohmann::json(*cell.success_without_end) : nlohmann::json();
    j["n_with_end_marker"] = cell.n_with_end;
    j["n_without_end_marker"] = cell.n_without_end;
    cells.push_back(std::move(j));
  }
  const char* kind = table.kind == AblationKind::ref_length
                         ? "ref_length"
                         : table.kind == AblationKind::noise ? "noise" : "structure";
  return {{"kind", kind}, {"cells", cells}};
}

}  // namespace refgpt
