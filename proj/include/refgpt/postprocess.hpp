#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "refgpt/common.hpp"
#include "refgpt/hash.hpp"
#include "refgpt/parser.hpp"
#include "refgpt/plan.hpp"
#include "refgpt/reference.hpp"

namespace refgpt {

struct GenerationMeta {
  std::string backend;
  std::string model;
  std::uint64_t seed = 0;
  std::string timestamp;  // RFC 3339; fixed epoch on deterministic runs
  int attempt_count = 1;
};

// One emitted dataset unit. `sequence` is the input-order index that the
// ordered writer sorts on; `v` is the output schema version.
struct DatasetRecord {
  int v = 1;
  std::string record_id;
  std::uint64_t sequence = 0;
  Scenario scenario = Scenario::fact;
  Language language = Language::en;
  std::string reference_id;
  std::string reference_text_hash;
  DialoguePlan plan;
  std::vector<Turn> turns;
  GenerationMeta generation;
  ValidationReport validation;
};

// --- JSON serialization (snake_case field names, schema v1) ---

inline nlohmann::json to_json(const UtteranceSpec& spec) {
  return {{"role", to_string(spec.role)},
          {"index", spec.index},
          {"word_count", spec.word_count},
          {"style", spec.style},
          {"content", spec.content_directive}};
}

inline UtteranceSpec utterance_spec_from_json(const nlohmann::json& j) {
  UtteranceSpec spec;
  spec.role = role_from_string(j.at("role").get<std::string>());
  spec.index = j.at("index").get<int>();
  spec.word_count = j.at("word_count").get<int>();
  spec.style = j.value("style", "");
  spec.content_directive = j.value("content", "");
  return spec;
}

inline nlohmann::json to_json(const DialoguePlan& plan) {
  auto utterances = nlohmann::json::array();
  for (const auto& spec : plan.utterances) utterances.push_back(to_json(spec));
  return {{"scenario", to_string(plan.scenario)},
          {"language", to_string(plan.language)},
          {"n_turns", plan.n_turns},
          {"utterances", utterances}};
}

inline DialoguePlan plan_from_json(const nlohmann::json& j) {
  DialoguePlan plan;
  plan.scenario = scenario_from_string(j.at("scenario").get<std::string>());
  plan.language = language_from_string(j.at("language").get<std::string>());
  plan.n_turns = j.at("n_turns").get<int>();
  for (const auto& u : j.at("utterances")) plan.utterances.push_back(utterance_spec_from_json(u));
  return plan;
}

inline nlohmann::json to_json(const Turn& turn) {
  return {{"role", to_string(turn.role)},
          {"index", turn.index},
          {"text", turn.text},
          {"word_count", turn.word_count}};
}

inline Turn turn_from_json(const nlohmann::json& j) {
  Turn turn;
  turn.role = role_from_string(j.at("role").get<std::string>());
  turn.index = j.at("index").get<int>();
  turn.text = j.at("text").get<std::string>();
  turn.word_count = j.value("word_count", std::size_t{0});
  return turn;
}

inline nlohmann::json to_json(const ValidationReport& report) {
  auto reasons = nlohmann::json::array();
  for (auto r : report.failure_reasons) reasons.push_back(to_string(r));
  return {{"obeys_template", report.obeys_template},
          {"turn_count_match", report.turn_count_match},
          {"end_marker_present", report.end_marker_present},
          {"recovered", report.recovered},
          {"word_count_deviations", report.word_count_deviations},
          {"failure_reasons", reasons}};
}

inline ValidationReport validation_from_json(const nlohmann::json& j) {
  ValidationReport report;
  report.obeys_template = j.at("obeys_template").get<bool>();
  report.turn_count_match = j.at("turn_count_match").get<bool>();
  report.end_marker_present = j.at("end_marker_present").get<bool>();
  report.recovered = j.value("recovered", false);
  report.word_count_deviations = j.value("word_count_deviations", std::vector<double>{});
  for (const auto& r : j.value("failure_reasons", nlohmann::json::array()))
    report.failure_reasons.push_back(failure_reason_from_string(r.get<std::string>()));
  return report;
}

inline nlohmann::json to_json(const DatasetRecord& record) {
  auto turns = nlohmann::json::array();
  for (const auto& turn : record.turns) turns.push_back(to_json(turn));
  return {{"v", record.v},
          {"record_id", record.record_id},
          {"sequence", record.sequence},
          {"scenario", to_string(record.scenario)},
          {"language", to_string(record.language)},
          {"reference_id", record.reference_id},
          {"reference_text_hash", record.reference_text_hash},
          {"plan", to_json(record.plan)},
          {"turns", turns},
          {"generation",
           {{"backend", record.generation.backend},
            {"model", record.generation.model},
            {"seed", record.generation.seed},
            {"timestamp", record.generation.timestamp},
            {"attempt_count", record.generation.attempt_count}}},
          {"validation", to_json(record.validation)}};
}

inline DatasetRecord record_from_json(const nlohmann::json& j) {
  DatasetRecord record;
  record.v = j.value("v", 1);
  record.record_id = j.at("record_id").get<std::string>();
  record.sequence = j.value("sequence", std::uint64_t{0});
  record.scenario = scenario_from_string(j.at("scenario").get<std::string>());
  record.language = language_from_string(j.at("language").get<std::string>());
  record.reference_id = j.at("reference_id").get<std::string>();
  record.reference_text_hash = j.value("reference_text_hash", "");
  record.plan = plan_from_json(j.at("plan"));
  for (const auto& t : j.at("turns")) record.turns.push_back(turn_from_json(t));
  if (j.contains("generation")) {
    const auto& g = j["generation"];
    record.generation.backend = g.value("backend", "");
    record.generation.model = g.value("model", "");
    record.generation.seed = g.value("seed", std::uint64_t{0});
    record.generation.timestamp = g.value("timestamp", "");
    record.generation.attempt_count = g.value("attempt_count", 1);
  }
  if (j.contains("validation")) record.validation = validation_from_json(j["validation"]);
  return record;
}

// --- Scenario-specific transforms ---

// Fence-language hint derived from the reference's source path, when any.
inline std::string code_fence_hint(const Reference& ref) {
  if (!ref.source_uri) return "";
  static const std::map<std::string, std::string> kByExtension = {
      {".py", "python"}, {".cpp", "cpp"},  {".cc", "cpp"},   {".hpp", "cpp"},
      {".h", "c"},       {".c", "c"},      {".js", "javascript"}, {".ts", "typescript"},
      {".java", "java"}, {".rs", "rust"},  {".go", "go"},    {".rb", "ruby"},
      {".cs", "csharp"}, {".sh", "bash"},  {".php", "php"},  {".swift", "swift"}};
  auto dot = ref.source_uri->rfind('.');
  if (dot == std::string::npos) return "";
  auto it = kByExtension.find(ref.source_uri->substr(dot));
  return it == kByExtension.end() ? "" : it->second;
}

struct AttachResult {
  ParsedDialogue dialogue;
  bool empty_question = false;  // the original first question was empty
};

// Code-discussion post-processing: people paste the code first and then ask
// about it, so the reference code is prepended to the first user question as
// a fenced block. Every other turn is left byte-identical.
inline AttachResult attach_reference_code(const ParsedDialogue& dialogue, const Reference& ref) {
  AttachResult result;
  result.dialogue = dialogue;
  for (auto& turn : result.dialogue.turns) {
    if (turn.role != Role::user) continue;
    result.empty_question = trim_view(turn.text).empty();
    std::string fenced = "```" + code_fence_hint(ref) + "\n" + ref.text + "\n```\n\n";
    turn.text = fenced + turn.text;
    turn.word_count = count_units(turn.text, counting_strategy_for(ref.language));
    return result;
  }
  throw Error("attach_reference_code: dialogue has no user turn");
}

// --- Ordered JSONL emission ---

struct EmitSummary {
  std::size_t written = 0;
  std::size_t dropped_invalid = 0;
};

// Writes records to a JSONL file in ascending sequence order no matter the
// order they arrive in. Records failing template validation are either
// written in place (drop_invalid = false) or diverted to a sibling
// .rejected.jsonl file for audit. Single-threaded by contract; concurrent
// pipelines funnel completed records through one collector.
class OrderedEmitter {
 public:
  OrderedEmitter(std::filesystem::path path, bool drop_invalid)
      : path_(std::move(path)), drop_invalid_(drop_invalid) {
    out_.open(path_, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot open output file: " + path_.string());
  }

  void push(DatasetRecord record) {
    pending_[record.sequence] = std::move(record);
    flush_ready();
  }

  // Reports a record that never produced a dialogue (parse or backend
  // failure); it occupies its sequence slot so ordering stays gap-free.
  void push_rejected(std::uint64_t sequence, nlohmann::json audit_entry) {
    rejected_pending_[sequence] = std::move(audit_entry);
    flush_ready();
  }

  EmitSummary finish() {
    flush_ready();
    if (!pending_.empty() || !rejected_pending_.empty())
      throw Error("ordered emitter finished with a sequence gap");
    out_.flush();
    if (rejected_out_.is_open()) rejected_out_.flush();
    if (!out_) fail_io();
    return summary_;
  }

  const std::filesystem::path& rejected_path_used() const { return rejected_path_; }

 private:
  void flush_ready() {
    while (true) {
      if (auto it = pending_.find(next_); it != pending_.end()) {
        write_record(it->second);
        pending_.erase(it);
        ++next_;
        continue;
      }
      if (auto it = rejected_pending_.find(next_); it != rejected_pending_.end()) {
        write_rejected(it->second);
        rejected_pending_.erase(it);
        ++next_;
        continue;
      }
      break;
    }
  }

  void write_record(const DatasetRecord& record) {
    if (drop_invalid_ && !record.validation.obeys_template) {
      ++summary_.dropped_invalid;
      write_rejected(to_json(record));
      return;
    }
    out_ << to_json(record).dump() << '\n';
    if (!out_) fail_io();
    ++summary_.written;
  }

  void write_rejected(const nlohmann::json& entry) {
    if (!rejected_out_.is_open()) {
      rejected_path_ = path_;
      rejected_path_ += ".rejected.jsonl";
      rejected_out_.open(rejected_path_, std::ios::binary | std::ios::trunc);
      if (!rejected_out_) throw IoError("cannot open rejected-record file: " + rejected_path_.string());
    }
    rejected_out_ << entry.dump() << '\n';
  }

  [[noreturn]] void fail_io() {
    std::ofstream marker(path_.string() + ".partial");
    marker << "write failed; this output file is incomplete\n";
    throw IoError("write failed: " + path_.string());
  }

  std::filesystem::path path_;
  std::filesystem::path rejected_path_;
  bool drop_invalid_;
  std::ofstream out_;
  std::ofstream rejected_out_;
  std::uint64_t next_ = 0;
  std::map<std::uint64_t, DatasetRecord> pending_;
  std::map<std::uint64_t, nlohmann::json> rejected_pending_;
  EmitSummary summary_;
};

// Convenience wrapper for already-collected records.
inline EmitSummary emit_records(std::vector<DatasetRecord> records, const std::filesystem::path& path,
                                bool drop_invalid) {
  OrderedEmitter emitter(path, drop_invalid);
  for (auto& record : records) emitter.push(std::move(record));
  return emitter.finish();
}

inline std::vector<DatasetRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open records file: " + path.string());
  std::vector<DatasetRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_view(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
    records.push_back(record_from_json(j));
  }
  return records;
}

}  // namespace refgpt
