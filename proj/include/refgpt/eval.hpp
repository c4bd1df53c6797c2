#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "refgpt/common.hpp"
#include "refgpt/parser.hpp"
#include "refgpt/prompt_types.hpp"
#include "refgpt/reference.hpp"

namespace refgpt {

struct EvalVerdict {
  std::string record_id;
  std::string explanation;
  std::optional<bool> truthful;  // nullopt = judge reply was unparseable
  std::string judge_model;
};

struct SeedQA {
  std::string question;
  std::string answer;
  std::string reference_id;
};

inline std::string format_transcript(const std::vector<Turn>& turns) {
  std::string out;
  for (const auto& turn : turns) {
    out += "<" + to_string(turn.role) + " " + std::to_string(turn.index) + ">: " + turn.text + "\n";
  }
  return out;
}

// Reference-grounded truthfulness check. The judge sees the reference first,
// then the dialogue, and must explain before judging; the final line is the
// machine-readable verdict.
inline PromptBundle build_judge_prompt(const std::vector<Turn>& turns, const Reference& ref) {
  if (turns.empty()) throw Error("judge prompt: dialogue is empty");
  if (trim_view(ref.text).empty()) throw Error("judge prompt: reference text is empty");
  PromptBundle bundle;
  bundle.user =
      "You are checking a dialogue for factual errors against its source document.\n"
      "##Reference##\n" + ref.text + "\n"
      "##Dialogue##\n" + format_transcript(turns) +
      "Check every claim the assistant makes. The dialogue passes only if everything the "
      "assistant says accords with the reference; content that contradicts the reference or "
      "invents facts not supported by it is a failure. Give your explanation first. Then output "
      "the final line exactly as \"VERDICT: PASS\" or \"VERDICT: FAIL\".";
  bundle.metadata["kind"] = "judge";
  bundle.metadata["reference_id"] = ref.id;
  return bundle;
}

// Scans for the last VERDICT: line; everything before it is the explanation.
// An absent or unrecognizable verdict yields nullopt, which accuracy() treats
// according to its null policy.
inline EvalVerdict parse_verdict(std::string_view reply) {
  EvalVerdict verdict;
  std::size_t line_start = 0;
  std::size_t verdict_pos = std::string_view::npos;
  std::string_view verdict_text;
  for (std::size_t i = 0; i <= reply.size(); ++i) {
    if (i == reply.size() || reply[i] == '\n') {
      std::string_view line = trim_view(reply.substr(line_start, i - line_start));
      if (line.size() >= 8 && line.substr(0, 8) == "VERDICT:") {
        verdict_pos = line_start;
        verdict_text = trim_view(line.substr(8));
      }
      line_start = i + 1;
    }
  }
  if (verdict_pos == std::string_view::npos) {
    verdict.explanation = trim(reply);
    return verdict;
  }
  verdict.explanation = trim(reply.substr(0, verdict_pos));
  if (verdict_text == "PASS") verdict.truthful = true;
  else if (verdict_text == "FAIL") verdict.truthful = false;
  return verdict;
}

enum class NullPolicy { exclude, count_as_fail };

struct AccuracyReport {
  double accuracy = 0.0;
  std::size_t n_true = 0;
  std::size_t n_scored = 0;  // denominator actually used
  std::size_t n_null = 0;
  std::size_t n_total = 0;
};

// Truthfulness accuracy over a verdict set. count_as_fail keeps unparseable
// judge replies in the denominator (the conservative default); exclude drops
// them.
inline AccuracyReport accuracy(const std::vector<EvalVerdict>& verdicts,
                               NullPolicy policy = NullPolicy::count_as_fail) {
  if (verdicts.empty()) throw Error("accuracy over an empty verdict list");
  AccuracyReport report;
  report.n_total = verdicts.size();
  for (const auto& v : verdicts) {
    if (!v.truthful) ++report.n_null;
    else if (*v.truthful) ++report.n_true;
  }
  report.n_scored = policy == NullPolicy::count_as_fail ? report.n_total
                                                        : report.n_total - report.n_null;
  report.accuracy = report.n_scored == 0
                        ? 0.0
                        : static_cast<double>(report.n_true) / static_cast<double>(report.n_scored);
  return report;
}

// --- Seed question-answer pairs for baseline comparisons ---

inline PromptBundle build_seed_qa_prompt(const Reference& ref) {
  if (trim_view(ref.text).empty()) throw Error("seed QA prompt: reference text is empty");
  PromptBundle bundle;
  bundle.user =
      "##Provided Information## " + ref.text + "\n"
      "Write one question about the information above together with its answer. The answer must "
      "be found in or directly inferable from the information; do not add outside knowledge.\n"
      "Output exactly two lines in this format:\n"
      "QUESTION: <the question>\n"
      "ANSWER: <the answer>";
  bundle.metadata["kind"] = "seed_qa";
  bundle.metadata["reference_id"] = ref.id;
  return bundle;
}

inline SeedQA parse_seed_qa(std::string_view reply, const std::string& reference_id = "") {
  auto q_pos = reply.find("QUESTION:");
  if (q_pos == std::string_view::npos) throw Error("seed QA reply has no QUESTION field");
  auto a_pos = reply.find("ANSWER:", q_pos);
  if (a_pos == std::string_view::npos) throw Error("seed QA reply has no ANSWER field");
  SeedQA qa;
  qa.question = trim(reply.substr(q_pos + 9, a_pos - (q_pos + 9)));
  qa.answer = trim(reply.substr(a_pos + 7));
  qa.reference_id = reference_id;
  if (qa.question.empty()) throw Error("seed QA reply has an empty question");
  if (qa.answer.empty()) throw Error("seed QA reply has an empty answer");
  return qa;
}

// --- Baseline generation modes ---
//
// Both baselines are single-call generations, compared against the
// whole-dialogue pipeline on the same seed topics. few_shot_qa answers one
// seed question with three exemplar pairs from other references;
// seed_question spins a self-chat conversation from the seed question alone.

enum class BaselineMode { few_shot_qa, seed_question };

inline std::string to_string(BaselineMode m) {
  return m == BaselineMode::few_shot_qa ? "few_shot_qa" : "seed_question";
}

inline PromptBundle build_baseline_prompt(BaselineMode mode, const std::vector<SeedQA>& seeds,
                                          const SeedQA& target) {
  PromptBundle bundle;
  bundle.metadata["kind"] = "baseline_" + to_string(mode);
  bundle.metadata["reference_id"] = target.reference_id;
  if (mode == BaselineMode::few_shot_qa) {
    if (seeds.size() != 3) throw Error("few_shot_qa needs exactly 3 seed pairs");
    for (const auto& seed : seeds)
      if (!seed.reference_id.empty() && seed.reference_id == target.reference_id)
        throw Error("few-shot seed shares the target's reference: " + seed.reference_id);
    std::string user = "Answer the final question. Follow the style of the examples.\n\n";
    for (const auto& seed : seeds)
      user += "Q: " + seed.question + "\nA: " + seed.answer + "\n\n";
    user += "Q: " + target.question + "\nA:";
    bundle.user = std::move(user);
  } else {
    if (!seeds.empty()) throw Error("seed_question mode takes no few-shot seeds");
    bundle.user =
        "Continue a conversation between Human and Assistant that starts from the question "
        "below. Write both sides, alternating Human and Assistant, for several turns.\n\n"
        "Human: " + target.question;
  }
  return bundle;
}

// Calls spent per generated dialogue: both baselines and the whole-dialogue
// generator are single-call; per-utterance two-party schemes are accounted
// for (but deliberately not implemented) in stats.hpp.
inline int baseline_call_count(BaselineMode) { return 1; }

// --- Scripted judge ---

// Offline proxy judge: PASS iff every assistant word appears somewhere in
// the reference. Mock-generated dialogues are extractive, so they pass by
// construction; any injected off-reference sentence fails. This is a weak
// containment check for tests and smoke runs, not a truthfulness model.
inline std::string scripted_judge_reply(const std::vector<Turn>& turns, const Reference& ref) {
  CountingStrategy strategy = counting_strategy_for(ref.language);
  auto ref_units = tokenize_units(ref.text, strategy);
  std::set<std::string_view> vocabulary(ref_units.begin(), ref_units.end());

  std::vector<std::string> missing;
  for (const auto& turn : turns) {
    if (turn.role != Role::assistant) continue;
    for (auto unit : tokenize_units(turn.text, strategy)) {
      if (!vocabulary.count(unit)) {
        missing.emplace_back(unit);
        if (missing.size() >= 5) break;
      }
    }
    if (missing.size() >= 5) break;
  }
  if (missing.empty())
    return "Every assistant word is contained in the reference.\nVERDICT: PASS";
  std::string out = "Assistant used words that do not appear in the reference:";
  for (const auto& word : missing) out += " \"" + word + "\"";
  return out + ".\nVERDICT: FAIL";
}

inline constexpr std::string_view kScriptedJudgeModel = "scripted-containment";

}  // namespace refgpt
