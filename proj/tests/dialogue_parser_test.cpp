#include <doctest.h>

#include <string>

#include "refgpt/client.hpp"
#include "refgpt/parser.hpp"
#include "refgpt/prompt.hpp"
#include "support/fixtures.hpp"

using namespace refgpt;

namespace {

DialoguePlan tiny_plan(int turns, int user_words = 50, int assistant_words = 200) {
  DialoguePlan plan;
  plan.n_turns = turns;
  for (int i = 1; i <= turns; ++i) {
    plan.utterances.push_back({Role::user, i, user_words, "", ""});
    plan.utterances.push_back({Role::assistant, i, assistant_words, "", ""});
  }
  return plan;
}

ParsedDialogue must_parse(const std::string& text, bool lenient = true) {
  auto result = parse_dialogue(text, lenient);
  REQUIRE(result.ok());
  return *result.dialogue;
}

}  // namespace

TEST_SUITE("dialogue_parser") {

TEST_CASE("minimal well-formed dialogue") {
  auto d = must_parse("<chat><user 1>: Hi <assistant 1>: Hello </chat>");
  REQUIRE(d.turns.size() == 2);
  CHECK(d.turns[0].role == Role::user);
  CHECK(d.turns[0].text == "Hi");
  CHECK(d.turns[1].role == Role::assistant);
  CHECK(d.turns[1].text == "Hello");
  CHECK(d.had_end_marker);
  CHECK_FALSE(d.recovered);
}

TEST_CASE("missing end marker recovers in lenient mode only") {
  std::string text = "<chat><user 1>: Hi <assistant 1>: Hello";
  auto d = must_parse(text, true);
  CHECK(d.turns.size() == 2);
  CHECK_FALSE(d.had_end_marker);
  CHECK(d.recovered);

  auto strict = parse_dialogue(text, false);
  REQUIRE_FALSE(strict.ok());
  CHECK(strict.error->reason == FailureReason::no_chat_end);
  CHECK_FALSE(strict.error->had_end_marker);
}

TEST_CASE("Human-style lexicon and echoed annotations are normalized away") {
  auto d = must_parse(
      "<chat><Human 1>:(Word count requirement: 50 words) Hi <Assistant 1>: Hello </chat>");
  REQUIRE(d.turns.size() == 2);
  CHECK(d.turns[0].role == Role::user);
  CHECK(d.turns[0].text == "Hi");
  CHECK(d.turns[1].text == "Hello");
}

TEST_CASE("lowercase annotation form is stripped too") {
  auto d = must_parse("<chat><user 1>:(word count: 300 words)Tell me <assistant 1>: Sure </chat>");
  CHECK(d.turns[0].text == "Tell me");
}

TEST_CASE("no chat start is unrecoverable") {
  for (bool lenient : {false, true}) {
    auto r = parse_dialogue("<user 1>: Hi <assistant 1>: Hello </chat>", lenient);
    REQUIRE_FALSE(r.ok());
    CHECK(r.error->reason == FailureReason::no_chat_start);
  }
}

TEST_CASE("skipped indices fail in both modes") {
  auto r = parse_dialogue("<chat><user 1>: a <assistant 1>: b <user 3>: c <assistant 3>: d </chat>",
                          true);
  REQUIRE_FALSE(r.ok());
  CHECK(r.error->reason == FailureReason::bad_index_sequence);
  CHECK(r.error->had_end_marker);
  CHECK(failed_validation(*r.error).failure_reasons ==
        std::vector<FailureReason>{FailureReason::bad_index_sequence});
}

TEST_CASE("wrong role order fails") {
  auto r = parse_dialogue("<chat><assistant 1>: b <user 1>: a </chat>", true);
  REQUIRE_FALSE(r.ok());
  CHECK(r.error->reason == FailureReason::role_order_violation);
}

TEST_CASE("unnumbered markers: positional indices in lenient, rejected in strict") {
  std::string text = "<chat><user>: a <assistant>: b <user>: c <assistant>: d </chat>";
  auto d = must_parse(text, true);
  REQUIRE(d.turns.size() == 4);
  CHECK(d.turns[2].index == 2);
  CHECK(d.had_unnumbered_markers);
  CHECK(d.recovered);

  auto strict = parse_dialogue(text, false);
  REQUIRE_FALSE(strict.ok());
  CHECK(strict.error->reason == FailureReason::bad_index_sequence);
}

TEST_CASE("dangling user turn is dropped leniently") {
  auto d = must_parse("<chat><user 1>: a <assistant 1>: b <user 2>: c");
  CHECK(d.turns.size() == 2);
  CHECK(d.recovered);

  auto strict = parse_dialogue("<chat><user 1>: a <assistant 1>: b <user 2>: c </chat>", false);
  REQUIRE_FALSE(strict.ok());
  CHECK(strict.error->reason == FailureReason::role_order_violation);
}

TEST_CASE("empty utterance is a strict-mode failure") {
  std::string text = "<chat><user 1>: <assistant 1>: Hello </chat>";
  auto strict = parse_dialogue(text, false);
  REQUIRE_FALSE(strict.ok());
  CHECK(strict.error->reason == FailureReason::empty_utterance);
  CHECK(must_parse(text, true).turns[0].text.empty());
}

TEST_CASE("commentary after the end marker is discarded with a flag") {
  auto d = must_parse("<chat><user 1>: a <assistant 1>: b </chat> I hope that helps!");
  CHECK(d.trailing_text_discarded);
  CHECK(d.turns[1].text == "b");
}

TEST_CASE("marker matching tolerates case and spacing") {
  auto d = must_parse("<CHAT>< User 1 > : a < ASSISTANT 1 >: b </CHAT>");
  REQUIRE(d.turns.size() == 2);
  CHECK(d.turns[0].text == "a");
}

TEST_CASE("both lexicons parse to identical structure") {
  DialoguePlan plan = tiny_plan(3, 20, 40);
  plan.scenario = Scenario::fact;
  plan.language = Language::en;
  auto registry = ScenarioRegistry::builtin();
  auto ref = fixtures::make_ref("lex", 400, 60);

  ParsedDialogue dialogues[2];
  int slot = 0;
  for (const auto& lexicon : {canonical_markers(), human_markers()}) {
    auto bundle = registry.build_generation_prompt(ref, plan, render_template(plan, lexicon));
    auto completion = mock_complete(bundle);
    dialogues[slot++] = must_parse(completion.text);
  }
  REQUIRE(dialogues[0].turns.size() == dialogues[1].turns.size());
  for (std::size_t i = 0; i < dialogues[0].turns.size(); ++i) {
    CHECK(dialogues[0].turns[i].role == dialogues[1].turns[i].role);
    CHECK(dialogues[0].turns[i].index == dialogues[1].turns[i].index);
    CHECK(dialogues[0].turns[i].text == dialogues[1].turns[i].text);
  }
}

TEST_CASE("validation against the plan: mock round trip has zero deviations") {
  DialoguePlan plan = tiny_plan(3, 20, 40);
  auto registry = ScenarioRegistry::builtin();
  auto ref = fixtures::make_ref("val", 400, 61);
  auto bundle = registry.build_generation_prompt(ref, plan, render_template(plan));
  auto d = must_parse(mock_complete(bundle).text);

  auto report = validate(d, plan);
  CHECK(report.obeys_template);
  CHECK(report.turn_count_match);
  CHECK(report.end_marker_present);
  REQUIRE(report.word_count_deviations.size() == 6);
  for (double dev : report.word_count_deviations) CHECK(dev == doctest::Approx(0.0));
}

TEST_CASE("turn count mismatch is reported") {
  auto d = must_parse("<chat><user 1>: a <assistant 1>: b <user 2>: c <assistant 2>: d </chat>");
  auto report = validate(d, tiny_plan(3));
  CHECK_FALSE(report.obeys_template);
  CHECK_FALSE(report.turn_count_match);
  REQUIRE(report.failure_reasons.size() == 1);
  CHECK(report.failure_reasons[0] == FailureReason::turn_count_mismatch);
}

TEST_CASE("empty utterances fail validation even after lenient parsing") {
  auto d = must_parse("<chat><user 1>: <assistant 1>: ok </chat>");
  auto report = validate(d, tiny_plan(1));
  CHECK_FALSE(report.obeys_template);
  CHECK(std::count(report.failure_reasons.begin(), report.failure_reasons.end(),
                   FailureReason::empty_utterance) == 1);
}

TEST_CASE("a complete dialogue without the end marker can still obey") {
  auto d = must_parse("<chat><user 1>: question here <assistant 1>: answer here");
  auto report = validate(d, tiny_plan(1));
  CHECK(report.obeys_template);
  CHECK_FALSE(report.end_marker_present);
  CHECK(report.recovered);
}

TEST_CASE("success rate arithmetic and strata") {
  std::vector<ValidationReport> reports;
  for (int i = 0; i < 9; ++i) {
    ValidationReport r;
    r.obeys_template = true;
    r.end_marker_present = true;
    reports.push_back(r);
  }
  ValidationReport bad;
  bad.obeys_template = false;
  bad.end_marker_present = false;
  reports.push_back(bad);

  auto rate = success_rate(reports);
  CHECK(rate.overall() == doctest::Approx(0.9));
  REQUIRE(rate.with_end_marker().has_value());
  CHECK(*rate.with_end_marker() == doctest::Approx(1.0));
  REQUIRE(rate.without_end_marker().has_value());
  CHECK(*rate.without_end_marker() == doctest::Approx(0.0));
  CHECK(rate.n_with == 9);
  CHECK(rate.n_without == 1);
}

TEST_CASE("overall success is the stratum-weighted average") {
  Rng rng(17);
  std::vector<ValidationReport> reports;
  for (int i = 0; i < 500; ++i) {
    ValidationReport r;
    r.obeys_template = rng.next_double() < 0.8;
    r.end_marker_present = rng.next_double() < 0.6;
    reports.push_back(r);
  }
  auto rate = success_rate(reports);
  double weighted = 0.0;
  if (rate.with_end_marker())
    weighted += *rate.with_end_marker() * static_cast<double>(rate.n_with);
  if (rate.without_end_marker())
    weighted += *rate.without_end_marker() * static_cast<double>(rate.n_without);
  CHECK(rate.overall() == doctest::Approx(weighted / static_cast<double>(rate.n_total)));
}

TEST_CASE("success rate over nothing is an error") {
  CHECK_THROWS_AS(success_rate({}), Error);
}

TEST_CASE("zh dialogues validate with character counting") {
  DialoguePlan plan = tiny_plan(1, 4, 6);
  plan.language = Language::zh;
  auto d = must_parse("<chat><user 1>: 这是四个 <assistant 1>: 山川河海星木 </chat>");
  auto report = validate(d, plan);
  CHECK(report.obeys_template);
  CHECK(report.word_count_deviations[0] == doctest::Approx(0.0));
  CHECK(report.word_count_deviations[1] == doctest::Approx(0.0));
}

TEST_CASE("parser survives hostile input (unit-scale fuzz)") {
  Rng rng(321);
  const std::string alphabet = "<>/:chatuserman assistant0123456789()wordcount ";
  for (int trial = 0; trial < 5000; ++trial) {
    std::string input;
    std::size_t len = rng.next_below(120);
    for (std::size_t i = 0; i < len; ++i)
      input += alphabet[rng.next_below(alphabet.size() - 1)];
    for (bool lenient : {false, true}) {
      auto result = parse_dialogue(input, lenient);
      CHECK((result.ok() || result.error.has_value()));
    }
  }
}

}  // TEST_SUITE
