#include <doctest.h>

#include <string>
#include <vector>

#include "refgpt/eval.hpp"
#include "refgpt/rng.hpp"
#include "support/fixtures.hpp"

using namespace refgpt;

namespace {

std::vector<Turn> two_turns(const std::string& question, const std::string& answer) {
  return {{Role::user, 1, question, count_units(question, CountingStrategy::words)},
          {Role::assistant, 1, answer, count_units(answer, CountingStrategy::words)}};
}

EvalVerdict verdict_of(std::optional<bool> truthful) {
  EvalVerdict v;
  v.record_id = "r";
  v.explanation = truthful ? "reason" : "";
  v.truthful = truthful;
  v.judge_model = "test";
  return v;
}

}  // namespace

TEST_SUITE("eval_harness") {

TEST_CASE("judge prompt presents reference, then dialogue, then the rubric") {
  auto ref = make_reference("game", "Star Wars: Rebel Assault is a rail shooter video game "
                                    "developed and published by LucasArts.", Language::en);
  auto turns = two_turns("What is Star Wars: Rebel Assault?",
                         "A rail shooter video game developed and published by LucasArts.");
  auto bundle = build_judge_prompt(turns, ref);

  auto ref_pos = bundle.user.find(ref.text);
  auto dialogue_pos = bundle.user.find("What is Star Wars");
  auto rubric_pos = bundle.user.find("explanation first");
  auto verdict_pos = bundle.user.find("VERDICT: PASS");
  REQUIRE(ref_pos != std::string::npos);
  REQUIRE(dialogue_pos != std::string::npos);
  REQUIRE(rubric_pos != std::string::npos);
  REQUIRE(verdict_pos != std::string::npos);
  CHECK(ref_pos < dialogue_pos);
  CHECK(dialogue_pos < rubric_pos);
}

TEST_CASE("judge prompt guards run before any API call") {
  auto ref = make_reference("g", "text", Language::en);
  CHECK_THROWS_AS(build_judge_prompt({}, ref), Error);

  Reference blank;
  blank.id = "empty";
  blank.text = "   ";
  CHECK_THROWS_AS(build_judge_prompt(two_turns("q", "a"), blank), Error);
}

TEST_CASE("verdict parsing: PASS, FAIL, unparseable") {
  auto pass = parse_verdict("The dialogue matches the reference.\nVERDICT: PASS");
  CHECK(pass.truthful == true);
  CHECK(pass.explanation == "The dialogue matches the reference.");

  auto fail = parse_verdict("He did not transfer to Montverde.\nVERDICT: FAIL");
  CHECK(fail.truthful == false);

  auto none = parse_verdict("I think it is fine.");
  CHECK_FALSE(none.truthful.has_value());
  CHECK(none.explanation == "I think it is fine.");
}

TEST_CASE("the last verdict line wins") {
  auto v = parse_verdict("VERDICT: PASS\nOn reflection there is an error.\nVERDICT: FAIL");
  CHECK(v.truthful == false);
  CHECK(v.explanation.find("On reflection") != std::string::npos);
}

TEST_CASE("unknown verdict words are null") {
  CHECK_FALSE(parse_verdict("VERDICT: MAYBE").truthful.has_value());
  CHECK_FALSE(parse_verdict("VERDICT:").truthful.has_value());
}

TEST_CASE("accuracy over 1000 verdicts with 975 true") {
  std::vector<EvalVerdict> verdicts;
  for (int i = 0; i < 975; ++i) verdicts.push_back(verdict_of(true));
  for (int i = 0; i < 25; ++i) verdicts.push_back(verdict_of(false));
  auto report = accuracy(verdicts, NullPolicy::count_as_fail);
  CHECK(report.accuracy == doctest::Approx(0.975));
  CHECK(report.n_true == 975);
  CHECK(report.n_scored == 1000);
}

TEST_CASE("accuracy null policies") {
  std::vector<EvalVerdict> verdicts;
  for (int i = 0; i < 8; ++i) verdicts.push_back(verdict_of(true));
  verdicts.push_back(verdict_of(std::nullopt));
  verdicts.push_back(verdict_of(std::nullopt));

  auto strict = accuracy(verdicts, NullPolicy::count_as_fail);
  CHECK(strict.accuracy == doctest::Approx(0.8));
  CHECK(strict.n_null == 2);
  CHECK(strict.n_scored == 10);

  auto lax = accuracy(verdicts, NullPolicy::exclude);
  CHECK(lax.accuracy == doctest::Approx(1.0));
  CHECK(lax.n_scored == 8);
}

TEST_CASE("two true and two false is a coin flip") {
  std::vector<EvalVerdict> verdicts = {verdict_of(true), verdict_of(true), verdict_of(false),
                                       verdict_of(false)};
  CHECK(accuracy(verdicts).accuracy == doctest::Approx(0.5));
}

TEST_CASE("accuracy of nothing is an error") {
  CHECK_THROWS_AS(accuracy({}), Error);
}

TEST_CASE("count_as_fail never exceeds exclude") {
  Rng rng(555);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<EvalVerdict> verdicts;
    std::size_t n = 1 + rng.next_below(40);
    for (std::size_t i = 0; i < n; ++i) {
      double roll = rng.next_double();
      verdicts.push_back(verdict_of(roll < 0.5   ? std::optional<bool>(true)
                                    : roll < 0.8 ? std::optional<bool>(false)
                                                 : std::nullopt));
    }
    auto strict = accuracy(verdicts, NullPolicy::count_as_fail);
    auto lax = accuracy(verdicts, NullPolicy::exclude);
    CHECK(strict.accuracy <= lax.accuracy + 1e-12);
  }
}

TEST_CASE("scripted judge passes extractive dialogues and fails foreign words") {
  auto ref = fixtures::make_ref("src", 200, 77);
  auto units = tokenize_units(ref.text, CountingStrategy::words);
  std::string extractive = join_units(
      std::vector<std::string_view>(units.begin() + 10, units.begin() + 60), CountingStrategy::words);

  auto pass = parse_verdict(scripted_judge_reply(two_turns("anything?", extractive), ref));
  CHECK(pass.truthful == true);

  auto fail = parse_verdict(
      scripted_judge_reply(two_turns("anything?", extractive + " fabricated zephyrium"), ref));
  CHECK(fail.truthful == false);
  CHECK(fail.explanation.find("zephyrium") != std::string::npos);
}

TEST_CASE("scripted judge ignores user turns") {
  auto ref = fixtures::make_ref("src", 100, 78);
  auto turns = two_turns("question with totally foreign words?", "");
  turns[1].text = tokenize_units(ref.text, CountingStrategy::words)[0];
  auto v = parse_verdict(scripted_judge_reply(turns, ref));
  CHECK(v.truthful == true);
}

TEST_CASE("seed QA prompt asks for the two-field format") {
  auto ref = fixtures::make_ref("qa", 120, 79);
  auto bundle = build_seed_qa_prompt(ref);
  CHECK(bundle.user.find("QUESTION:") != std::string::npos);
  CHECK(bundle.user.find("ANSWER:") != std::string::npos);
  CHECK(bundle.user.find(ref.text) != std::string::npos);
}

TEST_CASE("seed QA parsing") {
  auto qa = parse_seed_qa("QUESTION: Who made it?\nANSWER: LucasArts.", "ref-9");
  CHECK(qa.question == "Who made it?");
  CHECK(qa.answer == "LucasArts.");
  CHECK(qa.reference_id == "ref-9");

  CHECK_THROWS_AS(parse_seed_qa("QUESTION: Who made it?"), Error);
  CHECK_THROWS_AS(parse_seed_qa("ANSWER: LucasArts."), Error);
  CHECK_THROWS_AS(parse_seed_qa("QUESTION:\nANSWER: x"), Error);
}

TEST_CASE("few-shot baseline renders three exemplars then the target question") {
  std::vector<SeedQA> seeds = {{"Q1?", "A1", "ref-1"}, {"Q2?", "A2", "ref-2"}, {"Q3?", "A3", "ref-3"}};
  SeedQA target{"What is the capital?", "unused", "ref-target"};
  auto bundle = build_baseline_prompt(BaselineMode::few_shot_qa, seeds, target);

  auto q1 = bundle.user.find("Q: Q1?");
  auto q3 = bundle.user.find("Q: Q3?");
  auto tq = bundle.user.find("Q: What is the capital?");
  REQUIRE(q1 != std::string::npos);
  REQUIRE(q3 != std::string::npos);
  REQUIRE(tq != std::string::npos);
  CHECK(q1 < q3);
  CHECK(q3 < tq);
  CHECK(bundle.user.rfind("A:") == bundle.user.size() - 2);  // ends ready for the answer
}

TEST_CASE("few-shot baseline rejects bad seed sets") {
  SeedQA target{"Q?", "A", "ref-t"};
  std::vector<SeedQA> two = {{"a", "b", "r1"}, {"c", "d", "r2"}};
  CHECK_THROWS_AS(build_baseline_prompt(BaselineMode::few_shot_qa, two, target), Error);

  std::vector<SeedQA> collision = {{"a", "b", "r1"}, {"c", "d", "ref-t"}, {"e", "f", "r3"}};
  CHECK_THROWS_AS(build_baseline_prompt(BaselineMode::few_shot_qa, collision, target), Error);
}

TEST_CASE("seed-question baseline contains only the opener") {
  SeedQA target{"How do rail shooters work?", "unused", "ref-t"};
  auto bundle = build_baseline_prompt(BaselineMode::seed_question, {}, target);
  CHECK(bundle.user.find("How do rail shooters work?") != std::string::npos);
  CHECK(bundle.user.find("Q1?") == std::string::npos);
  CHECK(bundle.user.find("alternating Human and Assistant") != std::string::npos);
  CHECK_THROWS_AS(build_baseline_prompt(BaselineMode::seed_question, {{"a", "b", "r"}}, target), Error);
}

TEST_CASE("both baselines are single-call generations") {
  CHECK(baseline_call_count(BaselineMode::few_shot_qa) == 1);
  CHECK(baseline_call_count(BaselineMode::seed_question) == 1);
}

}  // TEST_SUITE
