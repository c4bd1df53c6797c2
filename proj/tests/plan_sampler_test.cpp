#include <doctest.h>

#include <cmath>
#include <map>

#include "refgpt/plan.hpp"
#include "refgpt/rng.hpp"

using namespace refgpt;

namespace {

SamplingConfig zero_variance_config() {
  SamplingConfig cfg;
  cfg.turn_weights = {{3, 1.0}};
  cfg.assistant_mu = 300;
  cfg.assistant_sigma = 0;
  cfg.user_mu = 50;
  cfg.user_sigma = 0;
  return cfg;
}

}  // namespace

TEST_SUITE("plan_sampler") {

TEST_CASE("zero variance pins every word count") {
  auto cfg = zero_variance_config();
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
    auto plan = sample_plan(cfg, Scenario::fact, Language::en, seed);
    CHECK(plan.n_turns == 3);
    REQUIRE(plan.utterances.size() == 6);
    for (const auto& spec : plan.utterances)
      CHECK(spec.word_count == (spec.role == Role::assistant ? 300 : 50));
  }
}

TEST_CASE("plans alternate user/assistant with paired indices") {
  SamplingConfig cfg = default_sampling_config(Scenario::fact);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto plan = sample_plan(cfg, Scenario::fact, Language::en, seed);
    REQUIRE(plan.utterances.size() == static_cast<std::size_t>(plan.n_turns) * 2);
    for (std::size_t i = 0; i < plan.utterances.size(); ++i) {
      const auto& spec = plan.utterances[i];
      CHECK(spec.role == (i % 2 == 0 ? Role::user : Role::assistant));
      CHECK(spec.index == static_cast<int>(i / 2) + 1);
    }
  }
}

TEST_CASE("word counts are clamped and rounded to the granularity") {
  SamplingConfig cfg = default_sampling_config(Scenario::fact);
  cfg.assistant_sigma = 500;  // force clamping on both ends
  cfg.user_sigma = 300;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto plan = sample_plan(cfg, Scenario::fact, Language::en, seed);
    for (const auto& spec : plan.utterances) {
      CHECK(spec.word_count >= cfg.min_words);
      CHECK(spec.word_count <= cfg.max_words);
      if (spec.word_count > cfg.min_words && spec.word_count < cfg.max_words)
        CHECK(spec.word_count % cfg.rounding == 0);
    }
  }
}

TEST_CASE("identical seeds reproduce identical plans") {
  SamplingConfig cfg = default_sampling_config(Scenario::code_ds);
  auto a = sample_plan(cfg, Scenario::code_ds, Language::zh, 1234);
  auto b = sample_plan(cfg, Scenario::code_ds, Language::zh, 1234);
  REQUIRE(a.utterances.size() == b.utterances.size());
  for (std::size_t i = 0; i < a.utterances.size(); ++i) {
    CHECK(a.utterances[i].word_count == b.utterances[i].word_count);
    CHECK(a.utterances[i].style == b.utterances[i].style);
    CHECK(a.utterances[i].content_directive == b.utterances[i].content_directive);
  }
}

TEST_CASE("gaussian sampling tracks mu and sigma") {
  Rng rng(777);
  const int n = 20000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < n; ++i) {
    double draw = rng.gaussian(300, 50);
    sum += draw;
    sum_sq += draw * draw;
  }
  double mean = sum / n;
  double sigma = std::sqrt(sum_sq / n - mean * mean);
  CHECK(mean > 298.0);
  CHECK(mean < 302.0);
  CHECK(sigma > 48.0);
  CHECK(sigma < 52.0);
}

TEST_CASE("turn counts follow the configured weights") {
  SamplingConfig cfg = default_sampling_config(Scenario::fact);
  cfg.turn_weights = {{3, 0.7}, {4, 0.3}};
  std::map<int, int> counts;
  const int n = 20000;
  for (int i = 0; i < n; ++i)
    counts[sample_plan(cfg, Scenario::fact, Language::en, static_cast<std::uint64_t>(i)).n_turns]++;
  double freq3 = static_cast<double>(counts[3]) / n;
  CHECK(freq3 > 0.68);
  CHECK(freq3 < 0.72);
  CHECK(counts[3] + counts[4] == n);
}

TEST_CASE("all-zero turn weights are rejected") {
  SamplingConfig cfg = default_sampling_config(Scenario::fact);
  cfg.turn_weights = {{3, 0.0}, {4, 0.0}};
  CHECK_THROWS_AS(sample_plan(cfg, Scenario::fact, Language::en, 1), ConfigError);
  cfg.turn_weights.clear();
  CHECK_THROWS_AS(sample_plan(cfg, Scenario::fact, Language::en, 1), ConfigError);
}

TEST_CASE("empty pools sample to empty directives") {
  SamplingConfig cfg;
  cfg.turn_weights = {{2, 1.0}};
  auto plan = sample_plan(cfg, Scenario::fact, Language::en, 5);
  for (const auto& spec : plan.utterances) {
    CHECK(spec.style.empty());
    CHECK(spec.content_directive.empty());
  }
}

TEST_CASE("rendering matches the canonical template surface") {
  DialoguePlan plan;
  plan.n_turns = 1;
  plan.utterances = {{Role::user, 1, 50, "asks a question", ""},
                     {Role::assistant, 1, 200, "answers [+detailed explanation]", ""}};
  CHECK(render_template(plan) ==
        "<chat><user 1>:(word count: 50 words)asks a question "
        "<assistant 1>:(word count: 200 words)answers [+detailed explanation] </chat>");
}

TEST_CASE("rendering with the Human-style lexicon swaps the marker words") {
  DialoguePlan plan;
  plan.n_turns = 1;
  plan.utterances = {{Role::user, 1, 10, "", ""}, {Role::assistant, 1, 20, "", ""}};
  auto rendered = render_template(plan, human_markers());
  CHECK(rendered.find("<Human 1>") != std::string::npos);
  CHECK(rendered.find("<Assistant 1>") != std::string::npos);
  CHECK(rendered.find("<user") == std::string::npos);
}

TEST_CASE("rendered templates carry exactly one chat envelope and ordered markers") {
  SamplingConfig cfg = default_sampling_config(Scenario::fact);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto plan = sample_plan(cfg, Scenario::fact, Language::en, seed);
    auto rendered = render_template(plan);
    CHECK(rendered.rfind("<chat>", 0) == 0);
    CHECK(rendered.find("<chat>", 1) == std::string::npos);
    CHECK(rendered.rfind("</chat>") == rendered.size() - 7);
    for (int i = 1; i <= plan.n_turns; ++i) {
      auto user_pos = rendered.find("<user " + std::to_string(i) + ">");
      auto assistant_pos = rendered.find("<assistant " + std::to_string(i) + ">");
      REQUIRE(user_pos != std::string::npos);
      REQUIRE(assistant_pos != std::string::npos);
      CHECK(user_pos < assistant_pos);
    }
  }
}

TEST_CASE("style and content are joined with a single space") {
  DialoguePlan plan;
  plan.n_turns = 1;
  plan.utterances = {{Role::user, 1, 50, "asks with curiosity", "about creating the code"},
                     {Role::assistant, 1, 300, "answers [+detailed explanation]", "and give code examples"}};
  auto rendered = render_template(plan);
  CHECK(rendered.find("asks with curiosity about creating the code ") != std::string::npos);
  CHECK(rendered.find("answers [+detailed explanation] and give code examples ") != std::string::npos);
}

}  // TEST_SUITE
