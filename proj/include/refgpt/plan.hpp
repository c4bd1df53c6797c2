#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "refgpt/common.hpp"
#include "refgpt/rng.hpp"

namespace refgpt {

// Per-utterance settings: who speaks, in which turn, how many words, and the
// sampled style / content directives that end up in the dialogue template.
struct UtteranceSpec {
  Role role = Role::user;
  int index = 1;  // 1-based turn number
  int word_count = 0;
  std::string style;
  std::string content_directive;
};

struct DialoguePlan {
  Scenario scenario = Scenario::fact;
  Language language = Language::en;
  std::vector<UtteranceSpec> utterances;  // user 1, assistant 1, user 2, ...
  int n_turns = 0;
};

// A weighted pool of directive strings; an empty pool samples to "".
struct WeightedPool {
  struct Entry {
    double weight = 1.0;
    std::string text;
  };
  std::vector<Entry> entries;

  bool empty() const { return entries.empty(); }
};

struct RolePools {
  WeightedPool user;
  WeightedPool assistant;

  const WeightedPool& for_role(Role r) const { return r == Role::user ? user : assistant; }
};

struct SamplingConfig {
  std::map<int, double> turn_weights;       // turn count -> weight
  double assistant_mu = 300.0;              // target assistant words
  double assistant_sigma = 50.0;
  double user_mu = 30.0;
  double user_sigma = 10.0;
  RolePools style_pool;                     // may be empty
  std::map<Scenario, RolePools> content_pools;  // may be empty
  int min_words = 10;
  int max_words = 1000;
  int rounding = 10;  // word counts are rounded to this granularity
};

// Default pools are small placeholder lists in the spirit of the shipped
// prompt templates; real runs are expected to bring their own.
inline SamplingConfig default_sampling_config(Scenario scenario) {
  SamplingConfig cfg;
  if (scenario == Scenario::code_bg) {
    cfg.turn_weights = {{2, 0.34}, {3, 0.33}, {4, 0.33}};
  } else {
    cfg.turn_weights = {{3, 0.5}, {4, 0.5}};
  }
  cfg.style_pool.user.entries = {
      {1.0, "asks a question"},
      {1.0, "asks with curiosity"},
      {1.0, "asks in a young person's tone"},
      {1.0, "asks from the perspective of real life"},
      {1.0, "makes a request"},
      {1.0, "expresses his/her needs and asks the Assistant for help"},
  };
  cfg.style_pool.assistant.entries = {{1.0, "answers [+detailed explanation]"}};

  RolePools fact;
  fact.user.entries = {
      {2.0, ""},
      {1.0, "about the entities mentioned in the information"},
      {1.0, "about the numbers mentioned in the information"},
  };
  cfg.content_pools[Scenario::fact] = fact;

  RolePools code_ds;
  code_ds.user.entries = {
      {1.0, "about writing the code"},
      {1.0, "about further modifying the code"},
      {1.0, "about further how to use the code"},
      {1.0, "about further explaining the code"},
  };
  code_ds.assistant.entries = {{1.0, "and give code examples"}};
  cfg.content_pools[Scenario::code_ds] = code_ds;

  RolePools code_cr;
  code_cr.user.entries = {
      {1.0, "about creating the code"},
      {1.0, "about further using the code"},
      {1.0, "about further explaining the code"},
  };
  code_cr.assistant.entries = {{1.0, "and give code examples"}};
  cfg.content_pools[Scenario::code_cr] = code_cr;

  RolePools code_bg;
  code_bg.user.entries = {
      {1.0, "about writing a piece of code with bugs and show the detailed code"},
      {1.0, "about further using the code"},
      {1.0, "about further explaining the code"},
  };
  code_bg.assistant.entries = {
      {1.0, "and tell Human about the error location in the code, then provide a correct piece of code"},
      {1.0, "and give code examples"},
  };
  cfg.content_pools[Scenario::code_bg] = code_bg;
  return cfg;
}

namespace detail {

inline std::string sample_pool(const WeightedPool& pool, Rng& rng) {
  if (pool.empty()) return "";
  std::vector<double> weights;
  weights.reserve(pool.entries.size());
  for (const auto& e : pool.entries) weights.push_back(e.weight);
  return pool.entries[rng.weighted_index(weights)].text;
}

inline int sample_word_count(Rng& rng, double mu, double sigma, const SamplingConfig& cfg) {
  double raw = rng.gaussian(mu, sigma);
  double granule = cfg.rounding > 0 ? static_cast<double>(cfg.rounding) : 1.0;
  auto rounded = static_cast<long long>(std::llround(raw / granule)) * static_cast<long long>(granule);
  if (rounded < cfg.min_words) rounded = cfg.min_words;
  if (rounded > cfg.max_words) rounded = cfg.max_words;
  return static_cast<int>(rounded);
}

}  // namespace detail

// Draws a full dialogue plan. Turn count comes from weighted sampling over
// turn_weights; each word count from the role's Gaussian, rounded to the
// configured granularity and clamped to [min_words, max_words]; style and
// content directives are drawn independently per utterance. Deterministic
// given (config, scenario, language, seed).
inline DialoguePlan sample_plan(const SamplingConfig& config, Scenario scenario, Language language,
                                std::uint64_t seed) {
  if (config.turn_weights.empty()) throw ConfigError("turn_weights is empty");
  double total = 0.0;
  for (const auto& [turns, w] : config.turn_weights) {
    if (w < 0.0) throw ConfigError("negative turn weight");
    total += w;
  }
  if (total <= 0.0) throw ConfigError("turn_weights has no positive weight");
  if (config.min_words > config.max_words) throw ConfigError("min_words > max_words");

  Rng rng(seed);

  std::vector<int> turn_options;
  std::vector<double> weights;
  for (const auto& [turns, w] : config.turn_weights) {
    turn_options.push_back(turns);
    weights.push_back(w);
  }
  int n_turns = turn_options[rng.weighted_index(weights)];

  const RolePools* content = nullptr;
  if (auto it = config.content_pools.find(scenario); it != config.content_pools.end())
    content = &it->second;

  DialoguePlan plan;
  plan.scenario = scenario;
  plan.language = language;
  plan.n_turns = n_turns;
  plan.utterances.reserve(static_cast<std::size_t>(n_turns) * 2);
  for (int i = 1; i <= n_turns; ++i) {
    for (Role role : {Role::user, Role::assistant}) {
      UtteranceSpec spec;
      spec.role = role;
      spec.index = i;
      spec.word_count = role == Role::user
                            ? detail::sample_word_count(rng, config.user_mu, config.user_sigma, config)
                            : detail::sample_word_count(rng, config.assistant_mu, config.assistant_sigma, config);
      spec.style = detail::sample_pool(config.style_pool.for_role(role), rng);
      if (content) spec.content_directive = detail::sample_pool(content->for_role(role), rng);
      plan.utterances.push_back(std::move(spec));
    }
  }
  return plan;
}

// Surface forms of the role markers. Parsing accepts both lexicons; rendering
// uses whichever the caller configured.
struct MarkerLexicon {
  std::string user = "user";
  std::string assistant = "assistant";
};

inline MarkerLexicon canonical_markers() { return {"user", "assistant"}; }
inline MarkerLexicon human_markers() { return {"Human", "Assistant"}; }

// Renders the plan into the dialogue template the model is asked to fill:
//   <chat><user 1>:(word count: 50 words)asks a question <assistant 1>:... </chat>
inline std::string render_template(const DialoguePlan& plan,
                                   const MarkerLexicon& markers = canonical_markers()) {
  std::string out = "<chat>";
  for (const auto& spec : plan.utterances) {
    const std::string& name = spec.role == Role::user ? markers.user : markers.assistant;
    out += "<" + name + " " + std::to_string(spec.index) + ">:(word count: " +
           std::to_string(spec.word_count) + " words)";
    out += spec.style;
    if (!spec.style.empty() && !spec.content_directive.empty()) out += " ";
    out += spec.content_directive;
    out += " ";
  }
  out += "</chat>";
  return out;
}

}  // namespace refgpt
