#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "refgpt/client.hpp"
#include "refgpt/common.hpp"
#include "refgpt/plan.hpp"
#include "refgpt/reference.hpp"

namespace refgpt {

struct ReferenceSourceConfig {
  std::filesystem::path path;
  ReferenceFormat format = ReferenceFormat::jsonl;
  Language default_language = Language::en;
  DomainTag default_domain = DomainTag::fact;
  bool strict = false;
};

struct LengthFilterConfig {
  bool enabled = true;
  double threshold = 0.8;
  LengthFilterRoles roles = LengthFilterRoles::assistant_only;
};

struct AblationSettings {
  double truncation_ratio = 1.0;
  double noise_level = 0.0;
  std::uint64_t noise_seed = 0;
  std::vector<std::string> noise_tags = default_noise_tags();
};

struct OutputConfig {
  std::filesystem::path path;  // empty: keep records in memory only
  bool drop_invalid = false;
};

enum class MarkerChoice { canonical, human };

// Everything a run needs, with CLI flags layered on top of the config file.
// The seed is mandatory and never defaulted from the clock: a run that
// cannot be reproduced is a bug, not a feature.
struct RunConfig {
  Scenario scenario = Scenario::fact;
  Language language = Language::en;
  std::optional<std::uint64_t> seed;
  ReferenceSourceConfig references;
  SamplingConfig sampling = default_sampling_config(Scenario::fact);
  BackendConfig backend;
  LengthFilterConfig length_filter;
  AblationSettings ablation;
  OutputConfig output;
  bool strict_parse = false;
  double word_tolerance = 0.5;
  MarkerChoice markers = MarkerChoice::canonical;
  std::optional<std::string> persona;
  std::optional<std::filesystem::path> prompts_dir;
};

namespace detail {

inline WeightedPool pool_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

// Pool files: one entry per line, optionally "weight<TAB>text".
inline WeightedPool load_pool_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pool file: " + path.string());
  WeightedPool pool;
  std::string line;
  while (std::getline(in, line)) {
    if (trim_view(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab != std::string::npos) {
      try {
        double weight = std::stod(line.substr(0, tab));
        pool.entries.push_back({weight, trim(line.substr(tab + 1))});
        continue;
      } catch (const std::exception&) {
        // fall through: the whole line is the entry text
      }
    }
    pool.entries.push_back({1.0, trim(line)});
  }
  return pool;
}

inline WeightedPool pool_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (j.is_string()) {
    std::filesystem::path p = j.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return load_pool_file(p);
  }
  WeightedPool pool;
  for (const auto& entry : j) {
    if (entry.is_string()) {
      pool.entries.push_back({1.0, entry.get<std::string>()});
    } else {
      pool.entries.push_back({entry.value("weight", 1.0), entry.at("text").get<std::string>()});
    }
  }
  return pool;
}

inline RolePools role_pools_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  RolePools pools;
  if (j.contains("user")) pools.user = pool_from_json(j["user"], base_dir);
  if (j.contains("assistant")) pools.assistant = pool_from_json(j["assistant"], base_dir);
  return pools;
}

inline std::filesystem::path resolve(const std::filesystem::path& base_dir, std::string_view raw) {
  std::filesystem::path p{std::string(raw)};
  return p.is_relative() ? base_dir / p : p;
}

}  // namespace detail

inline SamplingConfig sampling_config_from_json(const nlohmann::json& j, Scenario scenario,
                                                const std::filesystem::path& base_dir) {
  SamplingConfig cfg = default_sampling_config(scenario);
  if (j.contains("turn_weights")) {
    cfg.turn_weights.clear();
    for (const auto& [key, value] : j["turn_weights"].items())
      cfg.turn_weights[std::stoi(key)] = value.get<double>();
  }
  cfg.assistant_mu = j.value("assistant_mu", cfg.assistant_mu);
  cfg.assistant_sigma = j.value("assistant_sigma", cfg.assistant_sigma);
  cfg.user_mu = j.value("user_mu", cfg.user_mu);
  cfg.user_sigma = j.value("user_sigma", cfg.user_sigma);
  cfg.min_words = j.value("min_words", cfg.min_words);
  cfg.max_words = j.value("max_words", cfg.max_words);
  cfg.rounding = j.value("rounding", cfg.rounding);
  if (j.contains("style_pool")) cfg.style_pool = detail::role_pools_from_json(j["style_pool"], base_dir);
  if (j.contains("content_pools")) {
    cfg.content_pools.clear();
    for (const auto& [key, value] : j["content_pools"].items())
      cfg.content_pools[scenario_from_string(key)] = detail::role_pools_from_json(value, base_dir);
  }
  return cfg;
}

inline BackendConfig backend_config_from_json(const nlohmann::json& j) {
  BackendConfig cfg;
  if (j.contains("kind")) cfg.kind = backend_kind_from_string(j["kind"].get<std::string>());
  cfg.base_url = j.value("base_url", cfg.base_url);
  cfg.model = j.value("model", cfg.model);
  cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
  cfg.temperature = j.value("temperature", cfg.temperature);
  cfg.max_output_tokens = j.value("max_output_tokens", cfg.max_output_tokens);
  if (j.contains("request_timeout_ms"))
    cfg.request_timeout = std::chrono::milliseconds(j["request_timeout_ms"].get<std::int64_t>());
  cfg.max_retries = j.value("max_retries", cfg.max_retries);
  cfg.requests_per_minute = j.value("requests_per_minute", cfg.requests_per_minute);
  cfg.max_in_flight = j.value("max_in_flight", cfg.max_in_flight);
  return cfg;
}

// Parses a run config. Relative paths are resolved against the config file's
// directory so configs stay relocatable.
inline RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  if (j.contains("scenario")) cfg.scenario = scenario_from_string(j["scenario"].get<std::string>());
  if (j.contains("language")) cfg.language = language_from_string(j["language"].get<std::string>());
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();

  if (j.contains("references")) {
    const auto& r = j["references"];
    cfg.references.path = detail::resolve(base_dir, r.value("path", ""));
    if (r.contains("format"))
      cfg.references.format = reference_format_from_string(r["format"].get<std::string>());
    if (r.contains("default_language"))
      cfg.references.default_language = language_from_string(r["default_language"].get<std::string>());
    cfg.references.strict = r.value("strict", false);
  }
  cfg.references.default_domain = cfg.scenario == Scenario::fact ? DomainTag::fact : DomainTag::code;

  cfg.sampling = sampling_config_from_json(j.value("sampling", nlohmann::json::object()), cfg.scenario,
                                           base_dir);
  cfg.backend = backend_config_from_json(j.value("backend", nlohmann::json::object()));

  if (j.contains("length_filter")) {
    const auto& f = j["length_filter"];
    cfg.length_filter.enabled = f.value("enabled", true);
    cfg.length_filter.threshold = f.value("threshold", 0.8);
    if (f.contains("roles"))
      cfg.length_filter.roles = length_filter_roles_from_string(f["roles"].get<std::string>());
  }

  if (j.contains("ablation")) {
    const auto& a = j["ablation"];
    cfg.ablation.truncation_ratio = a.value("truncation_ratio", 1.0);
    cfg.ablation.noise_level = a.value("noise_level", 0.0);
    cfg.ablation.noise_seed = a.value("noise_seed", std::uint64_t{0});
    if (a.contains("noise_tags"))
      cfg.ablation.noise_tags = a["noise_tags"].get<std::vector<std::string>>();
  }

  if (j.contains("output")) {
    const auto& o = j["output"];
    if (o.contains("path")) cfg.output.path = detail::resolve(base_dir, o["path"].get<std::string>());
    cfg.output.drop_invalid = o.value("drop_invalid", false);
  }

  cfg.strict_parse = j.value("strict_parse", false);
  cfg.word_tolerance = j.value("word_tolerance", 0.5);
  if (j.contains("markers")) {
    std::string m = j["markers"].get<std::string>();
    if (m == "canonical") cfg.markers = MarkerChoice::canonical;
    else if (m == "human") cfg.markers = MarkerChoice::human;
    else throw ConfigError("unknown markers choice: " + m);
  }
  if (j.contains("persona") && j["persona"].is_string()) cfg.persona = j["persona"].get<std::string>();
  if (j.contains("prompts_dir")) cfg.prompts_dir = detail::resolve(base_dir, j["prompts_dir"].get<std::string>());
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j, std::filesystem::absolute(path).parent_path());
}

// Fails fast on anything a run would only discover mid-flight.
inline void validate_run_config(const RunConfig& cfg) {
  if (!cfg.seed) throw ConfigError("seed is required (there is no wall-clock default)");
  if (cfg.references.path.empty()) throw ConfigError("references.path is required");
  if (!std::filesystem::exists(cfg.references.path))
    throw ConfigError("references.path does not exist: " + cfg.references.path.string());
  if (cfg.prompts_dir && !std::filesystem::is_directory(*cfg.prompts_dir))
    throw ConfigError("prompts_dir does not exist: " + cfg.prompts_dir->string());
  if (!(cfg.length_filter.threshold > 0.0 && cfg.length_filter.threshold <= 1.0))
    throw ConfigError("length_filter.threshold must be in (0, 1]");
  if (!(cfg.ablation.truncation_ratio > 0.0 && cfg.ablation.truncation_ratio <= 1.0))
    throw ConfigError("ablation.truncation_ratio must be in (0, 1]");
  if (cfg.ablation.noise_level < 0.0 || cfg.ablation.noise_level > 1.0)
    throw ConfigError("ablation.noise_level must be in [0, 1]");
  if (cfg.sampling.turn_weights.empty()) throw ConfigError("sampling.turn_weights is empty");
  double total = 0.0;
  for (const auto& [turns, weight] : cfg.sampling.turn_weights) {
    if (turns < 1) throw ConfigError("turn counts must be >= 1");
    if (weight < 0.0) throw ConfigError("turn weights must be >= 0");
    total += weight;
  }
  if (total <= 0.0) throw ConfigError("sampling.turn_weights needs a positive weight");
  if (cfg.backend.max_in_flight < 1) throw ConfigError("backend.max_in_flight must be >= 1");
  if (cfg.backend.requests_per_minute < 1) throw ConfigError("backend.requests_per_minute must be >= 1");
}

// Snapshot for run manifests; pool contents are inlined so the manifest
// alone reproduces the run.
inline nlohmann::json to_json(const RunConfig& cfg) {
  auto pool_json = [](const WeightedPool& pool) {
    auto arr = nlohmann::json::array();
    for (const auto& e : pool.entries) arr.push_back({{"weight", e.weight}, {"text", e.text}});
    return arr;
  };
  auto role_pools_json = [&](const RolePools& pools) {
    return nlohmann::json{{"user", pool_json(pools.user)}, {"assistant", pool_json(pools.assistant)}};
  };
  nlohmann::json turn_weights = nlohmann::json::object();
  for (const auto& [turns, weight] : cfg.sampling.turn_weights)
    turn_weights[std::to_string(turns)] = weight;
  nlohmann::json content_pools = nlohmann::json::object();
  for (const auto& [scenario, pools] : cfg.sampling.content_pools)
    content_pools[to_string(scenario)] = role_pools_json(pools);

  nlohmann::json j;
  j["scenario"] = to_string(cfg.scenario);
  j["language"] = to_string(cfg.language);
  if (cfg.seed) j["seed"] = *cfg.seed;
  j["references"] = {{"path", cfg.references.path.string()},
                     {"format", cfg.references.format == ReferenceFormat::jsonl ? "jsonl" : "plain-text-per-file"},
                     {"default_language", to_string(cfg.references.default_language)},
                     {"strict", cfg.references.strict}};
  j["sampling"] = {{"turn_weights", turn_weights},
                   {"assistant_mu", cfg.sampling.assistant_mu},
                   {"assistant_sigma", cfg.sampling.assistant_sigma},
                   {"user_mu", cfg.sampling.user_mu},
                   {"user_sigma", cfg.sampling.user_sigma},
                   {"min_words", cfg.sampling.min_words},
                   {"max_words", cfg.sampling.max_words},
                   {"rounding", cfg.sampling.rounding},
                   {"style_pool", role_pools_json(cfg.sampling.style_pool)},
                   {"content_pools", content_pools}};
  j["backend"] = {{"kind", to_string(cfg.backend.kind)},
                  {"base_url", cfg.backend.base_url},
                  {"model", cfg.backend.model},
                  {"api_key_env", cfg.backend.api_key_env},
                  {"temperature", cfg.backend.temperature},
                  {"max_output_tokens", cfg.backend.max_output_tokens},
                  {"request_timeout_ms", cfg.backend.request_timeout.count()},
                  {"max_retries", cfg.backend.max_retries},
                  {"requests_per_minute", cfg.backend.requests_per_minute},
                  {"max_in_flight", cfg.backend.max_in_flight}};
  j["length_filter"] = {{"enabled", cfg.length_filter.enabled},
                        {"threshold", cfg.length_filter.threshold},
                        {"roles", cfg.length_filter.roles == LengthFilterRoles::all ? "all" : "assistant"}};
  j["ablation"] = {{"truncation_ratio", cfg.ablation.truncation_ratio},
                   {"noise_level", cfg.ablation.noise_level},
                   {"noise_seed", cfg.ablation.noise_seed},
                   {"noise_tags", cfg.ablation.noise_tags}};
  j["output"] = {{"path", cfg.output.path.string()}, {"drop_invalid", cfg.output.drop_invalid}};
  j["strict_parse"] = cfg.strict_parse;
  j["word_tolerance"] = cfg.word_tolerance;
  j["markers"] = cfg.markers == MarkerChoice::canonical ? "canonical" : "human";
  if (cfg.persona) j["persona"] = *cfg.persona;
  if (cfg.prompts_dir) j["prompts_dir"] = cfg.prompts_dir->string();
  return j;
}

}  // namespace refgpt
