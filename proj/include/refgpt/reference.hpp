#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "refgpt/common.hpp"
#include "refgpt/plan.hpp"
#include "refgpt/prompt_types.hpp"
#include "refgpt/rng.hpp"

namespace refgpt {

// A source text that grounds dialogue generation. Everything the assistant
// says is supposed to be supported by this text, so its quality bounds the
// truthfulness of whatever gets generated from it.
struct Reference {
  std::string id;
  std::string text;
  Language language = Language::en;
  DomainTag domain_tag = DomainTag::fact;
  std::optional<std::string> source_uri;
  std::optional<std::string> title;
  std::size_t word_count = 0;  // per counting_strategy_for(language)
};

inline Reference make_reference(std::string id, std::string text,
                                Language language = Language::en,
                                DomainTag domain = DomainTag::fact,
                                std::optional<std::string> source_uri = std::nullopt,
                                std::optional<std::string> title = std::nullopt) {
  if (trim_view(text).empty()) throw Error("reference text is empty: " + id);
  Reference ref;
  ref.id = std::move(id);
  ref.text = std::move(text);
  ref.language = language;
  ref.domain_tag = domain;
  ref.source_uri = std::move(source_uri);
  ref.title = std::move(title);
  ref.word_count = count_units(ref.text, counting_strategy_for(language));
  return ref;
}

// Markup-tag noise for reference-quality experiments.
struct NoiseSpec {
  double level = 0.0;  // fraction of word count to insert as tags
  std::vector<std::string> tag_vocabulary;
  std::uint64_t seed = 0;
};

// Whitespace-free on purpose: each tag stays a single countable token.
inline std::vector<std::string> default_noise_tags() {
  return {"<p>", "</p>", "<br>", "<em>", "</em>", "<a>",
          "</a>", "<li>", "</li>", "<div>", "</div>", "<span>"};
}

enum class ReferenceFormat { jsonl, plain_text_per_file };

inline ReferenceFormat reference_format_from_string(std::string_view s) {
  if (s == "jsonl") return ReferenceFormat::jsonl;
  if (s == "plain" || s == "plain-text-per-file" || s == "dir") return ReferenceFormat::plain_text_per_file;
  throw ConfigError("unknown reference format: " + std::string(s));
}

struct LoadOptions {
  Language default_language = Language::en;
  DomainTag default_domain = DomainTag::fact;
  bool strict = false;  // strict: any malformed record aborts the load
};

struct LoadResult {
  std::vector<Reference> references;
  std::vector<std::string> warnings;
  std::size_t skipped = 0;
};

namespace detail {

inline void load_warn(LoadResult& out, const LoadOptions& opts, const std::string& msg) {
  if (opts.strict) throw IoError(msg);
  out.warnings.push_back(msg);
  ++out.skipped;
}

}  // namespace detail

// Loads references from a JSONL file (fields: id?, text, language?, title?,
// source?) or from a directory of plain-text files where the id is the path
// relative to the directory. Malformed records are skipped with a warning
// unless opts.strict is set.
inline LoadResult load_references(const std::filesystem::path& source, ReferenceFormat format,
                                  const LoadOptions& opts = {}) {
  LoadResult out;
  std::unordered_set<std::string> seen_ids;

  auto add = [&](Reference ref) {
    if (!seen_ids.insert(ref.id).second) {
      detail::load_warn(out, opts, "duplicate reference id skipped: " + ref.id);
      return;
    }
    out.references.push_back(std::move(ref));
  };

  if (format == ReferenceFormat::jsonl) {
    std::ifstream in(source);
    if (!in) throw IoError("cannot open reference file: " + source.string());
    std::string stem = source.stem().string();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim_view(line).empty()) continue;
      nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.is_object()) {
        detail::load_warn(out, opts, source.string() + ":" + std::to_string(line_no) + ": not a JSON object");
        continue;
      }
      if (!rec.contains("text") || !rec["text"].is_string() ||
          trim_view(rec["text"].get<std::string>()).empty()) {
        detail::load_warn(out, opts, source.string() + ":" + std::to_string(line_no) + ": missing or empty text");
        continue;
      }
      std::string id = rec.value("id", "");
      if (id.empty()) id = stem + ":" + std::to_string(line_no);
      Language lang = opts.default_language;
      if (rec.contains("language") && rec["language"].is_string()) {
        try {
          lang = language_from_string(rec["language"].get<std::string>());
        } catch (const ConfigError&) {
          detail::load_warn(out, opts, source.string() + ":" + std::to_string(line_no) + ": bad language tag");
          continue;
        }
      }
      std::optional<std::string> title;
      if (rec.contains("title") && rec["title"].is_string()) title = rec["title"].get<std::string>();
      std::optional<std::string> uri;
      if (rec.contains("source") && rec["source"].is_string()) uri = rec["source"].get<std::string>();
      add(make_reference(id, rec["text"].get<std::string>(), lang, opts.default_domain, uri, title));
    }
  } else {
    if (!std::filesystem::is_directory(source))
      throw IoError("not a directory: " + source.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(source)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      std::ifstream in(file, std::ios::binary);
      if (!in) {
        detail::load_warn(out, opts, "unreadable file skipped: " + file.string());
        continue;
      }
      std::ostringstream buf;
      buf << in.rdbuf();
      std::string text = buf.str();
      if (trim_view(text).empty()) {
        detail::load_warn(out, opts, "empty file skipped: " + file.string());
        continue;
      }
      std::string rel = std::filesystem::relative(file, source).generic_string();
      add(make_reference(rel, std::move(text), opts.default_language, opts.default_domain,
                         file.generic_string()));
    }
  }
  return out;
}

enum class LengthFilterRoles { assistant_only, all };

inline LengthFilterRoles length_filter_roles_from_string(std::string_view s) {
  if (s == "assistant") return LengthFilterRoles::assistant_only;
  if (s == "all") return LengthFilterRoles::all;
  throw ConfigError("unknown length_filter_roles: " + std::string(s));
}

// Required dialogue length for the pre-generation reference filter: the sum
// of word-count targets over the plan's assistant utterances (or all
// utterances when roles == all).
inline std::size_t required_dialogue_length(const DialoguePlan& plan,
                                            LengthFilterRoles roles = LengthFilterRoles::assistant_only) {
  std::size_t total = 0;
  for (const auto& spec : plan.utterances) {
    if (roles == LengthFilterRoles::all || spec.role == Role::assistant)
      total += static_cast<std::size_t>(spec.word_count);
  }
  return total;
}

// True iff the reference is long enough to ground the planned dialogue:
// ref.word_count >= threshold * required length. The boundary is inclusive
// under exact rational comparison; the epsilon shields the binary rounding
// of thresholds like 0.8.
inline bool filter_by_length(const Reference& ref, const DialoguePlan& plan, double threshold = 0.8,
                             LengthFilterRoles roles = LengthFilterRoles::assistant_only) {
  std::size_t required = required_dialogue_length(plan, roles);
  if (required == 0) return true;
  auto min_words = static_cast<std::size_t>(
      std::ceil(threshold * static_cast<double>(required) - 1e-9));
  return ref.word_count >= min_words;
}

// Keeps the leading ceil(ratio * word_count) words of the reference,
// preserving the original bytes up to the cut. The id gets a ratio suffix so
// ablation outputs stay distinguishable.
inline Reference truncate_reference(const Reference& ref, double ratio, std::uint64_t /*seed*/ = 0) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("truncation ratio must be in (0, 1]");
  Reference out = ref;
  char suffix[32];
  std::snprintf(suffix, sizeof(suffix), "@%.2f", ratio);
  out.id += suffix;
  if (ratio >= 1.0) return out;

  CountingStrategy strategy = counting_strategy_for(ref.language);
  auto units = tokenize_units(ref.text, strategy);
  auto keep = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(units.size()) - 1e-9));
  if (keep == 0) keep = 1;
  if (keep >= units.size()) return out;
  const char* end = units[keep - 1].data() + units[keep - 1].size();
  out.text = ref.text.substr(0, static_cast<std::size_t>(end - ref.text.data()));
  out.word_count = count_units(out.text, strategy);
  return out;
}

// Inserts floor(level * word_count) markup tags at uniformly chosen word
// boundaries. The original words always survive as an in-order subsequence
// of the output; level 0 returns the reference byte-identical.
inline Reference inject_noise(const Reference& ref, const NoiseSpec& spec) {
  if (!(spec.level >= 0.0 && spec.level <= 1.0)) throw ConfigError("noise level must be in [0, 1]");
  if (spec.level > 0.0 && spec.tag_vocabulary.empty())
    throw ConfigError("noise tag vocabulary is empty");

  Reference out = ref;
  auto insert_count = static_cast<std::size_t>(
      std::floor(spec.level * static_cast<double>(ref.word_count) + 1e-9));
  if (insert_count == 0) return out;

  CountingStrategy strategy = counting_strategy_for(ref.language);
  auto units = tokenize_units(ref.text, strategy);
  Rng rng(spec.seed);

  // insertions[i] = tags to place before unit i (i == n means append).
  std::map<std::size_t, std::vector<std::string_view>> insertions;
  for (std::size_t k = 0; k < insert_count; ++k) {
    std::size_t pos = rng.next_below(units.size());
    std::size_t tag = rng.next_below(spec.tag_vocabulary.size() - 1);
    insertions[pos].push_back(spec.tag_vocabulary[tag]);
  }

  std::vector<std::string_view> merged;
  merged.reserve(units.size() + insert_count);
  for (std::size_t i = 0; i <= units.size(); ++i) {
    if (auto it = insertions.find(i); it != insertions.end())
      for (auto tag : it->second) merged.push_back(tag);
    if (i < units.size()) merged.push_back(units[i]);
  }
  out.text = join_units(merged, strategy);
  out.word_count = count_units(out.text, strategy);
  return out;
}

namespace detail {

// Title for the commonness probe: the explicit title field, else a short
// first line that reads like a heading.
inline std::optional<std::string> probe_title(const Reference& ref) {
  if (ref.title && !trim_view(*ref.title).empty()) return trim(*ref.title);
  auto nl = ref.text.find('\n');
  std::string_view first_line =
      nl == std::string::npos ? std::string_view(ref.text) : std::string_view(ref.text).substr(0, nl);
  first_line = trim_view(first_line);
  if (!first_line.empty() && first_line.size() <= 120) return std::string(first_line);
  return std::nullopt;
}

}  // namespace detail

// Pre-generation popularity probe: asks the backend whether it already knows
// the reference topic. Used to drop obscure encyclopedia passages before
// spending a generation call on them.
inline PromptBundle build_commonness_probe(const Reference& ref) {
  auto title = detail::probe_title(ref);
  if (!title)
    throw Error("reference " + ref.id + " has no usable title; skip the commonness filter for it");
  PromptBundle bundle;
  bundle.user = "Do you know " + *title + "? If yes, return <yes>. If no, return <no>.";
  bundle.metadata["kind"] = "commonness_probe";
  bundle.metadata["reference_id"] = ref.id;
  return bundle;
}

enum class Commonness { common, uncommon, unparseable };

inline Commonness interpret_commonness(std::string_view reply) {
  bool yes = contains_ci(reply, "<yes>");
  bool no = contains_ci(reply, "<no>");
  if (yes && !no) return Commonness::common;
  if (no && !yes) return Commonness::uncommon;
  return Commonness::unparseable;
}

}  // namespace refgpt
