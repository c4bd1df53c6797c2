#pragma once

// Deterministic fixture builders shared across the test suites.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "refgpt/refgpt.hpp"

namespace fixtures {

// Plain word bank for synthetic references. Deliberately free of '<', '>'
// and braces so fixture text never collides with dialogue markers or
// template placeholders.
inline const std::vector<std::string>& word_bank() {
  static const std::vector<std::string> bank = {
      "orbit",   "granite", "lantern", "meadow",  "copper",  "harbor",  "violet", "ember",
      "quarry",  "thistle", "cobalt",  "drift",   "fathom",  "garnet",  "hollow", "ivory",
      "juniper", "kernel",  "ledger",  "marble",  "nectar",  "onyx",    "prairie", "quill",
      "russet",  "saffron", "timber",  "umber",   "vellum",  "willow",  "yonder", "zephyr"};
  return bank;
}

inline std::string word_soup(std::size_t n_words, std::uint64_t seed) {
  const auto& bank = word_bank();
  refgpt::Rng rng(seed);
  std::string out;
  for (std::size_t i = 0; i < n_words; ++i) {
    if (i > 0) out += ' ';
    out += bank[rng.next_below(bank.size() - 1)];
  }
  return out;
}

inline std::string han_soup(std::size_t n_chars, std::uint64_t seed) {
  static const std::vector<std::string> bank = {"山", "川", "河", "海", "星", "木", "光", "风",
                                                "云", "石", "路", "桥", "书", "门", "花", "田"};
  refgpt::Rng rng(seed);
  std::string out;
  for (std::size_t i = 0; i < n_chars; ++i) out += bank[rng.next_below(bank.size() - 1)];
  return out;
}

inline refgpt::Reference make_ref(const std::string& id, std::size_t n_units, std::uint64_t seed,
                                  refgpt::Language lang = refgpt::Language::en) {
  std::string text = lang == refgpt::Language::en ? word_soup(n_units, seed) : han_soup(n_units, seed);
  return refgpt::make_reference(id, text, lang,
                                refgpt::DomainTag::fact, std::nullopt, "Fixture " + id);
}

// Writes a JSONL reference corpus and returns its path.
inline std::filesystem::path write_ref_corpus(const std::filesystem::path& path, std::size_t count,
                                              std::size_t n_words, std::uint64_t seed,
                                              refgpt::Language lang = refgpt::Language::en) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (std::size_t i = 0; i < count; ++i) {
    nlohmann::json j{{"id", "ref-" + std::to_string(i)},
                     {"text", lang == refgpt::Language::en ? word_soup(n_words, seed + i)
                                                           : han_soup(n_words, seed + i)},
                     {"language", refgpt::to_string(lang)},
                     {"title", "Fixture " + std::to_string(i)}};
    out << j.dump() << '\n';
  }
  return path;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Independent subsequence oracle: every unit of `original` appears in order
// within `output`.
inline bool is_unit_subsequence(const std::string& original, const std::string& output,
                                refgpt::CountingStrategy strategy) {
  auto a = refgpt::tokenize_units(original, strategy);
  auto b = refgpt::tokenize_units(output, strategy);
  std::size_t i = 0;
  for (std::size_t j = 0; j < b.size() && i < a.size(); ++j) {
    if (a[i] == b[j]) ++i;
  }
  return i == a.size();
}

}  // namespace fixtures
