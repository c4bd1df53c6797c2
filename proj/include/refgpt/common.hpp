#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace refgpt {

enum class Language { en, zh };
enum class Scenario { fact, code_ds, code_cr, code_bg };
enum class Role { user, assistant };
enum class DomainTag { fact, code };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline std::string to_string(Language lang) {
  return lang == Language::en ? "en" : "zh";
}

inline Language language_from_string(std::string_view s) {
  if (s == "en") return Language::en;
  if (s == "zh" || s == "cn") return Language::zh;
  throw ConfigError("unknown language: " + std::string(s));
}

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::fact: return "fact";
    case Scenario::code_ds: return "code_ds";
    case Scenario::code_cr: return "code_cr";
    case Scenario::code_bg: return "code_bg";
  }
  return "fact";
}

// Accepts both "code_ds" and the CLI spelling "code-ds".
inline Scenario scenario_from_string(std::string_view s) {
  std::string norm(s);
  for (auto& c : norm) {
    if (c == '-') c = '_';
  }
  if (norm == "fact") return Scenario::fact;
  if (norm == "code_ds") return Scenario::code_ds;
  if (norm == "code_cr") return Scenario::code_cr;
  if (norm == "code_bg") return Scenario::code_bg;
  throw ConfigError("unknown scenario: " + std::string(s));
}

inline std::string to_string(Role r) {
  return r == Role::user ? "user" : "assistant";
}

inline Role role_from_string(std::string_view s) {
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  throw ConfigError("unknown role: " + std::string(s));
}

inline std::string to_string(DomainTag d) {
  return d == DomainTag::fact ? "fact" : "code";
}

inline DomainTag domain_tag_from_string(std::string_view s) {
  if (s == "fact") return DomainTag::fact;
  if (s == "code") return DomainTag::code;
  throw ConfigError("unknown domain tag: " + std::string(s));
}

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim_view(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size() && is_ascii_space(s[b])) ++b;
  std::size_t e = s.size();
  while (e > b && is_ascii_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

inline std::string trim(std::string_view s) {
  return std::string(trim_view(s));
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  if (haystack.size() < needle.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < needle.size(); ++j) {
      if (std::tolower(static_cast<unsigned char>(haystack[i + j])) !=
          std::tolower(static_cast<unsigned char>(needle[j]))) {
        match = false;
        break;
      }
    }
    if (match) return true;
  }
  return false;
}

// Counting strategy for utterance and reference lengths. English text is
// counted in whitespace-delimited tokens; Chinese text in individual
// non-whitespace codepoints.
enum class CountingStrategy { words, chars };

inline CountingStrategy counting_strategy_for(Language lang) {
  return lang == Language::en ? CountingStrategy::words : CountingStrategy::chars;
}

inline std::string to_string(CountingStrategy s) {
  return s == CountingStrategy::words ? "words" : "chars";
}

inline CountingStrategy counting_strategy_from_string(std::string_view s) {
  if (s == "words") return CountingStrategy::words;
  if (s == "chars") return CountingStrategy::chars;
  throw ConfigError("unknown counting strategy: " + std::string(s));
}

// Splits text into countable units: whitespace-delimited tokens for `words`,
// non-whitespace UTF-8 codepoints for `chars`. Views point into `text`.
inline std::vector<std::string_view> tokenize_units(std::string_view text, CountingStrategy strategy) {
  std::vector<std::string_view> units;
  if (strategy == CountingStrategy::words) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && is_ascii_space(text[i])) ++i;
      std::size_t start = i;
      while (i < text.size() && !is_ascii_space(text[i])) ++i;
      if (i > start) units.push_back(text.substr(start, i - start));
    }
  } else {
    std::size_t i = 0;
    while (i < text.size()) {
      unsigned char lead = static_cast<unsigned char>(text[i]);
      std::size_t len = 1;
      if (lead >= 0xF0) len = 4;
      else if (lead >= 0xE0) len = 3;
      else if (lead >= 0xC0) len = 2;
      if (i + len > text.size()) len = 1;
      if (!(len == 1 && is_ascii_space(text[i]))) units.push_back(text.substr(i, len));
      i += len;
    }
  }
  return units;
}

inline std::size_t count_units(std::string_view text, CountingStrategy strategy) {
  return tokenize_units(text, strategy).size();
}

// Joins units back into text using the strategy's natural separator.
inline std::string join_units(const std::vector<std::string_view>& units, CountingStrategy strategy) {
  std::string out;
  const char* sep = strategy == CountingStrategy::words ? " " : "";
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (i > 0) out += sep;
    out.append(units[i].data(), units[i].size());
  }
  return out;
}

}  // namespace refgpt
