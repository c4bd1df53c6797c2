#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "refgpt/common.hpp"
#include "refgpt/plan.hpp"
#include "refgpt/prompt_types.hpp"
#include "refgpt/reference.hpp"
#include "refgpt/scenario_prompts.hpp"

namespace refgpt {

// Substitutes single-brace named placeholders. "{{" and "}}" escape literal
// braces; an unknown or unterminated placeholder is an error, so a rendered
// prompt can never contain a leftover {name}. Substituted values are emitted
// verbatim and never rescanned.
inline std::string render_placeholders(std::string_view text,
                                       const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '{') {
      if (i + 1 < text.size() && text[i + 1] == '{') {
        out += '{';
        i += 2;
        continue;
      }
      auto close = text.find('}', i + 1);
      if (close == std::string_view::npos)
        throw Error("unterminated placeholder in template");
      std::string name(text.substr(i + 1, close - i - 1));
      auto it = values.find(name);
      if (it == values.end()) throw Error("unknown placeholder: {" + name + "}");
      out += it->second;
      i = close + 1;
      continue;
    }
    if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
      out += '}';
      i += 2;
      continue;
    }
    out += c;
    ++i;
  }
  return out;
}

// Holds the generation prompt text for each (scenario, language). Templates
// are data: the built-in set mirrors assets/prompts/, and users can point the
// registry at their own directory to add vertical-domain scenarios.
class ScenarioRegistry {
 public:
  static ScenarioRegistry builtin() {
    ScenarioRegistry reg;
    for (Scenario s : {Scenario::fact, Scenario::code_ds, Scenario::code_cr, Scenario::code_bg})
      for (Language l : {Language::en, Language::zh})
        reg.register_template(s, l, prompts::builtin_template(s, l));
    return reg;
  }

  // Overrides built-ins with any <scenario>_<language>.txt files found in dir.
  static ScenarioRegistry load(const std::filesystem::path& dir) {
    ScenarioRegistry reg = builtin();
    if (!std::filesystem::is_directory(dir))
      throw IoError("prompt template directory not found: " + dir.string());
    for (Scenario s : {Scenario::fact, Scenario::code_ds, Scenario::code_cr, Scenario::code_bg}) {
      for (Language l : {Language::en, Language::zh}) {
        auto file = dir / (to_string(s) + "_" + to_string(l) + ".txt");
        if (!std::filesystem::exists(file)) continue;
        std::ifstream in(file, std::ios::binary);
        if (!in) throw IoError("cannot read prompt template: " + file.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        reg.register_template(s, l, buf.str());
      }
    }
    return reg;
  }

  void register_template(Scenario scenario, Language language, std::string text) {
    templates_[key(scenario, language)] = std::move(text);
  }

  const std::string* find(Scenario scenario, Language language) const {
    auto it = templates_.find(key(scenario, language));
    return it == templates_.end() ? nullptr : &it->second;
  }

  // Assembles the full generation prompt: scenario text with the reference,
  // the rendered dialogue template, and the turn count substituted in; the
  // persona, when present, becomes the system message. A reference whose
  // language differs from the plan's is flagged (non-fatal) in metadata.
  PromptBundle build_generation_prompt(const Reference& ref, const DialoguePlan& plan,
                                       const std::string& template_text,
                                       const std::optional<std::string>& persona = std::nullopt) const {
    const std::string* scenario_text = find(plan.scenario, plan.language);
    if (!scenario_text)
      throw Error("no prompt registered for scenario " + to_string(plan.scenario) + " / " +
                  to_string(plan.language));
    if (template_text.find("<chat>") == std::string::npos ||
        template_text.find("</chat>") == std::string::npos)
      throw Error("dialogue template is missing its <chat> markers");

    PromptBundle bundle;
    bundle.user = render_placeholders(*scenario_text,
                                      {{"reference", ref.text},
                                       {"dialogue_template", template_text},
                                       {"number_of_turns", std::to_string(plan.n_turns)}});
    if (persona && !persona->empty()) bundle.system = *persona;
    bundle.metadata["scenario"] = to_string(plan.scenario);
    bundle.metadata["language"] = to_string(plan.language);
    bundle.metadata["n_turns"] = std::to_string(plan.n_turns);
    bundle.metadata["reference_id"] = ref.id;
    if (ref.language != plan.language)
      bundle.metadata["warning.language_mismatch"] =
          "reference language " + to_string(ref.language) + " != dialogue language " + to_string(plan.language);
    return bundle;
  }

 private:
  static int key(Scenario s, Language l) { return static_cast<int>(s) * 2 + static_cast<int>(l); }

  std::map<int, std::string> templates_;
};

}  // namespace refgpt
