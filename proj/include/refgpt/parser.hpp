#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refgpt/common.hpp"
#include "refgpt/plan.hpp"

namespace refgpt {

enum class FailureReason {
  no_chat_start,
  no_chat_end,
  bad_index_sequence,
  role_order_violation,
  turn_count_mismatch,
  empty_utterance,
  unnumbered_marker,  // soft: lenient parsing assigned missing indices
};

inline std::string to_string(FailureReason r) {
  switch (r) {
    case FailureReason::no_chat_start: return "no_chat_start";
    case FailureReason::no_chat_end: return "no_chat_end";
    case FailureReason::bad_index_sequence: return "bad_index_sequence";
    case FailureReason::role_order_violation: return "role_order_violation";
    case FailureReason::turn_count_mismatch: return "turn_count_mismatch";
    case FailureReason::empty_utterance: return "empty_utterance";
    case FailureReason::unnumbered_marker: return "unnumbered_marker";
  }
  return "unknown";
}

inline FailureReason failure_reason_from_string(std::string_view s) {
  for (FailureReason r : {FailureReason::no_chat_start, FailureReason::no_chat_end,
                          FailureReason::bad_index_sequence, FailureReason::role_order_violation,
                          FailureReason::turn_count_mismatch, FailureReason::empty_utterance,
                          FailureReason::unnumbered_marker}) {
    if (to_string(r) == s) return r;
  }
  throw ConfigError("unknown failure reason: " + std::string(s));
}

struct Turn {
  Role role = Role::user;
  int index = 1;
  std::string text;
  std::size_t word_count = 0;
};

struct ParsedDialogue {
  std::vector<Turn> turns;  // user 1, assistant 1, user 2, ...
  bool had_end_marker = false;
  bool recovered = false;                // lenient recovery was applied
  bool had_unnumbered_markers = false;   // indices were assigned by position
  bool trailing_text_discarded = false;  // text after </chat> was dropped
};

struct ParseError {
  FailureReason reason = FailureReason::no_chat_start;
  std::string message;
  bool had_end_marker = false;  // kept so failed parses can still be stratified
};

struct ParseResult {
  std::optional<ParsedDialogue> dialogue;
  std::optional<ParseError> error;

  bool ok() const { return dialogue.has_value(); }
};

namespace detail {

inline bool ci_eq(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

struct RawMarker {
  std::size_t begin = 0;  // offset of '<'
  std::size_t end = 0;    // one past '>'
  Role role = Role::user;
  std::optional<int> index;
  std::string surface;  // marker word as written ("user", "Human", ...)
};

// Matches <word [number]> at text[pos], tolerating whitespace inside the
// angle brackets. Returns nullopt when this '<' does not open a role marker.
inline std::optional<RawMarker> match_role_marker(std::string_view text, std::size_t pos) {
  std::size_t i = pos + 1;
  while (i < text.size() && is_ascii_space(text[i])) ++i;
  std::size_t word_start = i;
  while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
  std::string_view word = text.substr(word_start, i - word_start);
  Role role;
  if (ci_eq(word, "user") || ci_eq(word, "human")) role = Role::user;
  else if (ci_eq(word, "assistant")) role = Role::assistant;
  else return std::nullopt;
  while (i < text.size() && is_ascii_space(text[i])) ++i;
  std::optional<int> index;
  if (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    long v = 0;
    std::size_t digits = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])) && digits < 9) {
      v = v * 10 + (text[i] - '0');
      ++i;
      ++digits;
    }
    if (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
    index = static_cast<int>(v);
  }
  while (i < text.size() && is_ascii_space(text[i])) ++i;
  if (i >= text.size() || text[i] != '>') return std::nullopt;
  RawMarker m;
  m.begin = pos;
  m.end = i + 1;
  m.role = role;
  m.index = index;
  m.surface = std::string(word);
  return m;
}

// Matches <tag> (e.g. "chat", "/chat") case-insensitively at text[pos].
inline std::optional<std::size_t> match_simple_tag(std::string_view text, std::size_t pos,
                                                   std::string_view tag) {
  std::size_t i = pos + 1;
  while (i < text.size() && is_ascii_space(text[i])) ++i;
  if (text.size() - i < tag.size() || !ci_eq(text.substr(i, tag.size()), tag)) return std::nullopt;
  i += tag.size();
  while (i < text.size() && is_ascii_space(text[i])) ++i;
  if (i >= text.size() || text[i] != '>') return std::nullopt;
  return i + 1;
}

inline std::size_t find_tag(std::string_view text, std::string_view tag, std::size_t from,
                            std::size_t* end_out = nullptr) {
  for (std::size_t i = from; i < text.size(); ++i) {
    if (text[i] != '<') continue;
    if (auto end = match_simple_tag(text, i, tag)) {
      if (end_out) *end_out = *end;
      return i;
    }
  }
  return std::string_view::npos;
}

// Strips the optional leading separator and echoed word-count annotation from
// a slot payload: ": (word count: 300 words) actual text" -> "actual text".
// Returns the annotated number when one was present.
inline std::optional<int> strip_annotation(std::string_view& payload) {
  std::size_t i = 0;
  while (i < payload.size() && is_ascii_space(payload[i])) ++i;
  if (i < payload.size() && payload[i] == ':') ++i;
  while (i < payload.size() && is_ascii_space(payload[i])) ++i;
  std::optional<int> words;
  if (i < payload.size() && payload[i] == '(') {
    auto close = payload.find(')', i + 1);
    if (close != std::string_view::npos) {
      std::string_view inside = payload.substr(i + 1, close - i - 1);
      if (contains_ci(inside, "word count")) {
        long v = -1;
        for (std::size_t j = 0; j < inside.size(); ++j) {
          if (std::isdigit(static_cast<unsigned char>(inside[j]))) {
            v = 0;
            while (j < inside.size() && std::isdigit(static_cast<unsigned char>(inside[j])) && v < 100000000)
              v = v * 10 + (inside[j++] - '0');
            break;
          }
        }
        if (v >= 0) words = static_cast<int>(v);
        i = close + 1;
        while (i < payload.size() && is_ascii_space(payload[i])) ++i;
      }
    }
  }
  payload.remove_prefix(i);
  return words;
}

struct RawSlot {
  RawMarker marker;
  std::optional<int> annotated_words;
  std::string_view payload;  // annotation stripped, not yet trimmed
};

// Collects the role-marker slots inside a <chat> body.
inline std::vector<RawSlot> scan_slots(std::string_view body) {
  std::vector<RawMarker> markers;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '<') continue;
    if (auto m = match_role_marker(body, i)) {
      markers.push_back(*m);
      i = m->end - 1;
    }
  }
  std::vector<RawSlot> slots;
  slots.reserve(markers.size());
  for (std::size_t k = 0; k < markers.size(); ++k) {
    std::size_t text_end = k + 1 < markers.size() ? markers[k + 1].begin : body.size();
    RawSlot slot;
    slot.marker = markers[k];
    slot.payload = body.substr(markers[k].end, text_end - markers[k].end);
    slot.annotated_words = strip_annotation(slot.payload);
    slots.push_back(slot);
  }
  return slots;
}

}  // namespace detail

// One slot of a rendered dialogue template, as seen by mock backends and
// diagnostics tooling.
struct TemplateSlot {
  Role role = Role::user;
  int index = 1;
  int word_count = 0;
  std::string surface;     // marker word to echo back
  std::string directives;  // style/content text after the annotation
};

inline std::vector<TemplateSlot> parse_template_slots(std::string_view template_text) {
  std::size_t start_end = 0;
  std::size_t start = detail::find_tag(template_text, "chat", 0, &start_end);
  if (start == std::string_view::npos) throw Error("template has no <chat> marker");
  std::size_t end = detail::find_tag(template_text, "/chat", start_end);
  std::string_view body = template_text.substr(
      start_end, (end == std::string_view::npos ? template_text.size() : end) - start_end);
  std::vector<TemplateSlot> slots;
  for (const auto& raw : detail::scan_slots(body)) {
    TemplateSlot slot;
    slot.role = raw.marker.role;
    slot.index = raw.marker.index.value_or(static_cast<int>(slots.size() / 2) + 1);
    slot.word_count = raw.annotated_words.value_or(0);
    slot.surface = raw.marker.surface;
    slot.directives = trim(raw.payload);
    slots.push_back(std::move(slot));
  }
  return slots;
}

// Parses a completion into turns. Strict mode fails on the first structural
// defect; lenient mode recovers where the format allows it: a missing </chat>
// parses up to the last complete assistant turn, unnumbered markers get
// positional indices (flagged), and a dangling user turn is dropped.
// Total over arbitrary input: never throws on malformed text.
inline ParseResult parse_dialogue(std::string_view text, bool lenient,
                                  CountingStrategy strategy = CountingStrategy::words) {
  ParseResult result;
  auto fail = [&](FailureReason reason, std::string message, bool had_end) {
    result.error = ParseError{reason, std::move(message), had_end};
    return result;
  };

  std::size_t start_end = 0;
  std::size_t start = detail::find_tag(text, "chat", 0, &start_end);
  if (start == std::string_view::npos)
    return fail(FailureReason::no_chat_start, "no <chat> start marker", false);

  std::size_t end_tag_end = 0;
  std::size_t end = detail::find_tag(text, "/chat", start_end, &end_tag_end);
  bool had_end_marker = end != std::string_view::npos;
  if (!had_end_marker && !lenient)
    return fail(FailureReason::no_chat_end, "no </chat> end marker", false);

  std::string_view body = text.substr(start_end, (had_end_marker ? end : text.size()) - start_end);
  auto slots = detail::scan_slots(body);
  if (slots.empty())
    return fail(FailureReason::role_order_violation, "no role markers inside <chat>", had_end_marker);

  ParsedDialogue dialogue;
  dialogue.had_end_marker = had_end_marker;

  for (std::size_t k = 0; k < slots.size(); ++k) {
    const auto& slot = slots[k];
    Role expected_role = k % 2 == 0 ? Role::user : Role::assistant;
    int expected_index = static_cast<int>(k / 2) + 1;
    if (slot.marker.role != expected_role)
      return fail(FailureReason::role_order_violation,
                  "expected <" + to_string(expected_role) + " " + std::to_string(expected_index) +
                      "> at position " + std::to_string(k + 1),
                  had_end_marker);
    if (!slot.marker.index) {
      if (!lenient)
        return fail(FailureReason::bad_index_sequence, "unnumbered marker <" + slot.marker.surface + ">",
                    had_end_marker);
      dialogue.had_unnumbered_markers = true;
    } else if (*slot.marker.index != expected_index) {
      return fail(FailureReason::bad_index_sequence,
                  "expected index " + std::to_string(expected_index) + ", found " +
                      std::to_string(*slot.marker.index),
                  had_end_marker);
    }
    Turn turn;
    turn.role = slot.marker.role;
    turn.index = expected_index;
    turn.text = trim(slot.payload);
    turn.word_count = count_units(turn.text, strategy);
    if (turn.text.empty() && !lenient)
      return fail(FailureReason::empty_utterance,
                  "empty utterance at <" + slot.marker.surface + " " + std::to_string(expected_index) + ">",
                  had_end_marker);
    dialogue.turns.push_back(std::move(turn));
  }

  if (dialogue.turns.size() % 2 != 0) {
    if (!lenient)
      return fail(FailureReason::role_order_violation, "dangling user turn without a reply",
                  had_end_marker);
    dialogue.turns.pop_back();
    dialogue.recovered = true;
    if (dialogue.turns.empty())
      return fail(FailureReason::role_order_violation, "no complete turn pair", had_end_marker);
  }
  if (!had_end_marker) dialogue.recovered = true;
  if (dialogue.had_unnumbered_markers) dialogue.recovered = true;
  if (had_end_marker && !trim_view(text.substr(end_tag_end)).empty())
    dialogue.trailing_text_discarded = true;

  result.dialogue = std::move(dialogue);
  return result;
}

struct ValidationReport {
  bool obeys_template = false;
  bool turn_count_match = false;
  bool end_marker_present = false;
  bool recovered = false;
  std::vector<double> word_count_deviations;  // (actual - target) / target, plan order
  std::size_t n_beyond_tolerance = 0;
  std::vector<FailureReason> failure_reasons;
};

// Checks a parsed dialogue against its plan. Word-count deviations are
// reported as diagnostics, never as a validity gate: generators routinely
// shorten utterances to stay inside the reference. Likewise a missing
// </chat> is recorded (for stratified reporting) but does not by itself
// disqualify an otherwise complete dialogue.
inline ValidationReport validate(const ParsedDialogue& parsed, const DialoguePlan& plan,
                                 double word_tolerance = 0.5) {
  ValidationReport report;
  report.end_marker_present = parsed.had_end_marker;
  report.recovered = parsed.recovered;

  auto add_unique = [&](FailureReason r) {
    for (auto existing : report.failure_reasons)
      if (existing == r) return;
    report.failure_reasons.push_back(r);
  };

  report.turn_count_match = parsed.turns.size() == plan.utterances.size() &&
                            static_cast<int>(parsed.turns.size() / 2) == plan.n_turns;
  if (!report.turn_count_match) add_unique(FailureReason::turn_count_mismatch);
  if (parsed.had_unnumbered_markers) add_unique(FailureReason::unnumbered_marker);

  CountingStrategy strategy = counting_strategy_for(plan.language);
  std::size_t n = std::min(parsed.turns.size(), plan.utterances.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Turn& turn = parsed.turns[i];
    const UtteranceSpec& spec = plan.utterances[i];
    if (turn.role != spec.role) add_unique(FailureReason::role_order_violation);
    if (turn.index != spec.index) add_unique(FailureReason::bad_index_sequence);
    if (trim_view(turn.text).empty()) add_unique(FailureReason::empty_utterance);
    double target = spec.word_count > 0 ? static_cast<double>(spec.word_count) : 1.0;
    double actual = static_cast<double>(count_units(turn.text, strategy));
    double deviation = (actual - target) / target;
    report.word_count_deviations.push_back(deviation);
    if (deviation > word_tolerance || deviation < -word_tolerance) ++report.n_beyond_tolerance;
  }

  report.obeys_template = report.failure_reasons.empty();
  return report;
}

// Report for a completion that did not parse at all.
inline ValidationReport failed_validation(const ParseError& err) {
  ValidationReport report;
  report.end_marker_present = err.had_end_marker;
  report.failure_reasons.push_back(err.reason);
  return report;
}

struct SuccessRate {
  std::size_t n_total = 0, n_obeying = 0;
  std::size_t n_with = 0, n_with_obeying = 0;
  std::size_t n_without = 0, n_without_obeying = 0;

  double overall() const {
    return static_cast<double>(n_obeying) / static_cast<double>(n_total);
  }
  std::optional<double> with_end_marker() const {
    if (n_with == 0) return std::nullopt;
    return static_cast<double>(n_with_obeying) / static_cast<double>(n_with);
  }
  std::optional<double> without_end_marker() const {
    if (n_without == 0) return std::nullopt;
    return static_cast<double>(n_without_obeying) / static_cast<double>(n_without);
  }
};

// Template-obedience rate, overall and stratified by whether the completion
// produced the </chat> end marker. Counts are kept exact; any rounding is
// left to the presentation layer.
inline SuccessRate success_rate(const std::vector<ValidationReport>& reports) {
  if (reports.empty()) throw Error("success_rate over an empty report list");
  SuccessRate rate;
  for (const auto& report : reports) {
    ++rate.n_total;
    if (report.obeys_template) ++rate.n_obeying;
    if (report.end_marker_present) {
      ++rate.n_with;
      if (report.obeys_template) ++rate.n_with_obeying;
    } else {
      ++rate.n_without;
      if (report.obeys_template) ++rate.n_without_obeying;
    }
  }
  return rate;
}

}  // namespace refgpt
