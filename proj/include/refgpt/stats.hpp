#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "refgpt/common.hpp"
#include "refgpt/parser.hpp"
#include "refgpt/postprocess.hpp"

namespace refgpt {

enum class StatsCounting { words, chars, custom };

inline std::string to_string(StatsCounting c) {
  switch (c) {
    case StatsCounting::words: return "words";
    case StatsCounting::chars: return "chars";
    case StatsCounting::custom: return "custom";
  }
  return "words";
}

struct DatasetStats {
  std::size_t n_records = 0;
  double avg_user_len = 0.0;
  double avg_assistant_len = 0.0;
  std::map<int, std::size_t> turn_histogram;  // turn count -> records
  SuccessRate parse_success;
  StatsCounting counting_strategy = StatsCounting::words;
};

// Length measure for one utterance; lets callers plug a tokenizer of their
// own in place of the built-in word/char counting.
using UnitCounter = std::function<std::size_t(std::string_view)>;

// Streaming single-pass accumulator; partial accumulators from sharded input
// merge associatively.
class StatsAccumulator {
 public:
  explicit StatsAccumulator(CountingStrategy strategy = CountingStrategy::words)
      : label_(strategy == CountingStrategy::words ? StatsCounting::words : StatsCounting::chars),
        counter_([strategy](std::string_view text) { return count_units(text, strategy); }) {}

  explicit StatsAccumulator(UnitCounter custom_counter)
      : label_(StatsCounting::custom), counter_(std::move(custom_counter)) {}

  void add(const DatasetRecord& record) {
    ++n_records_;
    turn_histogram_[static_cast<int>(record.turns.size() / 2)]++;
    for (const auto& turn : record.turns) {
      std::size_t units = counter_(turn.text);
      if (turn.role == Role::user) {
        user_units_ += units;
        ++user_utterances_;
      } else {
        assistant_units_ += units;
        ++assistant_utterances_;
      }
    }
    reports_.push_back(record.validation);
  }

  void merge(const StatsAccumulator& other) {
    n_records_ += other.n_records_;
    user_units_ += other.user_units_;
    user_utterances_ += other.user_utterances_;
    assistant_units_ += other.assistant_units_;
    assistant_utterances_ += other.assistant_utterances_;
    for (const auto& [turns, count] : other.turn_histogram_) turn_histogram_[turns] += count;
    reports_.insert(reports_.end(), other.reports_.begin(), other.reports_.end());
  }

  DatasetStats finalize() const {
    if (n_records_ == 0) throw Error("stats over an empty record stream");
    DatasetStats stats;
    stats.n_records = n_records_;
    stats.avg_user_len = user_utterances_ == 0
                             ? 0.0
                             : static_cast<double>(user_units_) / static_cast<double>(user_utterances_);
    stats.avg_assistant_len =
        assistant_utterances_ == 0
            ? 0.0
            : static_cast<double>(assistant_units_) / static_cast<double>(assistant_utterances_);
    stats.turn_histogram = turn_histogram_;
    stats.parse_success = success_rate(reports_);
    stats.counting_strategy = label_;
    return stats;
  }

 private:
  StatsCounting label_;
  UnitCounter counter_;
  std::size_t n_records_ = 0;
  std::uint64_t user_units_ = 0;
  std::size_t user_utterances_ = 0;
  std::uint64_t assistant_units_ = 0;
  std::size_t assistant_utterances_ = 0;
  std::map<int, std::size_t> turn_histogram_;
  std::vector<ValidationReport> reports_;
};

inline DatasetStats compute_stats(const std::vector<DatasetRecord>& records,
                                  CountingStrategy strategy = CountingStrategy::words) {
  StatsAccumulator acc(strategy);
  for (const auto& record : records) acc.add(record);
  return acc.finalize();
}

inline DatasetStats compute_stats(const std::vector<DatasetRecord>& records, UnitCounter counter) {
  StatsAccumulator acc(std::move(counter));
  for (const auto& record : records) acc.add(record);
  return acc.finalize();
}

enum class CallMethod { whole_dialogue, per_utterance_two_party };

// API calls needed to generate one n-turn dialogue: one call for
// whole-dialogue generation, two per turn when two models alternate
// utterance by utterance.
inline int call_count(CallMethod method, int n_turns) {
  if (n_turns < 1) throw Error("call_count: n_turns must be >= 1");
  return method == CallMethod::whole_dialogue ? 1 : 2 * n_turns;
}

}  // namespace refgpt
