#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "refgpt/common.hpp"
#include "refgpt/parser.hpp"
#include "refgpt/prompt_types.hpp"
#include "refgpt/rng.hpp"

namespace refgpt {

enum class BackendKind { openai_compatible, mock };

inline std::string to_string(BackendKind k) {
  return k == BackendKind::mock ? "mock" : "openai_compatible";
}

inline BackendKind backend_kind_from_string(std::string_view s) {
  if (s == "mock") return BackendKind::mock;
  if (s == "openai_compatible" || s == "openai") return BackendKind::openai_compatible;
  throw ConfigError("unknown backend kind: " + std::string(s));
}

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4";
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 1.0;
  int max_output_tokens = 4096;
  std::chrono::milliseconds request_timeout{120000};
  int max_retries = 3;
  int requests_per_minute = 60;
  int max_in_flight = 4;
};

enum class FinishReason { stop, length, error };

inline std::string to_string(FinishReason r) {
  switch (r) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "error";
}

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct CompletionResult {
  std::string text;
  FinishReason finish_reason = FinishReason::error;
  std::optional<Usage> usage;
  std::chrono::milliseconds latency{0};
  int attempt_count = 1;
  std::string error_message;  // empty on success

  bool ok() const { return finish_reason != FinishReason::error; }
};

// ---------------------------------------------------------------------------
// Mock backend
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string_view> stub_units(Language language) {
  if (language == Language::zh) {
    static const std::vector<std::string_view> zh = {"请", "再", "详", "细", "讲", "一", "下", "吧"};
    return zh;
  }
  static const std::vector<std::string_view> en = {"Could", "you", "tell", "me",
                                                   "more",  "on",  "this", "topic"};
  return en;
}

// Extracts the reference block from a generation prompt built from the stock
// templates: the text between the first ##Provided Information## marker and
// the task sentence that cites it again.
inline std::optional<std::string_view> extract_reference_block(std::string_view user) {
  constexpr std::string_view kMarker = "##Provided Information##";
  auto begin = user.find(kMarker);
  if (begin == std::string_view::npos) return std::nullopt;
  begin += kMarker.size();
  for (std::string_view pivot : {std::string_view("Based on the ##Provided Information##"),
                                 std::string_view("基于以上##Provided Information##")}) {
    auto end = user.find(pivot, begin);
    if (end != std::string_view::npos) return trim_view(user.substr(begin, end - begin));
  }
  return std::nullopt;
}

}  // namespace detail

// Deterministic offline backend. Fills every template slot: user slots get a
// fixed interrogative stub padded to the slot's word count, assistant slots
// get the next contiguous run of reference words (wrapping when the reference
// runs out). The output always parses, and every assistant word is a
// reference word, so mock dialogues are extractively "truthful" by
// construction. This is the desk-scale oracle for the whole pipeline.
inline CompletionResult mock_complete(const PromptBundle& prompt) {
  auto ref_block = detail::extract_reference_block(prompt.user);
  if (!ref_block || ref_block->empty())
    throw Error("mock backend: no reference block found in prompt");

  auto template_begin = prompt.user.rfind("<chat>");
  if (template_begin == std::string::npos)
    throw Error("mock backend: no dialogue template found in prompt");
  std::string_view template_text = std::string_view(prompt.user).substr(template_begin);

  auto slots = parse_template_slots(template_text);
  if (slots.empty()) throw Error("mock backend: dialogue template has no slots");

  Language language = Language::en;
  if (auto it = prompt.metadata.find("language"); it != prompt.metadata.end())
    language = language_from_string(it->second);
  CountingStrategy strategy = counting_strategy_for(language);

  auto ref_units = tokenize_units(*ref_block, strategy);
  if (ref_units.empty()) throw Error("mock backend: reference block is empty");
  auto stub = detail::stub_units(language);

  std::string out = "<chat>";
  std::size_t cursor = 0;
  for (const auto& slot : slots) {
    int want = slot.word_count > 0 ? slot.word_count : 10;
    std::vector<std::string_view> units;
    units.reserve(static_cast<std::size_t>(want));
    if (slot.role == Role::user) {
      for (int j = 0; j < want; ++j) units.push_back(stub[static_cast<std::size_t>(j) % stub.size()]);
    } else {
      for (int j = 0; j < want; ++j) {
        units.push_back(ref_units[cursor % ref_units.size()]);
        ++cursor;
      }
    }
    out += "<" + slot.surface + " " + std::to_string(slot.index) + ">: ";
    out += join_units(units, strategy);
    out += " ";
  }
  out += "</chat>";

  CompletionResult result;
  result.text = std::move(out);
  result.finish_reason = FinishReason::stop;
  result.attempt_count = 1;
  return result;
}

// ---------------------------------------------------------------------------
// HTTP client plumbing
// ---------------------------------------------------------------------------

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string transport_error;  // non-empty means the request never completed

  bool network_failed() const { return !transport_error.empty(); }
};

// Sends a serialized chat-completions request body, returns the raw response.
// The real implementation lives in http_transport.hpp; tests inject scripted
// transports here.
using Transport = std::function<HttpResponse(const std::string& request_body)>;

using SleepFn = std::function<void(std::chrono::milliseconds)>;

// Debug tap for wire traffic. Only message bodies pass through here; the API
// key travels in a header and never reaches the log.
using DebugLog = std::function<void(std::string_view event, std::string_view body)>;

// Evenly spaces request starts so that no 60-second window contains more
// than requests_per_minute of them.
class RateLimiter {
 public:
  RateLimiter(int requests_per_minute, SleepFn sleep)
      : interval_(requests_per_minute > 0 ? 60'000'000'000LL / requests_per_minute : 0),
        sleep_(std::move(sleep)) {}

  void acquire() {
    if (interval_.count() == 0) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mutex_);
      auto now = std::chrono::steady_clock::now();
      if (!initialized_ || next_ < now) {
        next_ = now;
        initialized_ = true;
      }
      slot = next_;
      next_ += interval_;
    }
    auto wait = slot - std::chrono::steady_clock::now();
    if (wait.count() > 0)
      sleep_(std::chrono::duration_cast<std::chrono::milliseconds>(wait) + std::chrono::milliseconds(1));
  }

 private:
  std::chrono::nanoseconds interval_;
  SleepFn sleep_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_{};
  bool initialized_ = false;
};

class InFlightGate {
 public:
  explicit InFlightGate(int limit) : limit_(limit > 0 ? limit : 1) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return count_ < limit_; });
    ++count_;
  }

  void release() {
    {
      std::lock_guard lock(mutex_);
      --count_;
    }
    cv_.notify_one();
  }

 private:
  int limit_;
  int count_ = 0;
  std::mutex mutex_;
  std::condition_variable cv_;
};

// Thread-safe chat-completions client. Transient failures (network errors,
// timeouts, HTTP 429 and 5xx) are retried with exponential backoff and full
// jitter (base 1 s, factor 2, cap 60 s); other 4xx responses fail
// permanently. The rate limiter and in-flight gate are shared across all
// calling workers.
class ChatClient {
 public:
  explicit ChatClient(BackendConfig config, Transport transport = {}, SleepFn sleep = {})
      : config_(std::move(config)),
        transport_(std::move(transport)),
        sleep_(sleep ? std::move(sleep)
                     : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
        limiter_(config_.requests_per_minute, sleep_),
        gate_(config_.max_in_flight),
        jitter_(0x5eedf00dULL) {
    if (config_.kind == BackendKind::openai_compatible && !transport_)
      throw ConfigError("openai_compatible backend needs an HTTP transport (see http_transport.hpp)");
  }

  const BackendConfig& config() const { return config_; }

  void set_debug_log(DebugLog log) { debug_log_ = std::move(log); }

  CompletionResult complete(const PromptBundle& prompt) {
    if (config_.kind == BackendKind::mock) {
      auto start = std::chrono::steady_clock::now();
      CompletionResult result = mock_complete(prompt);
      result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      return result;
    }
    return complete_http(prompt);
  }

 private:
  CompletionResult complete_http(const PromptBundle& prompt) {
    nlohmann::json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    body["max_tokens"] = config_.max_output_tokens;
    auto messages = nlohmann::json::array();
    if (prompt.system) messages.push_back({{"role", "system"}, {"content", *prompt.system}});
    messages.push_back({{"role", "user"}, {"content", prompt.user}});
    body["messages"] = messages;
    const std::string request = body.dump();

    CompletionResult result;
    auto start = std::chrono::steady_clock::now();
    for (int attempt = 1; attempt <= config_.max_retries + 1; ++attempt) {
      result.attempt_count = attempt;
      limiter_.acquire();
      gate_.acquire();
      if (debug_log_) debug_log_("http.request", request);
      HttpResponse response = transport_(request);
      gate_.release();
      if (debug_log_)
        debug_log_("http.response",
                   response.network_failed() ? response.transport_error : response.body);

      if (!response.network_failed() && response.status == 200) {
        parse_completion(response.body, result);
        break;
      }
      bool transient = response.network_failed() || response.status == 429 || response.status >= 500;
      if (!transient) {
        result.finish_reason = FinishReason::error;
        result.error_message = "HTTP " + std::to_string(response.status) + ": " + response.body;
        break;
      }
      if (attempt > config_.max_retries) {
        result.finish_reason = FinishReason::error;
        result.error_message = response.network_failed()
                                   ? "retries exhausted: " + response.transport_error
                                   : "retries exhausted: HTTP " + std::to_string(response.status);
        break;
      }
      sleep_(backoff_delay(attempt));
    }
    result.latency =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    return result;
  }

  void parse_completion(const std::string& body, CompletionResult& result) {
    nlohmann::json parsed = nlohmann::json::parse(body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty() ||
        !parsed["choices"][0].contains("message")) {
      result.finish_reason = FinishReason::error;
      result.error_message = "malformed completion response";
      return;
    }
    const auto& choice = parsed["choices"][0];
    result.text = choice["message"].value("content", "");
    std::string reason = choice.value("finish_reason", "stop");
    result.finish_reason = reason == "length" ? FinishReason::length : FinishReason::stop;
    if (parsed.contains("usage") && parsed["usage"].is_object()) {
      Usage usage;
      usage.prompt_tokens = parsed["usage"].value("prompt_tokens", 0);
      usage.completion_tokens = parsed["usage"].value("completion_tokens", 0);
      result.usage = usage;
    }
  }

  std::chrono::milliseconds backoff_delay(int attempt) {
    double cap_ms = 60'000.0;
    double base_ms = 1'000.0;
    double ceiling = base_ms;
    for (int i = 1; i < attempt; ++i) ceiling = std::min(cap_ms, ceiling * 2.0);
    double jitter;
    {
      std::lock_guard lock(jitter_mutex_);
      jitter = jitter_.next_double();
    }
    return std::chrono::milliseconds(static_cast<std::int64_t>(ceiling * jitter));
  }

  BackendConfig config_;
  Transport transport_;
  SleepFn sleep_;
  RateLimiter limiter_;
  InFlightGate gate_;
  Rng jitter_;
  std::mutex jitter_mutex_;
  DebugLog debug_log_;
};

}  // namespace refgpt
