#pragma once

#include <map>
#include <optional>
#include <string>

namespace refgpt {

// A fully rendered request for a chat-completion backend: optional system
// message (persona), user message, plus bookkeeping metadata that travels
// with the request but is never sent over the wire.
struct PromptBundle {
  std::optional<std::string> system;
  std::string user;
  std::map<std::string, std::string> metadata;
};

}  // namespace refgpt
