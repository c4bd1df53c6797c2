#pragma once

// Real HTTP transport for ChatClient, kept in its own header so that the rest
// of the library (and most test binaries) compiles without cpp-httplib.
// HTTPS requires building with CPPHTTPLIB_OPENSSL_SUPPORT.

#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>

#include "refgpt/client.hpp"
#include "refgpt/common.hpp"

namespace refgpt {

namespace detail {

// Splits "https://host:port/v1" into the client origin and the path prefix.
inline void split_base_url(const std::string& base_url, std::string& origin, std::string& prefix) {
  auto scheme_end = base_url.find("://");
  std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = base_url.find('/', host_start);
  if (path_start == std::string::npos) {
    origin = base_url;
    prefix.clear();
  } else {
    origin = base_url.substr(0, path_start);
    prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  }
}

}  // namespace detail

// Builds the transport for an OpenAI-compatible chat-completions endpoint.
// The API key is read from the environment variable named in the config and
// never stored in files; a missing key is a configuration error raised
// before any request is attempted.
inline Transport make_http_transport(const BackendConfig& config) {
  const char* key = config.api_key_env.empty() ? nullptr : std::getenv(config.api_key_env.c_str());
  if (!key || !*key)
    throw ConfigError("API key environment variable is not set: " + config.api_key_env);
  std::string api_key = key;

  std::string origin, prefix;
  detail::split_base_url(config.base_url, origin, prefix);
  std::string path = prefix + "/chat/completions";
  auto timeout_s = std::max<long>(1, config.request_timeout.count() / 1000);

  auto client = std::make_shared<httplib::Client>(origin);
  client->set_connection_timeout(timeout_s, 0);
  client->set_read_timeout(timeout_s, 0);
  client->set_write_timeout(timeout_s, 0);
  client->set_bearer_token_auth(api_key);

  return [client, path](const std::string& request_body) -> HttpResponse {
    HttpResponse out;
    auto result = client->Post(path, request_body, "application/json");
    if (!result) {
      out.transport_error = httplib::to_string(result.error());
      return out;
    }
    out.status = result->status;
    out.body = result->body;
    return out;
  };
}

// Convenience constructor wiring the right transport for the backend kind.
inline ChatClient make_chat_client(const BackendConfig& config) {
  if (config.kind == BackendKind::mock) return ChatClient(config);
  return ChatClient(config, make_http_transport(config));
}

}  // namespace refgpt
