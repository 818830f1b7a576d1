// Minimal JSON-over-HTTP client for local LLM servers exposing
// /api/embeddings and /api/chat.
#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "memattack/core.hpp"

namespace memattack {

struct Endpoint {
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // "" or "/something", no trailing slash

  bool operator==(const Endpoint&) const = default;
};

inline Endpoint parse_base_url(std::string_view base_url) {
  std::string url(trim(base_url));
  if (url.empty()) throw Error(ErrorCode::kConfigError, "base_url is empty");
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfigError, "base_url '" + url + "' lacks a scheme");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http") {
    throw Error(ErrorCode::kConfigError, "unsupported scheme '" + scheme + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  if (ep.origin.size() == scheme_end + 3) throw Error(ErrorCode::kConfigError, "base_url '" + url + "' lacks a host");
  if (path_start != std::string::npos) {
    ep.path_prefix = url.substr(path_start);
    while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') ep.path_prefix.pop_back();
  }
  return ep;
}

struct ChatOptions {
  double temperature = 0.1;
  double top_p = 0.9;
  int max_tokens = 1500;
};

/// Stateless client: a fresh connection per request so one instance can be
/// shared across threads.
class LlmServerClient {
 public:
  LlmServerClient(std::string_view base_url, double timeout_seconds = 30.0, int retries = 0)
      : endpoint_(parse_base_url(base_url)), timeout_seconds_(timeout_seconds), retries_(retries) {}

  const Endpoint& endpoint() const { return endpoint_; }

  nlohmann::json post_json(const std::string& path, const nlohmann::json& body) const {
    const std::string full_path = endpoint_.path_prefix + path;
    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= retries_; ++attempt) {
      httplib::Client client(endpoint_.origin);
      const auto timeout = std::chrono::duration<double>(timeout_seconds_);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
      client.set_connection_timeout(secs.count(), usecs.count());
      client.set_read_timeout(secs.count(), usecs.count());
      client.set_write_timeout(secs.count(), usecs.count());

      auto res = client.Post(full_path, payload, "application/json");
      if (!res) {
        last_error = "transport failure on " + full_path + ": " + httplib::to_string(res.error());
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        last_error = "status " + std::to_string(res->status) + " from " + full_path;
        continue;
      }
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::kBackendError, "malformed body from " + full_path + ": " + e.what());
      }
    }
    throw Error(ErrorCode::kBackendError, last_error);
  }

  /// POST /api/embeddings. Components are returned exactly as parsed.
  std::vector<double> embeddings(const std::string& model, const std::string& prompt) const {
    const auto reply = post_json("/api/embeddings", {{"model", model}, {"prompt", prompt}});
    if (!reply.is_object() || !reply.contains("embedding") || !reply["embedding"].is_array()) {
      throw Error(ErrorCode::kBackendError, "response field 'embedding' missing or not an array");
    }
    const auto& arr = reply["embedding"];
    if (arr.empty()) throw Error(ErrorCode::kBackendError, "response field 'embedding' is empty");
    std::vector<double> values;
    values.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number()) {
        throw Error(ErrorCode::kBackendError, "response field 'embedding[" + std::to_string(i) + "]' is not a number");
      }
      const double v = arr[i].get<double>();
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kBackendError, "response field 'embedding[" + std::to_string(i) + "]' is not finite");
      }
      values.push_back(v);
    }
    return values;
  }

  static nlohmann::json chat_request(const std::string& model, const std::string& prompt, const ChatOptions& opts) {
    return {
        {"model", model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        {"stream", false},
        {"options", {{"temperature", opts.temperature}, {"top_p", opts.top_p}, {"num_predict", opts.max_tokens}}},
    };
  }

  /// POST /api/chat, non-streaming. Returns message.content untouched.
  std::string chat(const std::string& model, const std::string& prompt, const ChatOptions& opts) const {
    const auto reply = post_json("/api/chat", chat_request(model, prompt, opts));
    if (!reply.is_object() || !reply.contains("message") || !reply["message"].is_object()) {
      throw Error(ErrorCode::kBackendError, "response field 'message' missing");
    }
    const auto& message = reply["message"];
    if (!message.contains("content") || !message["content"].is_string()) {
      throw Error(ErrorCode::kBackendError, "response field 'message.content' missing or not a string");
    }
    return message["content"].get<std::string>();
  }

 private:
  Endpoint endpoint_;
  double timeout_seconds_;
  int retries_;
};

}  // namespace memattack
