#pragma once

// Chat-completion style HTTP client. The endpoint and credential come from
// PLANVERIFY_LLM_URL and PLANVERIFY_LLM_KEY.

#include <cstdlib>
#include <string>
#include <utility>

#include "httplib.h"
#include "json.hpp"
#include "planverify/error.hpp"
#include "planverify/llm.hpp"

namespace planverify {

class HttpLlmClient : public LlmClient {
 public:
  /// `url` is a full endpoint such as `http://host:8080/v1/chat/completions`.
  HttpLlmClient(std::string url, std::string key) : key_(std::move(key)) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
      throw Error(ErrorCode::LlmUnavailable, "LLM endpoint '" + url + "' has no scheme");
    auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  }

  static HttpLlmClient from_environment() {
    const char* url = std::getenv("PLANVERIFY_LLM_URL");
    const char* key = std::getenv("PLANVERIFY_LLM_KEY");
    if (!url || !*url || !key || !*key)
      throw Error(ErrorCode::LlmUnavailable,
                  "PLANVERIFY_LLM_URL and PLANVERIFY_LLM_KEY must both be set for a live LLM");
    return HttpLlmClient(url, key);
  }

  std::string complete(const std::string& prompt, const LlmConfig& config) override {
    nlohmann::json body = {
        {"model", config.model},
        {"temperature", config.temperature},
        {"max_tokens", config.max_output_tokens},
        {"messages", {{{"role", "user"}, {"content", prompt}}}},
    };
    httplib::Client client(origin_);
    client.set_connection_timeout(config.timeout_seconds, 0);
    client.set_read_timeout(config.timeout_seconds, 0);
    client.set_write_timeout(config.timeout_seconds, 0);
    httplib::Headers headers{{"Authorization", "Bearer " + key_}};

    std::string last_error;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
      auto res = client.Post(path_, headers, body.dump(), "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "provider returned HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw Error(ErrorCode::LlmUnavailable,
                    "provider returned HTTP " + std::to_string(res->status) + ": " + res->body);
      return extract_text(res->body);
    }
    throw Error(ErrorCode::LlmUnavailable, last_error);
  }

  const std::string& origin() const noexcept { return origin_; }
  const std::string& path() const noexcept { return path_; }

 private:
  // Accepts `choices[0].message.content` or a top-level `text` field.
  static std::string extract_text(const std::string& raw) {
    auto doc = nlohmann::json::parse(raw, nullptr, false);
    if (doc.is_discarded()) throw UnparseableLlmOutput("provider response is not JSON");
    if (doc.contains("text") && doc["text"].is_string()) return doc["text"].get<std::string>();
    auto ptr = nlohmann::json::json_pointer("/choices/0/message/content");
    if (doc.contains(ptr) && doc[ptr].is_string()) return doc[ptr].get<std::string>();
    throw UnparseableLlmOutput("provider response has no text field");
  }

  std::string origin_;
  std::string path_;
  std::string key_;
};

}  // namespace planverify
