// Copyright 2026 The citynego Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Chat-completion adapter. Request body:
//   {"model": M, "messages": [{"role": "user", "content": PROMPT}]}
// Expected reply:
//   {"choices": [{"message": {"content": TEXT}}],
//    "usage": {"prompt_tokens": N, "completion_tokens": M}}

#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "citynego/agents/agent.hpp"
#include "citynego/agents/parse.hpp"
#include "citynego/agents/prompt.hpp"

namespace citynego {

class LlmError : public AgentError {
 public:
  using AgentError::AgentError;
};

class LlmAuthError : public LlmError {
 public:
  using LlmError::LlmError;
};

class LlmRetriesExhausted : public LlmError {
 public:
  LlmRetriesExhausted(const std::string& what, int attempts) : LlmError(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

struct EndpointConfig {
  std::string base_url;  // e.g. http://localhost:8080/v1
  std::string api_key;
  std::string model;
  double timeout_seconds = 60.0;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};

  static constexpr const char* kBaseUrlVar = "CITYNEGO_LLM_BASE_URL";
  static constexpr const char* kApiKeyVar = "CITYNEGO_LLM_API_KEY";
  static constexpr const char* kModelVar = "CITYNEGO_LLM_MODEL";
  static constexpr const char* kTimeoutVar = "CITYNEGO_LLM_TIMEOUT";

  /// Reads the endpoint from the environment. Throws when the address or
  /// model is missing.
  static EndpointConfig from_env() {
    auto get = [](const char* name) {
      const char* v = std::getenv(name);
      return v ? std::string(v) : std::string();
    };
    EndpointConfig c;
    c.base_url = get(kBaseUrlVar);
    c.api_key = get(kApiKeyVar);
    c.model = get(kModelVar);
    if (const auto t = get(kTimeoutVar); !t.empty()) c.timeout_seconds = std::stod(t);
    if (c.base_url.empty()) throw LlmError(std::string(kBaseUrlVar) + " is not set");
    if (c.model.empty()) throw LlmError(std::string(kModelVar) + " is not set");
    return c;
  }
};

struct LlmReply {
  std::string text;
  UsageStats usage;
};

namespace detail {

// "http://host:port/v1" -> {"http://host:port", "/v1/chat/completions"}
inline std::pair<std::string, std::string> split_endpoint(const std::string& base_url) {
  const auto scheme = base_url.find("://");
  const auto path_start = base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  std::string host = path_start == std::string::npos ? base_url : base_url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  if (path.empty()) path = "/v1";
  return {host, path + "/chat/completions"};
}

inline bool retryable_status(int status) {
  return status == 408 || status == 429 || status == 500 || status == 502 || status == 503 ||
         status == 504 || status == 529;
}

// Rough token estimate used when the server reports no usage.
inline long estimate_tokens(const std::string& text) {
  return static_cast<long>((text.size() + 3) / 4);
}

}  // namespace detail

/// Sends prompts to a chat-completion endpoint with exponential backoff.
class LlmAdapter {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit LlmAdapter(EndpointConfig config,
                      Sleeper sleep = [](std::chrono::milliseconds d) {
                        std::this_thread::sleep_for(d);
                      })
      : config_(std::move(config)), sleep_(std::move(sleep)) {}

  const EndpointConfig& config() const { return config_; }

  LlmReply call(const std::string& prompt) const {
    const auto [host, path] = detail::split_endpoint(config_.base_url);
    httplib::Client client(host);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(config_.timeout_seconds));
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                                  static_cast<long>(timeout.count() % 1000000));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                            static_cast<long>(timeout.count() % 1000000));
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const nlohmann::json body = {
        {"model", config_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
    const auto payload = body.dump();

    UsageStats usage;
    std::string last_error;
    auto backoff = config_.initial_backoff;
    const auto started = std::chrono::steady_clock::now();
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
      ++usage.api_calls;
      auto res = client.Post(path, headers, payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
      } else if (res->status == 401 || res->status == 403) {
        throw LlmAuthError("authentication failed (HTTP " + std::to_string(res->status) + ")");
      } else if (res->status >= 200 && res->status < 300) {
        auto reply = parse_reply(res->body, prompt);
        reply.usage.api_calls = usage.api_calls;
        reply.usage.wall_ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - started)
                                  .count();
        return reply;
      } else if (!detail::retryable_status(res->status)) {
        throw LlmError("HTTP " + std::to_string(res->status) + ": " + res->body);
      } else {
        last_error = "HTTP " + std::to_string(res->status);
      }
      if (attempt < config_.max_attempts) {
        sleep_(backoff);
        backoff *= 2;
      }
    }
    throw LlmRetriesExhausted("giving up after " + std::to_string(config_.max_attempts) +
                                  " attempts, last error: " + last_error,
                              config_.max_attempts);
  }

 private:
  static LlmReply parse_reply(const std::string& body, const std::string& prompt) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw LlmError(std::string("unparseable reply: ") + e.what());
    }
    LlmReply r;
    try {
      r.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw LlmError("reply has no choices[0].message.content");
    }
    const auto usage = j.value("usage", nlohmann::json::object());
    r.usage.tokens_in = usage.value("prompt_tokens", detail::estimate_tokens(prompt));
    r.usage.tokens_out = usage.value("completion_tokens", detail::estimate_tokens(r.text));
    return r;
  }

  EndpointConfig config_;
  Sleeper sleep_;
};

/// Agent backed by a chat-completion model.
class LlmAgent : public Agent {
 public:
  LlmAgent(std::shared_ptr<const LlmAdapter> adapter, std::shared_ptr<const Catalog> catalog,
           PromptTemplates templates = {})
      : adapter_(std::move(adapter)), catalog_(std::move(catalog)), templates_(std::move(templates)) {}

  std::string behavior() const override { return "llm:" + adapter_->config().model; }

  AgentResponse propose(const AgentContext& ctx) override {
    auto reply = adapter_->call(build_prompt(ctx, templates_, catalog_.get()));
    AgentResponse r;
    r.proposal = parse_proposal(reply.text, ctx.k);
    r.usage = reply.usage;
    return r;
  }

  ReplacementResponse request_replacements(const AgentContext& ctx, const CandidateList&,
                                           std::span<const FlaggedEntry> flagged) override {
    auto reply =
        adapter_->call(build_replacement_prompt(ctx, flagged, templates_, catalog_.get()));
    ReplacementResponse r;
    r.usage = reply.usage;
    for (const auto& line : parse_numbered_lines(reply.text)) {
      const bool asked = std::any_of(flagged.begin(), flagged.end(),
                                     [&](const FlaggedEntry& f) { return f.rank == line.number; });
      if (asked && !r.substitutes.count(line.number)) r.substitutes[line.number] = line.entry;
    }
    return r;
  }

 private:
  std::shared_ptr<const LlmAdapter> adapter_;
  std::shared_ptr<const Catalog> catalog_;
  PromptTemplates templates_;
};

}  // namespace citynego
