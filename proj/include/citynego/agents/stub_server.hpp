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

// Local chat-completion server that replays canned responses in order.
// Fixture file format:
//   {"responses": [{"status": 200, "content": "1. Porto - ...",
//                   "prompt_tokens": 120, "completion_tokens": 40},
//                  {"status": 503}]}
// After the list is exhausted the last response repeats.

#include <atomic>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace citynego {

struct CannedResponse {
  int status = 200;
  std::string content;
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

inline std::vector<CannedResponse> parse_stub_fixture(const nlohmann::json& j) {
  std::vector<CannedResponse> out;
  for (const auto& r : j.at("responses")) {
    CannedResponse c;
    c.status = r.value("status", 200);
    c.content = r.value("content", std::string());
    c.prompt_tokens = r.value("prompt_tokens", 0L);
    c.completion_tokens = r.value("completion_tokens", 0L);
    out.push_back(std::move(c));
  }
  if (out.empty()) throw std::invalid_argument("stub fixture has no responses");
  return out;
}

inline std::vector<CannedResponse> load_stub_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stub fixture '" + path + "'");
  return parse_stub_fixture(nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true));
}

class StubChatServer {
 public:
  explicit StubChatServer(std::vector<CannedResponse> responses) : responses_(std::move(responses)) {
    server_.Post(R"(/.*chat/completions)", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      requests_.push_back(req.body);
      const auto& c = responses_[std::min(next_, responses_.size() - 1)];
      ++next_;
      res.status = c.status;
      if (c.status >= 200 && c.status < 300) {
        const nlohmann::json body = {
            {"choices", nlohmann::json::array({{{"message", {{"role", "assistant"},
                                                              {"content", c.content}}}}})},
            {"usage", {{"prompt_tokens", c.prompt_tokens}, {"completion_tokens", c.completion_tokens}}}};
        res.set_content(body.dump(), "application/json");
      } else {
        res.set_content(R"({"error":{"type":"overloaded"}})", "application/json");
      }
    });
  }

  ~StubChatServer() { stop(); }
  StubChatServer(const StubChatServer&) = delete;
  StubChatServer& operator=(const StubChatServer&) = delete;

  /// Binds to localhost on a free port (or `port`) and serves in the background.
  int start(int port = 0) {
    port_ = port > 0 && server_.bind_to_port("127.0.0.1", port) ? port
                                                                : server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("stub server could not bind");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  /// Serves on the calling thread until stopped.
  void serve_forever(int port) {
    if (!server_.listen("127.0.0.1", port)) throw std::runtime_error("stub server could not bind");
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::size_t calls() const {
    std::lock_guard lock(mutex_);
    return next_;
  }
  std::vector<std::string> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  httplib::Server server_;
  std::vector<CannedResponse> responses_;
  mutable std::mutex mutex_;
  std::size_t next_ = 0;
  std::vector<std::string> requests_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace citynego
