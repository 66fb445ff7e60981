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

// Serves a stub chat-completion endpoint from a fixture file, for running
// the llm agent path without a real model.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "citynego/agents/stub_server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stub chat-completion server"};
  std::string fixture;
  int port = 8089;
  app.add_option("--fixture", fixture, "JSON fixture with canned responses")->required();
  app.add_option("--port", port, "port on 127.0.0.1")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  try {
    citynego::StubChatServer server(citynego::load_stub_fixture(fixture));
    std::cout << "serving http://127.0.0.1:" << port << "/v1\n" << std::flush;
    server.serve_forever(port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
