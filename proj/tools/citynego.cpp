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

#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "citynego/agents/llm.hpp"
#include "citynego/harness.hpp"

using namespace citynego;

namespace {

std::vector<Mode> parse_modes(const std::string& text) {
  std::vector<Mode> modes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto m = parse_mode(item);
    if (!m) throw ConfigError("unknown mode '" + item + "'");
    modes.push_back(*m);
  }
  return modes;
}

AgentFactory llm_factory(std::shared_ptr<const Catalog> catalog) {
  auto adapter = std::make_shared<const LlmAdapter>(EndpointConfig::from_env());
  AgentFactory f;
  f.model_label = adapter->config().model;
  f.roles = [adapter, catalog](const QuerySpec&) {
    return AgentSet(std::make_unique<LlmAgent>(adapter, catalog),
                    std::make_unique<LlmAgent>(adapter, catalog),
                    std::make_unique<LlmAgent>(adapter, catalog));
  };
  f.single = [adapter, catalog](const QuerySpec&) -> std::unique_ptr<Agent> {
    return std::make_unique<LlmAgent>(adapter, catalog);
  };
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent negotiation for city trip recommendations"};

  std::string modes_text = "mami";
  std::string rejection = "majority";
  std::string tau = "0.2";
  std::string kb_path;
  std::string queries_path;
  std::string out_dir = "out";
  std::string agents = "scripted";
  bool no_timing = false;
  ExperimentConfig config;
  auto& nc = config.negotiation;

  app.add_option("--mode", modes_text, "mami|masi|sasi|toppop|randrec, comma-separated for several")
      ->capture_default_str();
  app.add_option("--rejection", rejection, "aggressive|majority")
      ->check(CLI::IsMember({"aggressive", "majority"}))
      ->capture_default_str();
  app.add_option("--tau", tau, "early-stop relative improvement over round 0, or none")
      ->capture_default_str();
  app.add_option("--k", nc.k, "list size")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--max-rounds", nc.max_rounds, "maximum negotiation rounds T")
      ->capture_default_str();
  app.add_option("--min-rounds", nc.min_rounds, "minimum negotiation rounds")->capture_default_str();
  app.add_option("--seed", nc.rng_seed, "seed for randrec and scripted agents")->capture_default_str();
  app.add_option("--kb", kb_path, "knowledge base file (JSON lines)")->required();
  app.add_option("--queries", queries_path, "query file (JSON lines)")->required();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--agents", agents, "llm | scripted[:role=behavior,...]")->capture_default_str();
  app.add_option("--workers", config.workers, "parallel queries")->capture_default_str();
  app.add_option("--correction-cycles", nc.hallucination_correction_cycles,
                 "hallucination correction passes per agent and round")
      ->capture_default_str();
  app.add_option("--max-replacements", nc.max_replacements_per_round,
                 "replacements allowed per agent and round")
      ->capture_default_str();
  app.add_flag("--no-timing", no_timing, "record zero durations so reruns are byte-identical");

  CLI11_PARSE(app, argc, argv);

  try {
    config.modes = parse_modes(modes_text);
    nc.rejection_strategy = *parse_rejection_strategy(rejection);
    if (tau == "none") {
      nc.tau.reset();
    } else {
      try {
        nc.tau = std::stod(tau);
      } catch (const std::exception&) {
        throw ConfigError("--tau must be a number or none");
      }
    }
    nc.validate();
    config.out_dir = out_dir;
    config.record_timing = !no_timing;

    auto catalog = std::make_shared<const Catalog>(load_catalog(kb_path));
    const auto queries = load_queries(queries_path);

    AgentFactory factory;
    if (agents == "llm") {
      factory = llm_factory(catalog);
    } else if (agents == "scripted" || agents.rfind("scripted:", 0) == 0) {
      const auto spec = parse_scripted_spec(agents == "scripted" ? "" : agents.substr(9));
      factory = scripted_factory(spec, catalog, nc.rng_seed);
    } else {
      throw ConfigError("--agents must be llm or scripted[:spec]");
    }

    const auto report = run_experiment(config, catalog, queries, factory);
    for (const auto& row : report.rows)
      if (row.popularity_level == "all")
        std::cout << to_string(row.mode) << ": queries=" << row.queries << " failed=" << row.failed
                  << " success=" << detail::fmt_double(row.mean_success)
                  << " gini=" << detail::fmt_optional(row.gini)
                  << " entropy=" << detail::fmt_optional(row.entropy) << "\n";
    const auto failed = report.failed_queries();
    if (!failed.empty()) {
      std::cerr << "failed queries:";
      for (const auto& f : failed) std::cerr << " " << f;
      std::cerr << "\n";
      for (const auto& o : report.outcomes)
        if (!o.ok) std::cerr << "  " << to_string(o.mode) << "/" << o.query_id << ": " << o.error << "\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
