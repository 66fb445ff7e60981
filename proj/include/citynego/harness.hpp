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

// Experiment harness: runs one or more modes over a query set and writes
// round logs, a summary report and plot-ready series.
//
// Output layout under the output directory:
//   logs/<mode>/<query_id>.jsonl   one record per round (or one per baseline)
//   report.csv                     one row per (mode, model, rejection, tau, popularity level)
//   pairwise.csv                   Welch tests between modes, Bonferroni corrected
//   plot/<mode>/assessments.csv    round,role,success,reliability,hallucination,...
//   plot/<mode>/success.csv        round,moderator_success,queries
//   plot/<mode>/duration.csv       round,mean_duration_ms,queries

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "citynego/agents/scripted.hpp"
#include "citynego/baselines.hpp"
#include "citynego/metrics.hpp"
#include "citynego/negotiation.hpp"
#include "citynego/query.hpp"
#include "citynego/round_log.hpp"

namespace citynego {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// --- scripted agent specs -----------------------------------------------------

/// One scripted behavior, e.g. "popular@0.5", "hallucinating@0.3",
/// "replay@Porto|Lyon".
struct BehaviorSpec {
  std::string name;
  std::string param;
};

/// Behaviors for the three roles plus the single agent used by sasi.
struct ScriptedSpec {
  BehaviorSpec popularity{"longtail", ""};
  BehaviorSpec personalization{"greedy", ""};
  BehaviorSpec sustainability{"greedy", ""};
  BehaviorSpec single{"popular", "0.2"};
};

inline BehaviorSpec parse_behavior(const std::string& text) {
  BehaviorSpec b;
  const auto at = text.find('@');
  b.name = text.substr(0, at);
  if (at != std::string::npos) b.param = text.substr(at + 1);
  static const std::set<std::string> known = {"greedy",        "popular",  "longtail",
                                              "hallucinating", "stubborn", "replay"};
  if (!known.count(b.name)) throw ConfigError("unknown scripted behavior '" + b.name + "'");
  if (b.name == "replay" && b.param.empty()) throw ConfigError("replay needs a city list");
  return b;
}

/// "role=behavior[@param],..." with roles popularity, personalization,
/// sustainability and single. Empty text keeps the defaults.
inline ScriptedSpec parse_scripted_spec(const std::string& text) {
  ScriptedSpec spec;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("expected role=behavior, got '" + item + "'");
    const auto role = item.substr(0, eq);
    const auto behavior = parse_behavior(item.substr(eq + 1));
    if (role == "popularity") spec.popularity = behavior;
    else if (role == "personalization") spec.personalization = behavior;
    else if (role == "sustainability") spec.sustainability = behavior;
    else if (role == "single") spec.single = behavior;
    else throw ConfigError("unknown role '" + role + "' in agent spec");
  }
  return spec;
}

/// Share of its own filters an offer city must match for a scripted
/// greedy or longtail agent to keep it. Above 1 the agent never concedes.
inline constexpr double kDefaultAcceptance = 0.5;

inline double param_or(const BehaviorSpec& b, double fallback) {
  if (b.param.empty()) return fallback;
  try {
    return std::stod(b.param);
  } catch (const std::exception&) {
    throw ConfigError("behavior " + b.name + " has non-numeric parameter '" + b.param + "'");
  }
}

inline std::unique_ptr<Agent> make_scripted_agent(const BehaviorSpec& b,
                                                  std::shared_ptr<const Catalog> catalog,
                                                  std::uint64_t seed) {
  auto conceding = [&](auto agent) {
    const double threshold = param_or(b, kDefaultAcceptance);
    if (threshold <= 1.0) agent->concede_to_offer(threshold);
    return agent;
  };
  if (b.name == "greedy") return conceding(std::make_unique<GreedyFilterAgent>(catalog));
  if (b.name == "longtail") return conceding(std::make_unique<LongTailAgent>(catalog));
  if (b.name == "popular")
    return std::make_unique<PopularityBiasedAgent>(catalog, param_or(b, 0.0), seed);
  if (b.name == "hallucinating" || b.name == "stubborn")
    return std::make_unique<HallucinatingAgent>(std::make_unique<GreedyFilterAgent>(catalog),
                                                param_or(b, 0.3), seed, b.name == "hallucinating");
  if (b.name == "replay") {
    std::vector<std::string> names;
    std::stringstream ss(b.param);
    std::string n;
    while (std::getline(ss, n, '|'))
      if (!n.empty()) names.push_back(n);
    return std::make_unique<ReplayAgent>(std::move(names));
  }
  throw ConfigError("unknown scripted behavior '" + b.name + "'");
}

// --- experiment -------------------------------------------------------------------

/// Builds the agents for one query. Called once per (mode, query) task on
/// the worker that runs it.
struct AgentFactory {
  std::function<AgentSet(const QuerySpec&)> roles;
  std::function<std::unique_ptr<Agent>(const QuerySpec&)> single;
  std::string model_label = "scripted";
};

inline AgentFactory scripted_factory(const ScriptedSpec& spec, std::shared_ptr<const Catalog> catalog,
                                     std::uint64_t seed) {
  AgentFactory f;
  f.roles = [spec, catalog, seed](const QuerySpec&) {
    return AgentSet(make_scripted_agent(spec.popularity, catalog, seed),
                    make_scripted_agent(spec.personalization, catalog, seed + 1),
                    make_scripted_agent(spec.sustainability, catalog, seed + 2));
  };
  f.single = [spec, catalog, seed](const QuerySpec&) {
    return make_scripted_agent(spec.single, catalog, seed + 3);
  };
  return f;
}

struct ExperimentConfig {
  std::vector<Mode> modes = {Mode::mami};
  NegotiationConfig negotiation;
  std::filesystem::path out_dir = "out";
  int workers = 1;
  bool record_timing = true;
};

/// Outcome of one (mode, query) task.
struct QueryOutcome {
  Mode mode = Mode::mami;
  std::string query_id;
  Level popularity_level = Level::medium;
  bool ok = false;
  std::string error;
  std::vector<CityId> final_ids;
  double moderator_success = 0.0;
  int rounds_executed = 0;
  StopReason stop_reason = StopReason::none;
  UsageStats usage;
  double wall_ms = 0.0;
  std::vector<RoundLog> rounds;  // empty for randrec/toppop
};

struct ReportRow {
  Mode mode = Mode::mami;
  std::string popularity_level;  // "all" or a level
  int queries = 0;
  int failed = 0;
  double mean_success = 0.0;
  std::optional<double> gini;
  std::optional<double> entropy;
  double mean_rounds = 0.0;
  UsageStats usage;
  double wall_ms = 0.0;
};

struct PairwiseRow {
  Mode a = Mode::mami;
  Mode b = Mode::mami;
  TestResult test;
  double corrected_p = 1.0;
};

struct ExperimentReport {
  std::vector<QueryOutcome> outcomes;  // mode-major, queries in input order
  std::vector<ReportRow> rows;
  std::vector<PairwiseRow> pairwise;

  std::vector<std::string> failed_queries() const {
    std::vector<std::string> out;
    for (const auto& o : outcomes)
      if (!o.ok) out.push_back(std::string(to_string(o.mode)) + "/" + o.query_id);
    return out;
  }
};

inline QueryOutcome run_query(Mode mode, const QuerySpec& query, const Catalog& catalog,
                              const AgentFactory& factory, const ExperimentConfig& config) {
  const auto options = config.record_timing ? RunOptions{} : RunOptions::without_timing();
  QueryOutcome o;
  o.mode = mode;
  o.query_id = query.query_id;
  o.popularity_level = query.popularity_level;
  const auto started = options.now();
  try {
    auto take_baseline = [&](BaselineResult r) {
      o.final_ids = r.grounded_ids();
      o.moderator_success = r.moderator_success;
      o.usage = r.usage;
      if (r.round_log) o.rounds.push_back(std::move(*r.round_log));
    };
    const int k = config.negotiation.k;
    switch (mode) {
      case Mode::randrec:
        take_baseline(rand_rec(catalog, k, derive_seed(config.negotiation.rng_seed, query.query_id, 0),
                               &query.filters));
        break;
      case Mode::toppop: take_baseline(top_pop(catalog, k, &query.filters)); break;
      case Mode::sasi: {
        auto agent = factory.single(query);
        take_baseline(run_sasi(query, *agent, catalog, k, options));
        break;
      }
      case Mode::masi:
        take_baseline(run_masi(query, factory.roles(query), catalog, config.negotiation, options));
        break;
      case Mode::mami: {
        try {
          auto res = run_negotiation(query, factory.roles(query), catalog, config.negotiation, options);
          o.final_ids = res.final_offer.cities();
          o.moderator_success = res.rounds.back().moderator_success;
          o.rounds_executed = res.rounds_executed;
          o.stop_reason = res.stop_reason;
          o.usage = res.total_usage();
          o.rounds = std::move(res.rounds);
        } catch (const NegotiationAborted& e) {
          o.rounds = e.partial_logs();
          throw;
        }
        break;
      }
    }
    o.ok = true;
  } catch (const std::exception& e) {
    o.ok = false;
    o.error = e.what();
  }
  o.wall_ms = detail::elapsed_ms(started, options.now());
  return o;
}

inline void write_query_log(const std::filesystem::path& path, const QueryOutcome& o,
                            const Catalog& catalog) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (o.mode == Mode::mami) {
    for (const auto& r : o.rounds) out << to_json(r, o.mode).dump() << "\n";
  } else if (o.ok) {
    BaselineResult b;
    b.mode = o.mode;
    for (const auto& id : o.final_ids) b.recommendations.push_back({catalog.at(id).display_name, id});
    if (!o.rounds.empty()) {
      // sasi keeps ungrounded names in place
      const auto& first = o.rounds.front();
      if (o.mode == Mode::sasi && !first.agents.empty()) {
        b.recommendations.clear();
        for (const auto& e : first.agents.front().final_list.entries)
          b.recommendations.push_back({e.name, e.city});
      }
      b.round_log = first;
    }
    b.moderator_success = o.moderator_success;
    b.usage = o.usage;
    out << to_json(b, o.query_id).dump() << "\n";
  }
  if (!o.ok) {
    ordered_json err = {{"query_id", o.query_id}, {"mode", to_string(o.mode)}, {"error", o.error}};
    out << err.dump() << "\n";
  }
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string fmt_optional(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string();
}

inline std::string tau_label(const NegotiationConfig& c) {
  return c.tau ? fmt_double(*c.tau) : std::string("none");
}

}  // namespace detail

inline std::vector<ReportRow> summarize(const std::vector<QueryOutcome>& outcomes,
                                        const std::vector<Mode>& modes) {
  std::vector<ReportRow> rows;
  for (const auto mode : modes) {
    for (const std::string level : {"all", "low", "medium", "high"}) {
      ReportRow row;
      row.mode = mode;
      row.popularity_level = level;
      std::vector<std::vector<CityId>> finals;
      double success = 0.0;
      double rounds = 0.0;
      for (const auto& o : outcomes) {
        if (o.mode != mode) continue;
        if (level != "all" && to_string(o.popularity_level) != level) continue;
        ++row.queries;
        row.usage += o.usage;
        row.wall_ms += o.wall_ms;
        if (!o.ok) {
          ++row.failed;
          continue;
        }
        success += o.moderator_success;
        rounds += o.rounds_executed;
        finals.push_back(o.final_ids);
      }
      if (row.queries == 0) continue;
      const auto ok = static_cast<double>(row.queries - row.failed);
      if (ok > 0) {
        row.mean_success = success / ok;
        row.mean_rounds = rounds / ok;
      }
      const auto dist = collect_distribution(finals);
      if (!dist.support().empty()) {
        row.gini = gini(dist);
        row.entropy = normalized_entropy(dist);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

/// Welch tests on per-query moderator success for every pair of modes,
/// Bonferroni corrected by the number of pairs.
inline std::vector<PairwiseRow> pairwise_tests(const std::vector<QueryOutcome>& outcomes,
                                               const std::vector<Mode>& modes) {
  std::map<Mode, std::vector<double>> samples;
  for (const auto& o : outcomes)
    if (o.ok) samples[o.mode].push_back(o.moderator_success);
  std::vector<PairwiseRow> rows;
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t j = i + 1; j < modes.size(); ++j) {
      const auto& a = samples[modes[i]];
      const auto& b = samples[modes[j]];
      if (a.size() < 2 || b.size() < 2) continue;
      rows.push_back({modes[i], modes[j], welch_t_test(a, b), 1.0});
    }
  std::vector<double> p;
  for (const auto& r : rows) p.push_back(r.test.p_value);
  const auto corrected = bonferroni(p, std::max<int>(1, static_cast<int>(rows.size())));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].corrected_p = corrected[i];
  return rows;
}

inline void write_report(const std::filesystem::path& dir, const ExperimentReport& report,
                         const ExperimentConfig& config, const std::string& model) {
  std::ofstream out(dir / "report.csv", std::ios::binary);
  out << "mode,model,rejection,tau,popularity_level,queries,failed,mean_success,gini,entropy,"
         "mean_rounds,api_calls,tokens_in,tokens_out,wall_ms\n";
  for (const auto& r : report.rows) {
    const bool baseline = r.mode == Mode::randrec || r.mode == Mode::toppop;
    out << to_string(r.mode) << "," << (baseline ? "none" : model) << ","
        << to_string(config.negotiation.rejection_strategy) << ","
        << detail::tau_label(config.negotiation) << "," << r.popularity_level << "," << r.queries
        << "," << r.failed << "," << detail::fmt_double(r.mean_success) << ","
        << detail::fmt_optional(r.gini) << "," << detail::fmt_optional(r.entropy) << ","
        << detail::fmt_double(r.mean_rounds) << "," << r.usage.api_calls << ","
        << r.usage.tokens_in << "," << r.usage.tokens_out << "," << detail::fmt_double(r.wall_ms)
        << "\n";
  }
  std::ofstream pw(dir / "pairwise.csv", std::ios::binary);
  pw << "mode_a,mode_b,statistic,dof,p_value,corrected_p,significant\n";
  for (const auto& r : report.pairwise)
    pw << to_string(r.a) << "," << to_string(r.b) << "," << detail::fmt_double(r.test.statistic)
       << "," << detail::fmt_double(r.test.dof) << "," << detail::fmt_double(r.test.p_value) << ","
       << detail::fmt_double(r.corrected_p) << "," << (r.corrected_p < 0.05 ? "yes" : "no") << "\n";
}

/// Per-round means across queries. Multi-round runs list rounds 1..T;
/// single-round modes list their one round.
inline void emit_plot_data(const std::filesystem::path& dir, Mode mode,
                           const std::vector<std::vector<RoundLog>>& runs) {
  bool any = false;
  for (const auto& r : runs) any = any || !r.empty();
  if (!any) throw std::invalid_argument("no round logs to plot for mode " + std::string(to_string(mode)));
  const bool skip_opening = mode == Mode::mami;

  struct Acc {
    double success = 0, duration = 0;
    int n = 0;
  };
  std::map<int, Acc> by_round;
  std::map<int, std::map<std::string, std::array<double, 5>>> by_role;  // r,d,h,h0,n
  for (const auto& run : runs)
    for (const auto& log : run) {
      if (skip_opening && log.round == 0) continue;
      auto& acc = by_round[log.round];
      acc.success += log.moderator_success;
      acc.duration += log.duration_ms;
      ++acc.n;
      for (const auto& a : log.agents) {
        auto& x = by_role[log.round][std::string(to_string(a.role))];
        x[0] += a.assessment.success;
        x[1] += a.assessment.reliability;
        x[2] += a.assessment.hallucination;
        x[3] += a.hallucination_before_correction;
        x[4] += 1;
      }
    }

  std::filesystem::create_directories(dir);
  std::ofstream assess(dir / "assessments.csv", std::ios::binary);
  assess << "round,role,success,reliability,hallucination,hallucination_before_correction,queries\n";
  for (const auto& [round, roles] : by_role)
    for (const auto& [role, x] : roles)
      assess << round << "," << role << "," << detail::fmt_double(x[0] / x[4]) << ","
             << detail::fmt_double(x[1] / x[4]) << "," << detail::fmt_double(x[2] / x[4]) << ","
             << detail::fmt_double(x[3] / x[4]) << "," << static_cast<int>(x[4]) << "\n";
  std::ofstream success(dir / "success.csv", std::ios::binary);
  success << "round,moderator_success,queries\n";
  std::ofstream duration(dir / "duration.csv", std::ios::binary);
  duration << "round,mean_duration_ms,queries\n";
  for (const auto& [round, acc] : by_round) {
    success << round << "," << detail::fmt_double(acc.success / acc.n) << "," << acc.n << "\n";
    duration << round << "," << detail::fmt_double(acc.duration / acc.n) << "," << acc.n << "\n";
  }
}

/// Runs every (mode, query) pair on a pool of `config.workers` threads and
/// writes all artifacts. Per-query failures are recorded, not thrown.
inline ExperimentReport run_experiment(const ExperimentConfig& config,
                                       std::shared_ptr<const Catalog> catalog,
                                       const std::vector<QuerySpec>& queries,
                                       const AgentFactory& factory) {
  config.negotiation.validate();
  if (config.modes.empty()) throw ConfigError("no modes selected");
  if (config.workers < 1) throw ConfigError("workers must be >= 1");
  if (queries.empty()) throw ConfigError("query set is empty");

  struct Task {
    Mode mode;
    const QuerySpec* query;
  };
  std::vector<Task> tasks;
  for (const auto mode : config.modes)
    for (const auto& q : queries) tasks.push_back({mode, &q});

  ExperimentReport report;
  report.outcomes.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (auto i = next++; i < tasks.size(); i = next++) {
      auto outcome = run_query(tasks[i].mode, *tasks[i].query, *catalog, factory, config);
      write_query_log(config.out_dir / "logs" / std::string(to_string(outcome.mode)) /
                          (outcome.query_id + ".jsonl"),
                      outcome, *catalog);
      report.outcomes[i] = std::move(outcome);
    }
  };
  std::filesystem::create_directories(config.out_dir);
  {
    std::vector<std::jthread> pool;
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(config.workers), tasks.size());
    for (std::size_t w = 1; w < n; ++w) pool.emplace_back(work);
    work();
  }

  report.rows = summarize(report.outcomes, config.modes);
  report.pairwise = pairwise_tests(report.outcomes, config.modes);
  write_report(config.out_dir, report, config, factory.model_label);
  for (const auto mode : config.modes) {
    std::vector<std::vector<RoundLog>> runs;
    for (const auto& o : report.outcomes)
      if (o.mode == mode && o.ok) runs.push_back(o.rounds);
    bool any = false;
    for (const auto& r : runs) any = any || !r.empty();
    if (any) emit_plot_data(config.out_dir / "plot" / std::string(to_string(mode)), mode, runs);
  }
  return report;
}

}  // namespace citynego
