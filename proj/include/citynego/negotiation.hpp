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

#include <array>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "citynego/agents/agent.hpp"
#include "citynego/knowledge_base.hpp"
#include "citynego/moderator.hpp"
#include "citynego/query.hpp"
#include "citynego/types.hpp"

namespace citynego {

/// One agent per role, addressed in the fixed order popularity,
/// personalization, sustainability.
class AgentSet {
 public:
  AgentSet(std::unique_ptr<Agent> popularity, std::unique_ptr<Agent> personalization,
           std::unique_ptr<Agent> sustainability) {
    agents_[0] = std::move(popularity);
    agents_[1] = std::move(personalization);
    agents_[2] = std::move(sustainability);
    for (const auto& a : agents_)
      if (!a) throw std::invalid_argument("agent set needs all three roles");
  }
  Agent& at(AgentRole role) const { return *agents_[static_cast<std::size_t>(role)]; }

 private:
  std::array<std::unique_ptr<Agent>, 3> agents_;
};

/// What happened to one agent in one round.
struct AgentRoundRecord {
  AgentRole role = AgentRole::personalization;
  std::string behavior;
  std::string feedback;
  CandidateList proposed;  // before correction
  CandidateList final_list;  // after correction; used for assessment
  std::vector<FlaggedEntry> flagged;  // flagged before the first correction pass
  std::vector<DeclaredReplacement> declared_replacements;
  bool parse_repaired = false;
  int correction_cycles_used = 0;
  int replacements_made = 0;  // entries new relative to the previous round's list
  double hallucination_before_correction = 0.0;
  AgentAssessment assessment;
  UsageStats usage;
};

struct RoundLog {
  std::string query_id;
  int round = 0;
  std::vector<AgentRoundRecord> agents;
  CollectiveOffer offer;
  std::vector<CityId> rejected_added;
  std::size_t rejected_total = 0;
  double moderator_success = 0.0;
  double duration_ms = 0.0;
  TerminationDecision decision;
};

/// Moderator state carried between rounds.
struct NegotiationState {
  int round = -1;  // last completed round
  ScoreTable scores;
  std::optional<CollectiveOffer> offer;
  RejectionSet rejected;
  std::array<std::optional<CandidateList>, 3> previous_lists;
  std::array<int, 3> replacements_made{};
  std::vector<double> success_history;

  static NegotiationState initial(const Catalog& catalog) {
    NegotiationState s;
    s.scores = ScoreTable::zeros(catalog);
    return s;
  }
};

/// Round aborted (agent failure, offer shortfall). Carries every completed
/// round's log.
class NegotiationAborted : public std::runtime_error {
 public:
  NegotiationAborted(const std::string& what, std::vector<RoundLog> logs, int round)
      : std::runtime_error(what), logs_(std::move(logs)), round_(round) {}
  const std::vector<RoundLog>& partial_logs() const { return logs_; }
  int failed_round() const { return round_; }

 private:
  std::vector<RoundLog> logs_;
  int round_;
};

struct RunOptions {
  // Time source for durations; returning a constant makes logs reproducible.
  std::function<std::chrono::steady_clock::time_point()> now = [] {
    return std::chrono::steady_clock::now();
  };

  static RunOptions without_timing() {
    RunOptions o;
    o.now = [] { return std::chrono::steady_clock::time_point{}; };
    return o;
  }
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point a,
                         std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

/// Grounds every proposed name; repeated cities lose their grounding so the
/// list never holds the same city twice.
inline CandidateList ground_proposal(const std::vector<ProposedEntry>& entries, AgentRole role,
                                     int round, int k, const Catalog& catalog) {
  CandidateList list{role, round, {}};
  std::set<CityId> seen;
  for (const auto& e : entries) {
    if (list.entries.size() >= static_cast<std::size_t>(k)) break;
    auto city = catalog.ground(e.name);
    if (city && !seen.insert(*city).second) city.reset();
    list.entries.push_back({e.name, std::move(city), e.justification});
  }
  return list;
}

inline std::vector<FlaggedEntry> flag_invalid(const CandidateList& list, const Catalog& catalog,
                                              const RejectionSet& rejected) {
  std::vector<FlaggedEntry> flagged;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    const auto& e = list.entries[i];
    const int rank = static_cast<int>(i) + 1;
    if (e.city) {
      if (rejected.contains(*e.city)) flagged.push_back({rank, e.name, FlagReason::rejected});
    } else if (catalog.ground(e.name)) {
      flagged.push_back({rank, e.name, FlagReason::duplicate});
    } else {
      flagged.push_back({rank, e.name, FlagReason::ungrounded});
    }
  }
  return flagged;
}

/// Puts substitutes at their flagged ranks and re-grounds the whole list.
inline CandidateList merge_substitutes(const CandidateList& list,
                                       const std::vector<FlaggedEntry>& flagged,
                                       const ReplacementResponse& response, int k,
                                       const Catalog& catalog) {
  std::vector<ProposedEntry> entries;
  for (const auto& e : list.entries) entries.push_back({e.name, e.justification});
  for (const auto& f : flagged) {
    const auto it = response.substitutes.find(f.rank);
    if (it == response.substitutes.end()) continue;
    entries[static_cast<std::size_t>(f.rank - 1)] = it->second;
  }
  return ground_proposal(entries, list.role, list.round, k, catalog);
}

}  // namespace detail

/// Runs round `state.round + 1`. Round 0 is the opening round: agents
/// propose without an offer, reliability takes its ideal value 1, and no
/// rejections are formed. Returns the round log and advances `state`.
inline RoundLog run_round(NegotiationState& state, const QuerySpec& query, const AgentSet& agents,
                          const Catalog& catalog, const NegotiationConfig& config,
                          const RunOptions& options = {}) {
  const int t = state.round + 1;
  const bool opening = t == 0;
  const auto started = options.now();

  RoundLog log;
  log.query_id = query.query_id;
  log.round = t;

  std::vector<CandidateList> finals;
  std::vector<AgentAssessment> assessments;
  for (const auto role : kAllRoles) {
    const auto slot = static_cast<std::size_t>(role);
    Agent& agent = agents.at(role);

    AgentContext ctx;
    ctx.query_id = query.query_id;
    ctx.query_text = query.query_text;
    ctx.role = role;
    ctx.assigned_filters = query.filters.for_role(role);
    ctx.round = t;
    ctx.rejected = state.rejected;
    ctx.k = config.k;
    ctx.max_replacements = config.max_replacements_per_round;
    if (!opening) {
      ctx.current_offer = state.offer;
      ctx.own_previous_list = state.previous_lists[slot];
      if (state.offer && state.previous_lists[slot])
        ctx.feedback = generate_feedback(*state.previous_lists[slot], *state.offer,
                                         state.replacements_made[slot],
                                         config.max_replacements_per_round);
    }

    AgentRoundRecord rec;
    rec.role = role;
    rec.behavior = agent.behavior();
    rec.feedback = ctx.feedback;

    auto response = agent.propose(ctx);
    rec.usage += response.usage;
    rec.declared_replacements = response.proposal.declared_replacements;
    rec.parse_repaired = response.proposal.repaired;
    rec.proposed = detail::ground_proposal(response.proposal.entries, role, t, config.k, catalog);
    rec.hallucination_before_correction = hallucination_rate(rec.proposed, catalog, state.rejected);
    rec.flagged = detail::flag_invalid(rec.proposed, catalog, state.rejected);

    CandidateList current = rec.proposed;
    auto flagged = rec.flagged;
    for (int cycle = 0; cycle < config.hallucination_correction_cycles && !flagged.empty(); ++cycle) {
      auto replacement = agent.request_replacements(ctx, current, flagged);
      rec.usage += replacement.usage;
      current = detail::merge_substitutes(current, flagged, replacement, config.k, catalog);
      ++rec.correction_cycles_used;
      flagged = detail::flag_invalid(current, catalog, state.rejected);
    }
    rec.final_list = current;

    rec.assessment.role = role;
    rec.assessment.round = t;
    const auto role_filters = query.filters.for_role(role);
    rec.assessment.success = agent_success(current, role_filters, catalog);
    rec.assessment.reliability =
        opening || !state.previous_lists[slot] || !state.offer
            ? 1.0
            : agent_reliability(current, *state.previous_lists[slot], *state.offer, config.k);
    rec.assessment.hallucination = hallucination_rate(current, catalog, state.rejected);
    rec.replacements_made =
        state.previous_lists[slot] ? count_replacements(current, *state.previous_lists[slot]) : 0;

    finals.push_back(current);
    assessments.push_back(rec.assessment);
    log.agents.push_back(std::move(rec));
  }

  auto scores = update_scores(state.scores, finals, assessments);
  scores.round = t;
  auto rejected = opening || !state.offer
                      ? state.rejected
                      : aggregate_rejections(finals, *state.offer, config.rejection_strategy,
                                             state.rejected);
  rejected.round = t;
  for (const auto& id : rejected.rejected)
    if (!state.rejected.contains(id)) log.rejected_added.push_back(id);
  log.rejected_total = rejected.size();

  auto offer = build_collective_offer(scores, catalog, rejected, config.k);
  offer.round = t;
  log.offer = offer;
  log.moderator_success = moderator_success(offer, query.filters, catalog);
  log.duration_ms = detail::elapsed_ms(started, options.now());

  state.round = t;
  state.scores = std::move(scores);
  state.offer = std::move(offer);
  state.rejected = std::move(rejected);
  for (std::size_t i = 0; i < finals.size(); ++i) {
    state.previous_lists[i] = finals[i];
    state.replacements_made[i] = log.agents[i].replacements_made;
  }
  state.success_history.push_back(log.moderator_success);
  return log;
}

struct NegotiationResult {
  CollectiveOffer final_offer;
  std::vector<RoundLog> rounds;  // rounds[0] is the opening round
  StopReason stop_reason = StopReason::none;
  int rounds_executed = 0;  // negotiation rounds after the opening round

  UsageStats total_usage() const {
    UsageStats u;
    for (const auto& r : rounds)
      for (const auto& a : r.agents) u += a.usage;
    return u;
  }
};

/// Opening round followed by rounds 1..T until check_termination stops.
inline NegotiationResult run_negotiation(const QuerySpec& query, const AgentSet& agents,
                                         const Catalog& catalog, const NegotiationConfig& config,
                                         const RunOptions& options = {}) {
  config.validate();
  auto state = NegotiationState::initial(catalog);
  NegotiationResult result;
  while (true) {
    try {
      result.rounds.push_back(run_round(state, query, agents, catalog, config, options));
    } catch (const std::exception& e) {
      throw NegotiationAborted("query " + query.query_id + ", round " +
                                   std::to_string(state.round + 1) + ": " + e.what(),
                               std::move(result.rounds), state.round + 1);
    }
    if (state.round == 0) continue;
    const auto decision = check_termination(state.success_history, state.round, config);
    result.rounds.back().decision = decision;
    if (decision.stop) {
      result.stop_reason = decision.reason;
      break;
    }
  }
  result.final_offer = *state.offer;
  result.rounds_executed = state.round;
  return result;
}

}  // namespace citynego
