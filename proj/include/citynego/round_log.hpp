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

// Line-delimited JSON records for round logs and baseline results. Field
// names are stable; downstream plotting scripts depend on them.

#include <string>

#include <json.hpp>

#include "citynego/baselines.hpp"
#include "citynego/negotiation.hpp"

namespace citynego {

using ordered_json = nlohmann::ordered_json;

inline ordered_json to_json(const UsageStats& u) {
  return {{"api_calls", u.api_calls},
          {"tokens_in", u.tokens_in},
          {"tokens_out", u.tokens_out},
          {"wall_ms", u.wall_ms}};
}

inline ordered_json to_json(const CandidateList& list) {
  ordered_json entries = ordered_json::array();
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    const auto& e = list.entries[i];
    entries.push_back({{"rank", i + 1},
                       {"name", e.name},
                       {"city", e.city ? ordered_json(*e.city) : ordered_json(nullptr)},
                       {"justification", e.justification}});
  }
  return entries;
}

inline ordered_json to_json(const CollectiveOffer& offer) {
  ordered_json entries = ordered_json::array();
  for (const auto& e : offer.entries) entries.push_back({{"city", e.city}, {"score", e.score}});
  return entries;
}

inline ordered_json to_json(const AgentRoundRecord& r) {
  ordered_json flagged = ordered_json::array();
  for (const auto& f : r.flagged)
    flagged.push_back({{"rank", f.rank}, {"name", f.name}, {"reason", to_string(f.reason)}});
  ordered_json declared = ordered_json::array();
  for (const auto& d : r.declared_replacements)
    declared.push_back({{"removed", d.removed}, {"added", d.added}, {"reason", d.reason}});
  return {{"role", to_string(r.role)},
          {"behavior", r.behavior},
          {"feedback", r.feedback},
          {"proposed", to_json(r.proposed)},
          {"final", to_json(r.final_list)},
          {"flagged", flagged},
          {"declared_replacements", declared},
          {"parse_repaired", r.parse_repaired},
          {"correction_cycles", r.correction_cycles_used},
          {"replacements_made", r.replacements_made},
          {"assessment",
           {{"success", r.assessment.success},
            {"reliability", r.assessment.reliability},
            {"hallucination", r.assessment.hallucination},
            {"hallucination_before_correction", r.hallucination_before_correction}}},
          {"usage", to_json(r.usage)}};
}

inline ordered_json to_json(const RoundLog& log, Mode mode) {
  ordered_json agents = ordered_json::array();
  for (const auto& a : log.agents) agents.push_back(to_json(a));
  return {{"query_id", log.query_id},
          {"mode", to_string(mode)},
          {"round", log.round},
          {"moderator_success", log.moderator_success},
          {"duration_ms", log.duration_ms},
          {"offer", to_json(log.offer)},
          {"rejected_added", log.rejected_added},
          {"rejected_total", log.rejected_total},
          {"termination", {{"stop", log.decision.stop}, {"reason", to_string(log.decision.reason)}}},
          {"agents", agents}};
}

inline ordered_json to_json(const BaselineResult& r, const std::string& query_id) {
  ordered_json recs = ordered_json::array();
  for (std::size_t i = 0; i < r.recommendations.size(); ++i) {
    const auto& x = r.recommendations[i];
    recs.push_back({{"rank", i + 1},
                    {"name", x.name},
                    {"city", x.city ? ordered_json(*x.city) : ordered_json(nullptr)}});
  }
  ordered_json j = {{"query_id", query_id},
                    {"mode", to_string(r.mode)},
                    {"round", 0},
                    {"moderator_success", r.moderator_success},
                    {"recommendations", recs},
                    {"usage", to_json(r.usage)}};
  if (r.round_log) j["agents"] = to_json(*r.round_log, r.mode)["agents"];
  return j;
}

}  // namespace citynego
