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

#include <algorithm>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "citynego/agents/agent.hpp"
#include "citynego/knowledge_base.hpp"
#include "citynego/moderator.hpp"
#include "citynego/negotiation.hpp"
#include "citynego/query.hpp"

namespace citynego {

enum class Mode { mami, masi, sasi, toppop, randrec };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::mami: return "mami";
    case Mode::masi: return "masi";
    case Mode::sasi: return "sasi";
    case Mode::toppop: return "toppop";
    case Mode::randrec: return "randrec";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
  for (auto m : {Mode::mami, Mode::masi, Mode::sasi, Mode::toppop, Mode::randrec})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

struct Recommendation {
  std::string name;
  std::optional<CityId> city;
  friend bool operator==(const Recommendation&, const Recommendation&) = default;
};

struct BaselineResult {
  Mode mode = Mode::toppop;
  std::vector<Recommendation> recommendations;
  double moderator_success = 0.0;
  UsageStats usage;
  std::optional<RoundLog> round_log;  // sasi and masi only

  std::vector<CityId> grounded_ids() const {
    std::vector<CityId> out;
    for (const auto& r : recommendations)
      if (r.city) out.push_back(*r.city);
    return out;
  }
};

class BaselineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Moderator success over a plain ranked list; ungrounded entries score 0.
inline double list_success(const std::vector<Recommendation>& recs, const FilterSet& filters,
                           const Catalog& catalog) {
  if (recs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : recs)
    if (r.city) total += match_fraction(catalog.at(*r.city), filters.all());
  return total / static_cast<double>(recs.size());
}

namespace detail {

inline std::vector<Recommendation> from_ids(const std::vector<CityId>& ids, const Catalog& catalog) {
  std::vector<Recommendation> out;
  for (const auto& id : ids) out.push_back({catalog.at(id).display_name, id});
  return out;
}

inline void require_catalog_size(const Catalog& catalog, int k) {
  if (k < 1) throw BaselineError("k must be >= 1");
  if (catalog.size() < static_cast<std::size_t>(k))
    throw BaselineError("catalog has " + std::to_string(catalog.size()) + " cities, need k = " +
                        std::to_string(k));
}

}  // namespace detail

/// k distinct cities drawn uniformly without replacement.
inline BaselineResult rand_rec(const Catalog& catalog, int k, std::uint64_t seed,
                               const FilterSet* filters = nullptr) {
  detail::require_catalog_size(catalog, k);
  std::vector<CityId> ids;
  for (const auto& [id, rec] : catalog.cities()) ids.push_back(id);
  std::mt19937_64 rng(seed);
  std::vector<CityId> picked;
  std::sample(ids.begin(), ids.end(), std::back_inserter(picked), k, rng);
  std::shuffle(picked.begin(), picked.end(), rng);
  BaselineResult r;
  r.mode = Mode::randrec;
  r.recommendations = detail::from_ids(picked, catalog);
  if (filters) r.moderator_success = list_success(r.recommendations, *filters, catalog);
  return r;
}

/// The k most popular cities by popularity score, ties by city_id.
inline BaselineResult top_pop(const Catalog& catalog, int k, const FilterSet* filters = nullptr) {
  detail::require_catalog_size(catalog, k);
  std::vector<const CityRecord*> recs;
  for (const auto& [id, rec] : catalog.cities()) recs.push_back(&rec);
  std::stable_sort(recs.begin(), recs.end(), [](const CityRecord* a, const CityRecord* b) {
    return a->popularity_score > b->popularity_score;
  });
  std::vector<CityId> ids;
  for (int i = 0; i < k; ++i) ids.push_back(recs[static_cast<std::size_t>(i)]->city_id);
  BaselineResult r;
  r.mode = Mode::toppop;
  r.recommendations = detail::from_ids(ids, catalog);
  if (filters) r.moderator_success = list_success(r.recommendations, *filters, catalog);
  return r;
}

/// One prompt with the whole query and every filter; grounding but no
/// correction pass.
inline BaselineResult run_sasi(const QuerySpec& query, Agent& agent, const Catalog& catalog, int k,
                               const RunOptions& options = {}) {
  const auto started = options.now();
  AgentContext ctx;
  ctx.query_id = query.query_id;
  ctx.query_text = query.query_text;
  ctx.role = AgentRole::personalization;
  ctx.sole_recommender = true;
  ctx.assigned_filters = query.filters.all();
  ctx.k = k;
  ctx.max_replacements = 0;
  auto response = agent.propose(ctx);
  auto list = detail::ground_proposal(response.proposal.entries, ctx.role, 0, k, catalog);
  if (list.entries.size() != static_cast<std::size_t>(k))
    throw BaselineError("single agent returned " + std::to_string(list.entries.size()) +
                        " cities, need k = " + std::to_string(k));

  BaselineResult r;
  r.mode = Mode::sasi;
  for (const auto& e : list.entries) r.recommendations.push_back({e.name, e.city});
  r.moderator_success = list_success(r.recommendations, query.filters, catalog);
  r.usage = response.usage;

  RoundLog log;
  log.query_id = query.query_id;
  AgentRoundRecord rec;
  rec.role = ctx.role;
  rec.behavior = agent.behavior();
  rec.proposed = list;
  rec.final_list = list;
  rec.parse_repaired = response.proposal.repaired;
  rec.assessment = {ctx.role, 0, agent_success(list, ctx.assigned_filters, catalog), 1.0,
                    hallucination_rate(list, catalog, {})};
  rec.hallucination_before_correction = rec.assessment.hallucination;
  rec.usage = response.usage;
  log.agents.push_back(std::move(rec));
  log.moderator_success = r.moderator_success;
  log.duration_ms = detail::elapsed_ms(started, options.now());
  r.round_log = std::move(log);
  return r;
}

/// A single opening round of the negotiation pipeline; its offer is final.
inline BaselineResult run_masi(const QuerySpec& query, const AgentSet& agents,
                               const Catalog& catalog, const NegotiationConfig& config,
                               const RunOptions& options = {}) {
  config.validate();
  auto state = NegotiationState::initial(catalog);
  auto log = run_round(state, query, agents, catalog, config, options);
  BaselineResult r;
  r.mode = Mode::masi;
  r.recommendations = detail::from_ids(log.offer.cities(), catalog);
  r.moderator_success = log.moderator_success;
  for (const auto& a : log.agents) r.usage += a.usage;
  r.round_log = std::move(log);
  return r;
}

}  // namespace citynego
