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

// Moderator scoring and decision rules. Everything here is a pure function
// of its arguments.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "citynego/knowledge_base.hpp"
#include "citynego/template.hpp"
#include "citynego/types.hpp"

namespace citynego {

/// Mean role-filter match over the list; ungrounded entries count as 0.
inline double agent_success(const CandidateList& list, std::span<const FilterSpec> role_filters,
                            const Catalog& catalog) {
  if (list.entries.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : list.entries) {
    if (!e.city) continue;
    if (const auto* rec = catalog.find(*e.city)) total += match_fraction(*rec, role_filters);
  }
  return total / static_cast<double>(list.entries.size());
}

namespace detail {

// Identity of an entry for rank-change accounting. Ungrounded names are
// tracked by their normalized text so a repeated hallucination is "kept".
inline std::string entry_key(const CandidateEntry& e) {
  return e.city ? *e.city : "?" + normalize_name(e.name);
}

inline std::map<std::string, int> rank_map(const CandidateList& list) {
  std::map<std::string, int> ranks;
  for (std::size_t i = 0; i < list.entries.size(); ++i)
    ranks.emplace(entry_key(list.entries[i]), static_cast<int>(i) + 1);
  return ranks;
}

}  // namespace detail

/// Rank-churn penalty between an agent's consecutive lists. Kept entries
/// cost their absolute rank shift, dropped entries cost k, and added entries
/// cost min(|offer rank - new rank|, k) when taken from the prior offer and
/// k otherwise.
inline double reliability_penalty(const CandidateList& current, const CandidateList& previous,
                                  const CollectiveOffer& prior_offer, int k) {
  const auto now = detail::rank_map(current);
  const auto before = detail::rank_map(previous);
  const double drop_penalty = k;
  double penalty = 0.0;
  for (const auto& [key, rank] : now) {
    if (const auto it = before.find(key); it != before.end()) {
      penalty += std::abs(rank - it->second);
    } else if (const auto offer_rank = prior_offer.rank_of(key)) {
      penalty += std::min<double>(std::abs(*offer_rank - rank), drop_penalty);
    } else {
      penalty += drop_penalty;
    }
  }
  for (const auto& [key, rank] : before)
    if (!now.count(key)) penalty += drop_penalty;
  return penalty;
}

/// d = max(0, 1 - P / (2k^2)); 2k^2 is the penalty of a full replacement by
/// cities absent from the prior offer.
inline double agent_reliability(const CandidateList& current, const CandidateList& previous,
                                const CollectiveOffer& prior_offer, int k) {
  const double p = reliability_penalty(current, previous, prior_offer, k);
  return std::clamp(1.0 - p / (2.0 * k * k), 0.0, 1.0);
}

/// Entry is usable: grounded in the catalog and not rejected.
inline bool is_valid_entry(const CandidateEntry& e, const Catalog& catalog,
                           const RejectionSet& rejected) {
  return e.city && catalog.find(*e.city) && !rejected.contains(*e.city);
}

/// Negated hit rate against the catalog minus rejected cities.
inline double hallucination_rate(const CandidateList& list, const Catalog& catalog,
                                 const RejectionSet& rejected) {
  if (list.entries.empty()) return 0.0;
  const auto valid = std::count_if(list.entries.begin(), list.entries.end(),
                                   [&](const CandidateEntry& e) {
                                     return is_valid_entry(e, catalog, rejected);
                                   });
  return -static_cast<double>(valid) / static_cast<double>(list.entries.size());
}

/// Adds one round of reciprocal-rank weighted contributions:
/// s(c,t) = s(c,t-1) + sum_a (1/rank_a(c)) * (-h_a + r_a + d_a).
inline ScoreTable update_scores(const ScoreTable& table, std::span<const CandidateList> lists,
                                std::span<const AgentAssessment> assessments) {
  ScoreTable next = table;
  for (const auto& list : lists) {
    const auto a = std::find_if(assessments.begin(), assessments.end(),
                                [&](const AgentAssessment& x) { return x.role == list.role; });
    if (a == assessments.end())
      throw std::invalid_argument("no assessment for role " + std::string(to_string(list.role)));
    const double weight = a->weight();
    std::set<CityId> seen;
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
      const auto& e = list.entries[i];
      if (!e.city || !seen.insert(*e.city).second) continue;
      const auto it = next.scores.find(*e.city);
      if (it == next.scores.end()) continue;
      it->second += weight / static_cast<double>(i + 1);
    }
    next.round = std::max(next.round, list.round);
  }
  return next;
}

class OfferShortfallError : public std::runtime_error {
 public:
  OfferShortfallError(std::size_t eligible, int k)
      : std::runtime_error("only " + std::to_string(eligible) +
                           " non-rejected cities remain, need k = " + std::to_string(k)),
        eligible_(eligible),
        k_(k) {}
  std::size_t eligible() const { return eligible_; }
  int k() const { return k_; }

 private:
  std::size_t eligible_;
  int k_;
};

/// Min-max normalizes scores over the whole catalog, drops rejected cities,
/// and keeps the k best (ties by city_id). A flat score table normalizes
/// to 1.0 everywhere.
inline CollectiveOffer build_collective_offer(const ScoreTable& table, const Catalog& catalog,
                                              const RejectionSet& rejected, int k) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& [id, rec] : catalog.cities()) {
    const double s = table.at(id);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  const double span = hi - lo;
  std::vector<OfferEntry> eligible;
  for (const auto& [id, rec] : catalog.cities()) {
    if (rejected.contains(id)) continue;
    const double norm = span > 0.0 ? std::clamp((table.at(id) - lo) / span, 0.0, 1.0) : 1.0;
    eligible.push_back({id, norm});
  }
  if (eligible.size() < static_cast<std::size_t>(k)) throw OfferShortfallError(eligible.size(), k);
  std::stable_sort(eligible.begin(), eligible.end(), [](const OfferEntry& a, const OfferEntry& b) {
    return a.score != b.score ? a.score > b.score : a.city < b.city;
  });
  eligible.resize(static_cast<std::size_t>(k));
  return CollectiveOffer{table.round, std::move(eligible)};
}

/// Rejects prior-offer cities omitted by at least one (aggressive) or at
/// least two (majority) of the agents' revised lists.
inline RejectionSet aggregate_rejections(std::span<const CandidateList> lists,
                                         const CollectiveOffer& prior_offer,
                                         RejectionStrategy strategy, const RejectionSet& rejected) {
  const std::size_t threshold = strategy == RejectionStrategy::aggressive ? 1 : 2;
  RejectionSet next = rejected;
  for (const auto& entry : prior_offer.entries) {
    const auto omitted = std::count_if(lists.begin(), lists.end(), [&](const CandidateList& l) {
      return !l.contains(entry.city);
    });
    if (static_cast<std::size_t>(omitted) >= threshold) next.rejected.insert(entry.city);
  }
  for (const auto& l : lists) next.round = std::max(next.round, l.round);
  return next;
}

/// Mean match of the offer against every user filter.
inline double moderator_success(const CollectiveOffer& offer, const FilterSet& all_filters,
                                const Catalog& catalog) {
  if (offer.entries.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : offer.entries) total += match_fraction(catalog.at(e.city), all_filters.all());
  return total / static_cast<double>(offer.entries.size());
}

// --- feedback -------------------------------------------------------------------

/// Fixed feedback texts. Placeholders: {overlap}, {list_size},
/// {replacements}, {max_replacements}.
struct FeedbackTemplates {
  std::string version = "feedback-v1";
  std::string affirming =
      "Good progress: {overlap} of your {list_size} previous candidates are part of the "
      "collective offer, and you made {replacements} of the {max_replacements} replacements "
      "allowed per round. Keep your list stable and only swap cities when a clearly better "
      "match is available in the collective offer.";
  std::string low_overlap =
      "Only {overlap} of your {list_size} previous candidates made it into the collective "
      "offer, and you made {replacements} replacements (limit {max_replacements}). Move your "
      "list closer to the collective offer and justify every change against your objective.";
  std::string limit_exceeded =
      "You made {replacements} replacements, but at most {max_replacements} are allowed per "
      "round. Keep the remaining candidates in place.";
};

inline std::size_t offer_overlap(const CandidateList& list, const CollectiveOffer& offer) {
  std::set<CityId> seen;
  for (const auto& e : list.entries)
    if (e.city && offer.contains(*e.city)) seen.insert(*e.city);
  return seen.size();
}

/// Number of entries in `current` that were not in `previous`.
inline int count_replacements(const CandidateList& current, const CandidateList& previous) {
  const auto before = detail::rank_map(previous);
  int changed = 0;
  for (const auto& [key, rank] : detail::rank_map(current))
    if (!before.count(key)) ++changed;
  return changed;
}

inline std::string generate_feedback(const CandidateList& agent_list_prev,
                                     const CollectiveOffer& offer_prev, int replacements_made,
                                     int max_replacements,
                                     const FeedbackTemplates& templates = {}) {
  const auto overlap = offer_overlap(agent_list_prev, offer_prev);
  const auto list_size = agent_list_prev.entries.size();
  const std::map<std::string, std::string> values = {
      {"overlap", std::to_string(overlap)},
      {"list_size", std::to_string(list_size)},
      {"replacements", std::to_string(replacements_made)},
      {"max_replacements", std::to_string(max_replacements)}};
  const bool exceeded = replacements_made > max_replacements;
  const bool low = 2 * overlap < list_size;
  if (!low && !exceeded) return fill_template(templates.affirming, values);
  std::string text = fill_template(templates.low_overlap, values);
  if (exceeded) text += " " + fill_template(templates.limit_exceeded, values);
  return text;
}

// --- termination ------------------------------------------------------------------

enum class StopReason { none, max_rounds, perfect, tau };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::none: return "none";
    case StopReason::max_rounds: return "max_rounds";
    case StopReason::perfect: return "perfect";
    case StopReason::tau: return "tau";
  }
  return "?";
}

struct TerminationDecision {
  bool stop = false;
  StopReason reason = StopReason::none;

  static TerminationDecision keep_going() { return {}; }
  static TerminationDecision stop_for(StopReason r) { return {true, r}; }
  friend bool operator==(const TerminationDecision&, const TerminationDecision&) = default;
};

inline constexpr double kTauEpsilon = 1e-9;
inline constexpr double kPerfectTolerance = 1e-12;

/// `history[i]` is the moderator success after round i; covers 0..t.
/// Early stopping (perfect score or relative gain >= tau over round 0) only
/// applies when tau is configured, and never before min_rounds.
inline TerminationDecision check_termination(std::span<const double> history, int t,
                                             const NegotiationConfig& config) {
  if (t >= config.max_rounds) return TerminationDecision::stop_for(StopReason::max_rounds);
  if (t < config.min_rounds) return TerminationDecision::keep_going();
  if (!config.tau) return TerminationDecision::keep_going();
  if (history.size() <= static_cast<std::size_t>(t))
    throw std::invalid_argument("success history does not cover round " + std::to_string(t));
  const double current = history[static_cast<std::size_t>(t)];
  if (current >= 1.0 - kPerfectTolerance) return TerminationDecision::stop_for(StopReason::perfect);
  const double baseline = history.front();
  if ((current - baseline) / std::max(baseline, kTauEpsilon) >= *config.tau)
    return TerminationDecision::stop_for(StopReason::tau);
  return TerminationDecision::keep_going();
}

}  // namespace citynego
