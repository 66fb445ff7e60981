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

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "citynego/knowledge_base.hpp"

namespace citynego {

/// One ranked entry of an agent's proposal. Rank is the 1-based position.
struct CandidateEntry {
  std::string name;
  std::optional<CityId> city;  // absent when the name did not ground
  std::string justification;

  friend bool operator==(const CandidateEntry&, const CandidateEntry&) = default;
};

/// An agent's ranked proposal for one round.
struct CandidateList {
  AgentRole role = AgentRole::personalization;
  int round = 0;
  std::vector<CandidateEntry> entries;

  std::size_t size() const { return entries.size(); }

  /// 1-based rank of a grounded city, or nullopt.
  std::optional<int> rank_of(std::string_view city) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (entries[i].city && *entries[i].city == city) return static_cast<int>(i) + 1;
    return std::nullopt;
  }
  bool contains(std::string_view city) const { return rank_of(city).has_value(); }

  friend bool operator==(const CandidateList&, const CandidateList&) = default;
};

struct OfferEntry {
  CityId city;
  double score = 0.0;  // min-max normalized, in [0,1]
  friend bool operator==(const OfferEntry&, const OfferEntry&) = default;
};

/// The moderator's shared ranked top-k list after a round.
struct CollectiveOffer {
  int round = 0;
  std::vector<OfferEntry> entries;

  std::size_t size() const { return entries.size(); }
  std::optional<int> rank_of(std::string_view city) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (entries[i].city == city) return static_cast<int>(i) + 1;
    return std::nullopt;
  }
  bool contains(std::string_view city) const { return rank_of(city).has_value(); }
  std::vector<CityId> cities() const {
    std::vector<CityId> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.city);
    return out;
  }

  friend bool operator==(const CollectiveOffer&, const CollectiveOffer&) = default;
};

/// Cities excluded from all future offers; only ever grows.
struct RejectionSet {
  int round = 0;
  std::set<CityId> rejected;

  bool contains(std::string_view city) const { return rejected.count(std::string(city)) > 0; }
  std::size_t size() const { return rejected.size(); }

  friend bool operator==(const RejectionSet&, const RejectionSet&) = default;
};

/// Per-agent, per-round triple. success, reliability in [0,1];
/// hallucination in [-1,0] where -1 means every entry was valid.
struct AgentAssessment {
  AgentRole role = AgentRole::personalization;
  int round = 0;
  double success = 0.0;
  double reliability = 1.0;
  double hallucination = 0.0;

  /// The additive weight used in the cumulative score: -h + r + d.
  double weight() const { return -hallucination + success + reliability; }

  friend bool operator==(const AgentAssessment&, const AgentAssessment&) = default;
};

/// Cumulative evaluation score per catalog city.
struct ScoreTable {
  int round = 0;
  std::map<CityId, double> scores;

  static ScoreTable zeros(const Catalog& catalog) {
    ScoreTable t;
    for (const auto& [id, rec] : catalog.cities()) t.scores.emplace(id, 0.0);
    return t;
  }
  double at(std::string_view city) const {
    const auto it = scores.find(std::string(city));
    return it == scores.end() ? 0.0 : it->second;
  }
};

enum class RejectionStrategy { aggressive, majority };

inline std::string_view to_string(RejectionStrategy s) {
  return s == RejectionStrategy::aggressive ? "aggressive" : "majority";
}

inline std::optional<RejectionStrategy> parse_rejection_strategy(std::string_view s) {
  if (s == "aggressive") return RejectionStrategy::aggressive;
  if (s == "majority") return RejectionStrategy::majority;
  return std::nullopt;
}

struct NegotiationConfig {
  int k = 10;
  int max_rounds = 10;
  int min_rounds = 5;
  std::optional<double> tau;  // nullopt disables early stopping
  RejectionStrategy rejection_strategy = RejectionStrategy::majority;
  int max_replacements_per_round = 3;
  int hallucination_correction_cycles = 1;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (max_rounds < 1) throw std::invalid_argument("max_rounds must be >= 1");
    if (min_rounds < 0 || min_rounds > max_rounds)
      throw std::invalid_argument("min_rounds must be in [0, max_rounds]");
    if (tau && !(*tau > 0.0)) throw std::invalid_argument("tau must be > 0");
    if (max_replacements_per_round < 0)
      throw std::invalid_argument("max_replacements_per_round must be >= 0");
    if (hallucination_correction_cycles < 0)
      throw std::invalid_argument("hallucination_correction_cycles must be >= 0");
  }
};

}  // namespace citynego
