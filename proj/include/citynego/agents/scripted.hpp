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

// Deterministic agents used for testing and offline experiments. Each one is
// a pure function of (context, seed).

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "citynego/agents/agent.hpp"
#include "citynego/knowledge_base.hpp"
#include "citynego/text.hpp"

namespace citynego {

/// Names guaranteed not to exist in any real catalog.
inline const std::vector<std::string>& invented_city_names() {
  static const std::vector<std::string> names = {
      "Atlantis",  "Zembla",   "Ruritania", "Latveria", "Genovia",  "Elbonia",
      "Florin",    "Markovia", "Sokovia",   "Borduria", "Syldavia", "Freedonia",
      "Graustark", "Vulgaria", "Kravunia",  "Molvania", "Pottsylvania", "Tomainia"};
  return names;
}

/// Seed for one (agent seed, query, round) combination.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view query_id, int round) {
  return stable_hash(query_id, seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(round));
}

/// Base for agents that rank the catalog by a fixed preference and always
/// propose their top-k non-rejected cities. Replacement requests are
/// answered with the next preferred city not already in the list.
class PreferenceAgent : public Agent {
 public:
  explicit PreferenceAgent(std::shared_ptr<const Catalog> catalog) : catalog_(std::move(catalog)) {}

  /// Keep offer cities matching at least `threshold` of the agent's own
  /// filters; the remaining slots follow the agent's ranking.
  void concede_to_offer(double threshold) { acceptance_ = threshold; }
  std::optional<double> acceptance() const { return acceptance_; }

  AgentResponse propose(const AgentContext& ctx) override {
    std::set<CityId> kept;
    if (acceptance_ && ctx.current_offer) {
      for (const auto& e : ctx.current_offer->entries)
        if (!ctx.rejected.contains(e.city) &&
            match_fraction(catalog_->at(e.city), ctx.assigned_filters) >= *acceptance_)
          kept.insert(e.city);
    }
    const auto k = static_cast<std::size_t>(ctx.k);
    std::size_t free_slots = k > kept.size() ? k - kept.size() : 0;
    AgentResponse r;
    for (const auto& id : ranking(ctx)) {
      if (r.proposal.entries.size() >= k) break;
      if (ctx.rejected.contains(id)) continue;
      if (!kept.count(id)) {
        if (free_slots == 0) continue;
        --free_slots;
      }
      r.proposal.entries.push_back({catalog_->at(id).display_name, justify(ctx, id)});
    }
    return r;
  }

  ReplacementResponse request_replacements(const AgentContext& ctx, const CandidateList& current,
                                           std::span<const FlaggedEntry> flagged) override {
    std::set<CityId> taken;
    for (const auto& e : current.entries)
      if (e.city) taken.insert(*e.city);
    ReplacementResponse r;
    auto order = ranking(ctx);
    auto next = order.begin();
    for (const auto& f : flagged) {
      while (next != order.end() && (taken.count(*next) || ctx.rejected.contains(*next))) ++next;
      if (next == order.end()) break;
      taken.insert(*next);
      r.substitutes[f.rank] = {catalog_->at(*next).display_name, justify(ctx, *next)};
      ++next;
    }
    return r;
  }

  const Catalog& catalog() const { return *catalog_; }

 protected:
  /// Full catalog in preference order.
  virtual std::vector<CityId> ranking(const AgentContext& ctx) const = 0;
  virtual std::string justify(const AgentContext& ctx, const CityId& id) const {
    (void)ctx;
    (void)id;
    return behavior() + " preference";
  }

  std::vector<CityId> all_ids() const {
    std::vector<CityId> ids;
    for (const auto& [id, rec] : catalog_->cities()) ids.push_back(id);
    return ids;
  }

 private:
  std::shared_ptr<const Catalog> catalog_;
  std::optional<double> acceptance_;
};

/// Ranks by match fraction on the agent's own filters, ties by city_id.
class GreedyFilterAgent : public PreferenceAgent {
 public:
  using PreferenceAgent::PreferenceAgent;
  std::string behavior() const override { return "greedy"; }

 protected:
  std::vector<CityId> ranking(const AgentContext& ctx) const override {
    auto ids = all_ids();
    std::vector<double> score;
    for (const auto& id : ids) score.push_back(match_fraction(catalog().at(id), ctx.assigned_filters));
    std::vector<std::size_t> idx(ids.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return score[a] > score[b];  // ids already ascending
    });
    std::vector<CityId> out;
    for (auto i : idx) out.push_back(ids[i]);
    return out;
  }
  std::string justify(const AgentContext& ctx, const CityId& id) const override {
    const auto m = match_fraction(catalog().at(id), ctx.assigned_filters);
    return "matches " + std::to_string(static_cast<int>(std::lround(m * 100))) + "% of my filters";
  }
};

/// Ranks by popularity score, ignoring filters. With a positive temperature
/// the order is a seeded Plackett-Luce draw with weights score^(1/temperature),
/// fixed per (seed, query) so it stays the same across rounds.
class PopularityBiasedAgent : public PreferenceAgent {
 public:
  PopularityBiasedAgent(std::shared_ptr<const Catalog> catalog, double temperature = 0.0,
                        std::uint64_t seed = 0)
      : PreferenceAgent(std::move(catalog)), temperature_(temperature), seed_(seed) {}
  std::string behavior() const override { return "popular"; }

 protected:
  std::vector<CityId> ranking(const AgentContext& ctx) const override {
    auto ids = all_ids();
    std::stable_sort(ids.begin(), ids.end(), [&](const CityId& a, const CityId& b) {
      return catalog().at(a).popularity_score > catalog().at(b).popularity_score;
    });
    if (temperature_ <= 0.0) return ids;
    // Gumbel-top-k trick: sorting by log w + Gumbel noise samples a
    // Plackett-Luce permutation.
    std::mt19937_64 rng(derive_seed(seed_, ctx.query_id, 0));
    std::uniform_real_distribution<double> unif(std::numeric_limits<double>::min(), 1.0);
    std::vector<std::pair<double, CityId>> keyed;
    for (const auto& id : ids) {
      const double w = std::max(catalog().at(id).popularity_score, 1e-9);
      const double gumbel = -std::log(-std::log(unif(rng)));
      keyed.emplace_back(std::log(w) / temperature_ + gumbel, id);
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<CityId> out;
    for (auto& [key, id] : keyed) out.push_back(std::move(id));
    return out;
  }
  std::string justify(const AgentContext&, const CityId& id) const override {
    return "a favourite of travellers (popularity " +
           std::to_string(static_cast<int>(std::lround(catalog().at(id).popularity_score))) + ")";
  }

 private:
  double temperature_;
  std::uint64_t seed_;
};

/// Cities satisfying all of the agent's filters first, least popular first;
/// then the rest by match fraction and ascending popularity.
class LongTailAgent : public PreferenceAgent {
 public:
  using PreferenceAgent::PreferenceAgent;
  std::string behavior() const override { return "longtail"; }

 protected:
  std::vector<CityId> ranking(const AgentContext& ctx) const override {
    auto ids = all_ids();
    std::stable_sort(ids.begin(), ids.end(), [&](const CityId& a, const CityId& b) {
      const auto& ca = catalog().at(a);
      const auto& cb = catalog().at(b);
      const double ma = match_fraction(ca, ctx.assigned_filters);
      const double mb = match_fraction(cb, ctx.assigned_filters);
      if (ma != mb) return ma > mb;
      return ca.popularity_score < cb.popularity_score;
    });
    return ids;
  }
  std::string justify(const AgentContext&, const CityId& id) const override {
    return "under-visited (" + std::string(to_string(catalog().at(id).popularity)) +
           " popularity)";
  }
};

/// Returns the same fixed list every round and never substitutes.
class ReplayAgent : public Agent {
 public:
  explicit ReplayAgent(std::vector<std::string> names) : names_(std::move(names)) {}
  std::string behavior() const override { return "replay"; }

  AgentResponse propose(const AgentContext& ctx) override {
    AgentResponse r;
    for (const auto& n : names_) {
      if (r.proposal.entries.size() >= static_cast<std::size_t>(ctx.k)) break;
      r.proposal.entries.push_back({n, "replayed"});
    }
    return r;
  }

  ReplacementResponse request_replacements(const AgentContext&, const CandidateList&,
                                           std::span<const FlaggedEntry> flagged) override {
    ReplacementResponse r;
    for (const auto& f : flagged) r.substitutes[f.rank] = {f.name, "replayed"};
    return r;
  }

 private:
  std::vector<std::string> names_;
};

/// Wraps a preference agent and overwrites round(rate * k) seeded positions
/// with invented city names. A compliant agent answers replacement requests
/// through the wrapped agent; a stubborn one repeats the flagged names.
class HallucinatingAgent : public Agent {
 public:
  HallucinatingAgent(std::unique_ptr<PreferenceAgent> inner, double rate, std::uint64_t seed,
                     bool compliant = true)
      : inner_(std::move(inner)), rate_(std::clamp(rate, 0.0, 1.0)), seed_(seed),
        compliant_(compliant) {}

  std::string behavior() const override {
    return (compliant_ ? "hallucinating+" : "stubborn+") + inner_->behavior();
  }

  /// Positions (0-based) that will be overwritten for this context.
  std::vector<std::size_t> injected_positions(const AgentContext& ctx, std::size_t list_size) const {
    auto count = static_cast<std::size_t>(std::lround(rate_ * static_cast<double>(list_size)));
    if (rate_ > 0.0 && count == 0 && list_size > 0) count = 1;
    std::vector<std::size_t> pos(list_size);
    std::iota(pos.begin(), pos.end(), 0);
    std::mt19937_64 rng(derive_seed(seed_, ctx.query_id, ctx.round));
    for (std::size_t i = 0; i < count && i < pos.size(); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pos.size() - 1);
      std::swap(pos[i], pos[pick(rng)]);
    }
    pos.resize(std::min(count, pos.size()));
    std::sort(pos.begin(), pos.end());
    return pos;
  }

  AgentResponse propose(const AgentContext& ctx) override {
    auto r = inner_->propose(ctx);
    const auto& pool = invented_city_names();
    const auto offset = derive_seed(seed_, ctx.query_id, ctx.round) % pool.size();
    std::size_t n = 0;
    for (auto p : injected_positions(ctx, r.proposal.entries.size()))
      r.proposal.entries[p] = {pool[(offset + n++) % pool.size()], "hidden gem"};
    return r;
  }

  ReplacementResponse request_replacements(const AgentContext& ctx, const CandidateList& current,
                                           std::span<const FlaggedEntry> flagged) override {
    if (compliant_) return inner_->request_replacements(ctx, current, flagged);
    ReplacementResponse r;
    for (const auto& f : flagged) r.substitutes[f.rank] = {f.name, "still a hidden gem"};
    return r;
  }

 private:
  std::unique_ptr<PreferenceAgent> inner_;
  double rate_;
  std::uint64_t seed_;
  bool compliant_;
};

}  // namespace citynego
