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

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <random>

#include "citynego/agents/parse.hpp"
#include "citynego/agents/prompt.hpp"
#include "citynego/agents/scripted.hpp"
#include "test_support.hpp"

namespace citynego {
namespace {

using ::testing::HasSubstr;
using ::testing::Not;

// --- parse_proposal ---

TEST(ParseProposal, CleanList) {
  std::string raw;
  for (int i = 1; i <= 10; ++i) raw += std::to_string(i) + ". City" + std::to_string(i) + " — reason " + std::to_string(i) + "\n";
  const auto p = parse_proposal(raw, 10);
  ASSERT_EQ(p.entries.size(), 10u);
  EXPECT_EQ(p.entries[0], (ProposedEntry{"City1", "reason 1"}));
  EXPECT_EQ(p.entries[9].name, "City10");
  EXPECT_FALSE(p.repaired);
}

TEST(ParseProposal, PreambleIsToleratedButFlagged) {
  const auto p = parse_proposal(
      "Sure! Here are my picks for your trip.\n\n1. Porto - great food\n2) **Ljubljana**: green\n", 10);
  ASSERT_EQ(p.entries.size(), 2u);
  EXPECT_EQ(p.entries[0], (ProposedEntry{"Porto", "great food"}));
  EXPECT_EQ(p.entries[1], (ProposedEntry{"Ljubljana", "green"}));
  EXPECT_TRUE(p.repaired);
}

TEST(ParseProposal, NoListIsMalformed) {
  EXPECT_THROW(parse_proposal("I cannot help with that.", 10), MalformedResponseError);
  EXPECT_THROW(parse_proposal("", 10), MalformedResponseError);
}

TEST(ParseProposal, TruncatesBeyondK) {
  const auto p = parse_proposal("1. A — x\n2. B — y\n3. C — z\n", 2);
  ASSERT_EQ(p.entries.size(), 2u);
  EXPECT_TRUE(p.repaired);
}

TEST(ParseProposal, MisnumberingIsRepaired) {
  const auto p = parse_proposal("1. A — x\n3. B — y\n", 10);
  EXPECT_EQ(p.entries.size(), 2u);
  EXPECT_TRUE(p.repaired);
}

TEST(ParseProposal, ReadsDeclaredReplacements) {
  const auto p = parse_proposal("1. Porto — food\n2. Tartu — quiet\nReplacements:\n- Paris -> Tartu: less crowded\n", 10);
  ASSERT_EQ(p.declared_replacements.size(), 1u);
  EXPECT_EQ(p.declared_replacements[0], (DeclaredReplacement{"Paris", "Tartu", "less crowded"}));
  EXPECT_FALSE(p.repaired);
}

TEST(ParseProposal, RoundTripsRenderedProposals) {
  const std::vector<std::string> names = {"Porto", "Košice", "Český Krumlov", "Cluj-Napoca", "San Sebastián",
                                          "Aix en Provence", "Tartu", "Łódź", "Piran"};
  const std::vector<std::string> reasons = {"", "cheap", "calm — and green", "sea: views", "a - b"};
  std::mt19937 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    AgentProposal p;
    const auto n = 1 + rng() % 10;
    for (std::size_t i = 0; i < n; ++i)
      p.entries.push_back({names[rng() % names.size()], reasons[rng() % reasons.size()]});
    if (rng() % 2) p.declared_replacements.push_back({names[rng() % names.size()], names[rng() % names.size()], "closer to the offer"});
    EXPECT_EQ(parse_proposal(render_proposal(p), 10), p) << render_proposal(p);
  }
}

// --- build_prompt ---

AgentContext round_one() {
  AgentContext ctx;
  ctx.query_id = "q";
  ctx.query_text = "A quiet city in June";
  ctx.role = AgentRole::sustainability;
  ctx.assigned_filters = {FilterSpec::walkability(Level::high)};
  ctx.k = 10;
  return ctx;
}

AgentContext round_three() {
  auto ctx = round_one();
  ctx.round = 3;
  CollectiveOffer offer;
  offer.entries = {{"porto", 1.0}, {"tartu", 0.5}};
  ctx.current_offer = offer;
  ctx.rejected.rejected = {"paris", "venice"};
  CandidateList prev;
  prev.entries = {{"Porto", "porto", ""}, {"Atlantis", std::nullopt, ""}};
  ctx.own_previous_list = prev;
  ctx.feedback = "Only 1 of your 2 previous candidates made it.";
  return ctx;
}

TEST(BuildPrompt, FirstRoundOmitsNegotiationSections) {
  const auto text = build_prompt(round_one(), {});
  EXPECT_THAT(text, HasSubstr("Sustainability agent"));
  EXPECT_THAT(text, HasSubstr("walkability >= high"));
  EXPECT_THAT(text, HasSubstr("A quiet city in June"));
  EXPECT_THAT(text, HasSubstr("exactly 10"));
  EXPECT_THAT(text, HasSubstr("Example of a good answer"));
  EXPECT_THAT(text, HasSubstr("Example of a bad answer"));
  EXPECT_THAT(text, Not(HasSubstr("collective offer from")));
  EXPECT_THAT(text, Not(HasSubstr("feedback")));
  EXPECT_THAT(text, Not(HasSubstr("Rejected")));
}

TEST(BuildPrompt, LaterRoundEmbedsFeedbackOfferAndRejections) {
  const auto catalog = testing::toy_catalog();
  const auto ctx = round_three();
  const auto text = build_prompt(ctx, {}, catalog.get());
  EXPECT_THAT(text, HasSubstr(ctx.feedback));
  EXPECT_THAT(text, HasSubstr("1. Porto\n2. Tartu"));
  EXPECT_THAT(text, HasSubstr("- Paris\n- Venice"));
  EXPECT_THAT(text, HasSubstr("2. Atlantis"));
  EXPECT_THAT(text, HasSubstr("replace at most 3"));
}

TEST(BuildPrompt, IsInjectiveOnEmbeddedFields) {
  const auto base = round_three();
  const auto reference = build_prompt(base, {});
  std::vector<std::function<void(AgentContext&)>> edits = {
      [](AgentContext& c) { c.query_text += "!"; },
      [](AgentContext& c) { c.role = AgentRole::personalization; },
      [](AgentContext& c) { c.sole_recommender = true; },
      [](AgentContext& c) { c.assigned_filters.push_back(FilterSpec::aqi(AirQuality::good)); },
      [](AgentContext& c) { c.current_offer->entries.pop_back(); },
      [](AgentContext& c) { std::swap(c.current_offer->entries[0], c.current_offer->entries[1]); },
      [](AgentContext& c) { c.rejected.rejected.insert("rome"); },
      [](AgentContext& c) { c.own_previous_list->entries[1].name = "Lemuria"; },
      [](AgentContext& c) { c.feedback += " Try harder."; },
      [](AgentContext& c) { c.k = 5; },
      [](AgentContext& c) { c.max_replacements = 2; },
  };
  std::set<std::string> seen = {reference};
  for (std::size_t i = 0; i < edits.size(); ++i) {
    auto ctx = base;
    edits[i](ctx);
    EXPECT_TRUE(seen.insert(build_prompt(ctx, {})).second) << "edit " << i;
  }
}

TEST(BuildPrompt, MissingPlaceholderValueThrows) {
  PromptTemplates tpl;
  tpl.layout = "{unknown}";
  EXPECT_THROW(build_prompt(round_one(), tpl), TemplateError);
}

TEST(BuildReplacementPrompt, ListsFlaggedRanks) {
  const std::vector<FlaggedEntry> flagged = {{4, "Poznań", FlagReason::ungrounded}};
  const auto text = build_replacement_prompt(round_one(), flagged, {});
  EXPECT_THAT(text, HasSubstr("- rank 4: Poznań (ungrounded)"));
}

// --- scripted agents ---

AgentContext toy_context(std::vector<FilterSpec> filters, int k = 10) {
  AgentContext ctx;
  ctx.query_id = "toy";
  ctx.role = AgentRole::personalization;
  ctx.assigned_filters = std::move(filters);
  ctx.k = k;
  return ctx;
}

std::vector<std::string> names_of(const AgentResponse& r) {
  std::vector<std::string> out;
  for (const auto& e : r.proposal.entries) out.push_back(e.name);
  return out;
}

TEST(GreedyFilterAgent, MatchesBruteForceRanking) {
  const auto catalog = testing::toy_catalog();
  MonthSet june;
  june.insert(6);
  const std::vector<FilterSpec> filters = {FilterSpec::budget(Level::low), FilterSpec::month(june),
                                           FilterSpec::interests({"nature"})};
  GreedyFilterAgent agent(catalog);
  const auto got = names_of(agent.propose(toy_context(filters)));

  std::vector<std::pair<double, std::string>> all;
  for (const auto& [id, rec] : catalog->cities()) all.emplace_back(-match_fraction(rec, filters), id);
  std::sort(all.begin(), all.end());
  std::vector<std::string> want;
  for (int i = 0; i < 10; ++i) want.push_back(catalog->at(all[static_cast<std::size_t>(i)].second).display_name);
  EXPECT_EQ(got, want);
}

TEST(GreedyFilterAgent, SkipsRejectedCities) {
  const auto catalog = testing::toy_catalog();
  GreedyFilterAgent agent(catalog);
  auto ctx = toy_context({}, 3);
  ctx.rejected.rejected = {"amsterdam"};
  EXPECT_EQ(names_of(agent.propose(ctx)), (std::vector<std::string>{"Barcelona", "Berlin", "Bologna"}));
}

TEST(GreedyFilterAgent, ConcedesToAcceptableOfferCities) {
  const auto catalog = testing::toy_catalog();
  GreedyFilterAgent agent(catalog);
  agent.concede_to_offer(1.0);
  auto ctx = toy_context({FilterSpec::budget(Level::low)}, 3);
  CollectiveOffer offer;
  offer.entries = {{"tartu", 1.0}, {"paris", 0.9}};
  ctx.current_offer = offer;
  // tartu is kept (low budget); paris fails the filter and is not.
  EXPECT_EQ(names_of(agent.propose(ctx)), (std::vector<std::string>{"Košice", "Kraków", "Tartu"}));
}

TEST(PreferenceAgent, ReplacementIsNextUnusedPreference) {
  const auto catalog = testing::toy_catalog();
  GreedyFilterAgent agent(catalog);
  const auto ctx = toy_context({}, 3);
  CandidateList current;
  current.entries = {{"Amsterdam", "amsterdam", ""}, {"Poznań", std::nullopt, ""}, {"Berlin", "berlin", ""}};
  const std::vector<FlaggedEntry> flagged = {{2, "Poznań", FlagReason::ungrounded}};
  const auto r = agent.request_replacements(ctx, current, flagged);
  ASSERT_EQ(r.substitutes.size(), 1u);
  EXPECT_EQ(r.substitutes.at(2).name, "Barcelona");
}

TEST(PopularityBiasedAgent, ZeroTemperatureIsTopPopularity) {
  const auto catalog = testing::toy_catalog();
  PopularityBiasedAgent agent(catalog);
  EXPECT_EQ(names_of(agent.propose(toy_context({}, 3))), (std::vector<std::string>{"Paris", "Rome", "Barcelona"}));
}

TEST(PopularityBiasedAgent, SampledOrderIsSeededPerQuery) {
  const auto catalog = testing::toy_catalog();
  PopularityBiasedAgent a(catalog, 0.5, 9);
  PopularityBiasedAgent b(catalog, 0.5, 9);
  auto ctx = toy_context({});
  EXPECT_EQ(names_of(a.propose(ctx)), names_of(b.propose(ctx)));
  auto later = ctx;
  later.round = 4;
  EXPECT_EQ(names_of(a.propose(ctx)), names_of(a.propose(later)));
  std::set<std::vector<std::string>> distinct;
  for (int q = 0; q < 10; ++q) {
    ctx.query_id = "q" + std::to_string(q);
    distinct.insert(names_of(a.propose(ctx)));
  }
  EXPECT_GT(distinct.size(), 1u);
}

TEST(LongTailAgent, PrefersLeastPopularAmongMatches) {
  const auto catalog = testing::toy_catalog();
  LongTailAgent agent(catalog);
  const auto got = names_of(agent.propose(toy_context({FilterSpec::budget(Level::low)}, 3)));
  EXPECT_EQ(got, (std::vector<std::string>{"Tartu", "Košice", "Olomouc"}));
}

TEST(ReplayAgent, ReturnsFixedListEveryRound) {
  ReplayAgent agent({"Porto", "Atlantis"});
  auto ctx = toy_context({});
  const auto first = names_of(agent.propose(ctx));
  ctx.round = 5;
  EXPECT_EQ(first, names_of(agent.propose(ctx)));
  EXPECT_EQ(first, (std::vector<std::string>{"Porto", "Atlantis"}));
}

TEST(HallucinatingAgent, SeededPositionsAreStable) {
  const auto catalog = testing::toy_catalog();
  HallucinatingAgent a(std::make_unique<GreedyFilterAgent>(catalog), 0.3, 17);
  HallucinatingAgent b(std::make_unique<GreedyFilterAgent>(catalog), 0.3, 17);
  const auto ctx = toy_context({});
  const auto pos = a.injected_positions(ctx, 10);
  EXPECT_EQ(pos.size(), 3u);
  EXPECT_EQ(pos, b.injected_positions(ctx, 10));
  const auto r = a.propose(ctx);
  EXPECT_EQ(names_of(r), names_of(b.propose(ctx)));
  for (auto p : pos) EXPECT_FALSE(catalog->ground(r.proposal.entries[p].name)) << r.proposal.entries[p].name;
}

TEST(HallucinatingAgent, AtLeastOneInjectionWhenRateIsPositive) {
  const auto catalog = testing::toy_catalog();
  HallucinatingAgent a(std::make_unique<GreedyFilterAgent>(catalog), 0.01, 1);
  EXPECT_EQ(a.injected_positions(toy_context({}), 10).size(), 1u);
}

TEST(HallucinatingAgent, CompliantSubstitutesStubbornRepeats) {
  const auto catalog = testing::toy_catalog();
  const auto ctx = toy_context({});
  CandidateList current;
  current.entries = {{"Amsterdam", "amsterdam", ""}, {"Barcelona", "barcelona", ""}, {"Berlin", "berlin", ""},
                     {"Poznań", std::nullopt, ""}};
  const std::vector<FlaggedEntry> flagged = {{4, "Poznań", FlagReason::ungrounded}};

  HallucinatingAgent compliant(std::make_unique<GreedyFilterAgent>(catalog), 0.3, 1, true);
  const auto fixed = compliant.request_replacements(ctx, current, flagged);
  ASSERT_TRUE(fixed.substitutes.count(4));
  EXPECT_TRUE(catalog->ground(fixed.substitutes.at(4).name));

  HallucinatingAgent stubborn(std::make_unique<GreedyFilterAgent>(catalog), 0.3, 1, false);
  EXPECT_EQ(stubborn.request_replacements(ctx, current, flagged).substitutes.at(4).name, "Poznań");
  EXPECT_EQ(stubborn.behavior(), "stubborn+greedy");
}

TEST(InventedNames, NeverGroundInBundledCatalogs) {
  const auto toy = testing::toy_catalog();
  const auto europe = load_catalog(testing::kDataDir + "/europe_kb.jsonl");
  for (const auto& name : invented_city_names()) {
    EXPECT_FALSE(toy->ground(name)) << name;
    EXPECT_FALSE(europe.ground(name)) << name;
  }
}

}  // namespace
}  // namespace citynego
