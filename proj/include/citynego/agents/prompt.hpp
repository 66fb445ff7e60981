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
#include <map>
#include <span>
#include <string>

#include "citynego/agents/agent.hpp"
#include "citynego/knowledge_base.hpp"
#include "citynego/template.hpp"

namespace citynego {

/// Few-shot pair shown to one role.
struct FewShot {
  std::string good;
  std::string bad;
};

/// Prompt texts. Sections are joined with blank lines; optional sections
/// are left out when the context has nothing to put in them.
struct PromptTemplates {
  std::string version = "prompt-v1";

  std::array<std::string, 3> objectives = {
      // popularity
      "You are the Item Popularity agent. You speak for destinations that receive little "
      "attention. Promote lesser-exposed European cities that still fit the request, and avoid "
      "defaulting to the most visited hubs.",
      // personalization
      "You are the Personalization agent. You speak for the traveller. Enforce the traveller's "
      "explicit filters strictly (budget, travel month, interests) and only recommend cities "
      "that satisfy them.",
      // sustainability
      "You are the Sustainability agent. You speak for the environment and local communities. "
      "Prioritize eco-centric criteria such as good air quality, walkability and off-peak "
      "visits. If the request states no sustainability preference, recommend the most "
      "sustainable cities available."};

  std::string sole_objective =
      "You are a travel recommender for European cities. Recommend the cities that best satisfy "
      "every filter of the request.";

  std::array<FewShot, 3> few_shots = {{
      {"Request: a quiet coastal city in May. Good answer: '1. Piran \xE2\x80\x94 small, "
       "rarely crowded, pleasant in May'.",
       "Bad answer: '1. Barcelona \xE2\x80\x94 famous beaches' (a top hub that is already "
       "over-exposed)."},
      {"Request: low budget, August, interested in hiking. Good answer: '1. Zakopane "
       "\xE2\x80\x94 cheap, mountain trails, ideal in August'.",
       "Bad answer: '1. Zurich \xE2\x80\x94 great hiking nearby' (violates the low budget "
       "filter)."},
      {"Request: a weekend city break. Good answer: '1. Ljubljana \xE2\x80\x94 car-free "
       "centre, good air quality'.",
       "Bad answer: '1. Venice \xE2\x80\x94 beautiful canals' (severe overtourism in peak "
       "season)."},
  }};

  std::string header = "{objective}";
  std::string filters_section = "Filters you are responsible for:\n{filters}";
  std::string query_section = "Traveller request:\n{query}";
  std::string offer_section =
      "Current collective offer from the moderator (rank. city):\n{offer}";
  std::string rejected_section =
      "Rejected cities. Never recommend any of these:\n{rejected}";
  std::string previous_section = "Your previous list:\n{previous}";
  std::string feedback_section = "Moderator feedback on your last list:\n{feedback}";
  std::string examples_section = "Example of a good answer: {good}\nExample of a bad answer: {bad}";
  std::string instructions_first =
      "Recommend exactly {k} European cities, ranked from best to worst.";
  std::string instructions_revise =
      "Revise your previous list towards the collective offer. You may replace at most "
      "{max_replacements} cities, and every replacement must be justified. Keep exactly {k} "
      "cities.";
  std::string layout =
      "Answer with exactly {k} lines in the format\n"
      "<rank>. <city name> \xE2\x80\x94 <one-sentence justification>\n"
      "If you replaced cities, add a section:\n"
      "Replacements:\n"
      "- <removed city> -> <added city>: <reason>";
  std::string replacement_request =
      "Some cities in your list are not valid: they are unknown to the catalog, already "
      "rejected, or repeated.\n{flagged}\nFor each listed rank propose one valid alternative "
      "that fits your objective and is not already in your list. Answer with one line per rank "
      "in the format\n<rank>. <city name> \xE2\x80\x94 <justification>";
};

namespace detail {

inline std::string display(const Catalog* catalog, const CityId& id) {
  if (catalog)
    if (const auto* rec = catalog->find(id)) return rec->display_name;
  return id;
}

inline std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += "\n";
    out += lines[i];
  }
  return out;
}

}  // namespace detail

/// Deterministic prompt text for one proposal request. The catalog, when
/// given, is only used to show display names instead of ids.
inline std::string build_prompt(const AgentContext& ctx, const PromptTemplates& tpl,
                                const Catalog* catalog = nullptr) {
  const auto role_index = static_cast<std::size_t>(ctx.role);
  const std::map<std::string, std::string> counts = {
      {"k", std::to_string(ctx.k)}, {"max_replacements", std::to_string(ctx.max_replacements)}};

  std::vector<std::string> sections;
  sections.push_back(fill_template(
      tpl.header,
      {{"objective", ctx.sole_recommender ? tpl.sole_objective : tpl.objectives[role_index]}}));

  std::vector<std::string> filters;
  for (const auto& f : ctx.assigned_filters) filters.push_back("- " + f.describe());
  if (filters.empty()) filters.push_back("- (none given; follow your objective)");
  sections.push_back(fill_template(tpl.filters_section, {{"filters", detail::join_lines(filters)}}));
  sections.push_back(fill_template(tpl.query_section, {{"query", ctx.query_text}}));

  if (ctx.current_offer) {
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < ctx.current_offer->entries.size(); ++i)
      lines.push_back(std::to_string(i + 1) + ". " +
                      detail::display(catalog, ctx.current_offer->entries[i].city));
    sections.push_back(fill_template(tpl.offer_section, {{"offer", detail::join_lines(lines)}}));
  }
  if (!ctx.rejected.rejected.empty()) {
    std::vector<std::string> lines;
    for (const auto& id : ctx.rejected.rejected) lines.push_back("- " + detail::display(catalog, id));
    sections.push_back(
        fill_template(tpl.rejected_section, {{"rejected", detail::join_lines(lines)}}));
  }
  if (ctx.own_previous_list) {
    std::vector<std::string> lines;
    const auto& entries = ctx.own_previous_list->entries;
    for (std::size_t i = 0; i < entries.size(); ++i)
      lines.push_back(std::to_string(i + 1) + ". " + entries[i].name);
    sections.push_back(
        fill_template(tpl.previous_section, {{"previous", detail::join_lines(lines)}}));
  }
  if (!ctx.feedback.empty())
    sections.push_back(fill_template(tpl.feedback_section, {{"feedback", ctx.feedback}}));

  const auto& shots = tpl.few_shots[role_index];
  sections.push_back(fill_template(tpl.examples_section, {{"good", shots.good}, {"bad", shots.bad}}));
  sections.push_back(fill_template(ctx.own_previous_list ? tpl.instructions_revise
                                                         : tpl.instructions_first,
                                   counts));
  sections.push_back(fill_template(tpl.layout, counts));

  std::string out;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (i) out += "\n\n";
    out += sections[i];
  }
  return out;
}

/// Follow-up prompt for a correction pass; appended to the original prompt.
inline std::string build_replacement_prompt(const AgentContext& ctx,
                                            std::span<const FlaggedEntry> flagged,
                                            const PromptTemplates& tpl,
                                            const Catalog* catalog = nullptr) {
  std::vector<std::string> lines;
  for (const auto& f : flagged)
    lines.push_back("- rank " + std::to_string(f.rank) + ": " + f.name + " (" +
                    std::string(to_string(f.reason)) + ")");
  return build_prompt(ctx, tpl, catalog) + "\n\n" +
         fill_template(tpl.replacement_request, {{"flagged", detail::join_lines(lines)}});
}

}  // namespace citynego
