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

// Response layout shared by prompts and the parser:
//
//   1. Ljubljana - compact, walkable, low AQI
//   2. Košice - off-peak in May, low budget
//   ...
//   Replacements:
//   - Vienna -> Graz: cheaper and less crowded
//
// Justifications and the replacements section are optional.

#include <cctype>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "citynego/agents/agent.hpp"

namespace citynego {

struct NumberedLine {
  int number = 0;
  ProposedEntry entry;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Removes markdown emphasis around a name ("**Porto**" -> "Porto").
inline std::string strip_emphasis(std::string s, bool& changed) {
  const auto n = s.size();
  for (std::string_view mark : {"**", "__", "*", "_", "`"}) {
    if (s.size() >= 2 * mark.size() && s.starts_with(mark) && s.ends_with(mark)) {
      s = trim(s.substr(mark.size(), s.size() - 2 * mark.size()));
      break;
    }
  }
  if (s.size() != n) changed = true;
  return s;
}

// Splits "name - justification" on the first recognised separator (em dash, en dash, hyphen or colon).
inline ProposedEntry split_entry(std::string_view body, bool& changed) {
  static const std::string_view kSeparators[] = {" \xE2\x80\x94 ", " \xE2\x80\x93 ", " - ", ": "};
  std::size_t best = std::string_view::npos;
  std::size_t width = 0;
  for (auto sep : kSeparators) {
    const auto at = body.find(sep);
    if (at != std::string_view::npos && at < best) {
      best = at;
      width = sep.size();
    }
  }
  ProposedEntry e;
  if (best == std::string_view::npos) {
    e.name = trim(body);
  } else {
    e.name = trim(body.substr(0, best));
    e.justification = trim(body.substr(best + width));
  }
  e.name = strip_emphasis(e.name, changed);
  return e;
}

inline const std::regex& numbered_line_pattern() {
  static const std::regex re(R"(^\s*(\d{1,3})\s*[.)]\s+(.+)$)");
  return re;
}

inline const std::regex& replacement_line_pattern() {
  static const std::regex re(R"(^\s*[-*]\s*(.+?)\s*->\s*(.+?)\s*(?::\s+(.*))?$)");
  return re;
}

inline bool is_replacements_header(std::string_view line) {
  auto t = trim(line);
  while (!t.empty() && (t.front() == '#' || t.front() == '*')) t.erase(t.begin());
  while (!t.empty() && t.back() == '*') t.pop_back();
  t = trim(t);
  std::string lower;
  for (char c : t) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lower == "replacements:" || lower == "replacements";
}

}  // namespace detail

/// Every "N. name - justification" line in order of appearance, with the
/// number the model wrote. Other lines are ignored.
inline std::vector<NumberedLine> parse_numbered_lines(std::string_view raw) {
  std::vector<NumberedLine> out;
  std::string text(raw);
  std::size_t start = 0;
  bool ignored = false;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    std::smatch m;
    if (std::regex_match(line, m, detail::numbered_line_pattern())) {
      NumberedLine nl;
      nl.number = std::stoi(m[1].str());
      nl.entry = detail::split_entry(m[2].str(), ignored);
      if (!nl.entry.name.empty()) out.push_back(std::move(nl));
    }
    start = end + 1;
  }
  return out;
}

/// Extracts the ranked list (truncated to k) and any declared replacements.
/// Throws MalformedResponseError when no list entry can be found.
inline AgentProposal parse_proposal(std::string_view raw, int k) {
  AgentProposal p;
  bool in_replacements = false;
  int expected_number = 1;
  std::string text(raw);
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    if (detail::trim(line).empty()) continue;
    if (detail::is_replacements_header(line)) {
      in_replacements = true;
      continue;
    }
    std::smatch m;
    if (in_replacements && std::regex_match(line, m, detail::replacement_line_pattern())) {
      p.declared_replacements.push_back(
          {detail::trim(m[1].str()), detail::trim(m[2].str()), detail::trim(m[3].str())});
      continue;
    }
    if (!in_replacements && std::regex_match(line, m, detail::numbered_line_pattern())) {
      auto entry = detail::split_entry(m[2].str(), p.repaired);
      if (entry.name.empty()) {
        p.repaired = true;
        continue;
      }
      if (std::stoi(m[1].str()) != expected_number) p.repaired = true;
      ++expected_number;
      p.entries.push_back(std::move(entry));
      continue;
    }
    p.repaired = true;  // stray prose
  }
  if (p.entries.empty()) throw MalformedResponseError("no ranked city list found in response");
  if (k > 0 && p.entries.size() > static_cast<std::size_t>(k)) {
    p.entries.resize(static_cast<std::size_t>(k));
    p.repaired = true;
  }
  return p;
}

/// Inverse of parse_proposal for well-formed proposals.
inline std::string render_proposal(const AgentProposal& p) {
  std::string out;
  for (std::size_t i = 0; i < p.entries.size(); ++i) {
    out += std::to_string(i + 1) + ". " + p.entries[i].name;
    if (!p.entries[i].justification.empty())
      out += " \xE2\x80\x94 " + p.entries[i].justification;
    out += "\n";
  }
  if (!p.declared_replacements.empty()) {
    out += "Replacements:\n";
    for (const auto& r : p.declared_replacements) {
      out += "- " + r.removed + " -> " + r.added;
      if (!r.reason.empty()) out += ": " + r.reason;
      out += "\n";
    }
  }
  return out;
}

}  // namespace citynego
