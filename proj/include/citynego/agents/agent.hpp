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

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "citynego/knowledge_base.hpp"
#include "citynego/types.hpp"

namespace citynego {

/// Call accounting for one agent. Adds up across calls.
struct UsageStats {
  long api_calls = 0;
  long tokens_in = 0;
  long tokens_out = 0;
  double wall_ms = 0.0;

  UsageStats& operator+=(const UsageStats& o) {
    api_calls += o.api_calls;
    tokens_in += o.tokens_in;
    tokens_out += o.tokens_out;
    wall_ms += o.wall_ms;
    return *this;
  }
  friend UsageStats operator+(UsageStats a, const UsageStats& b) { return a += b; }
  friend bool operator==(const UsageStats&, const UsageStats&) = default;
};

/// Everything an agent sees when asked for a list.
struct AgentContext {
  std::string query_id;
  std::string query_text;
  AgentRole role = AgentRole::personalization;
  // Single-agent mode: the agent answers for the whole query, not a role.
  bool sole_recommender = false;
  std::vector<FilterSpec> assigned_filters;
  int round = 0;
  std::optional<CollectiveOffer> current_offer;
  RejectionSet rejected;
  std::optional<CandidateList> own_previous_list;
  std::string feedback;
  int k = 10;
  int max_replacements = 3;
};

struct ProposedEntry {
  std::string name;
  std::string justification;
  friend bool operator==(const ProposedEntry&, const ProposedEntry&) = default;
};

struct DeclaredReplacement {
  std::string removed;
  std::string added;
  std::string reason;
  friend bool operator==(const DeclaredReplacement&, const DeclaredReplacement&) = default;
};

struct AgentProposal {
  std::vector<ProposedEntry> entries;
  std::vector<DeclaredReplacement> declared_replacements;
  // Set by the parser when the raw text needed repair (stray prose,
  // renumbering, truncation).
  bool repaired = false;
  friend bool operator==(const AgentProposal&, const AgentProposal&) = default;
};

enum class FlagReason { ungrounded, rejected, duplicate };

inline std::string_view to_string(FlagReason r) {
  switch (r) {
    case FlagReason::ungrounded: return "ungrounded";
    case FlagReason::rejected: return "rejected";
    case FlagReason::duplicate: return "duplicate";
  }
  return "?";
}

struct FlaggedEntry {
  int rank = 0;  // 1-based
  std::string name;
  FlagReason reason = FlagReason::ungrounded;
  friend bool operator==(const FlaggedEntry&, const FlaggedEntry&) = default;
};

struct AgentResponse {
  AgentProposal proposal;
  UsageStats usage;
};

/// Substitutes keyed by the flagged rank.
struct ReplacementResponse {
  std::map<int, ProposedEntry> substitutes;
  UsageStats usage;
};

class AgentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedResponseError : public AgentError {
 public:
  using AgentError::AgentError;
};

/// The agent contract. One instance serves one negotiation at a time.
class Agent {
 public:
  virtual ~Agent() = default;

  /// Short behavior tag written to logs ("greedy", "llm", ...).
  virtual std::string behavior() const = 0;

  virtual AgentResponse propose(const AgentContext& context) = 0;

  /// Asks for valid substitutes for the flagged ranks of `current`.
  /// Never called with an empty flag list.
  virtual ReplacementResponse request_replacements(const AgentContext& context,
                                                   const CandidateList& current,
                                                   std::span<const FlaggedEntry> flagged) = 0;
};

}  // namespace citynego
