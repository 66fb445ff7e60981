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

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "citynego/knowledge_base.hpp"

namespace citynego {

enum class Complexity { medium, hard, sustainable };

inline std::string_view to_string(Complexity c) {
  switch (c) {
    case Complexity::medium: return "medium";
    case Complexity::hard: return "hard";
    case Complexity::sustainable: return "sustainable";
  }
  return "?";
}

struct QuerySpec {
  std::string query_id;
  std::string query_text;
  FilterSet filters;
  Level popularity_level = Level::medium;
  Complexity complexity = Complexity::medium;
};

class QueryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline Comparison parse_comparison(const std::string& s) {
  if (s == "at_most" || s == "<=" || s == "le") return Comparison::at_most;
  if (s == "exactly" || s == "=" || s == "eq") return Comparison::exactly;
  if (s == "at_least" || s == ">=" || s == "ge") return Comparison::at_least;
  throw QueryError("unknown comparison '" + s + "'");
}

inline MonthSet months_field(const nlohmann::json& j) {
  const auto& m = j.contains("months") ? j["months"] : j.value("month", nlohmann::json());
  MonthSet out;
  if (m.is_number_integer()) {
    if (!MonthSet::valid_month(m.get<int>())) throw QueryError("invalid month " + m.dump());
    out.insert(m.get<int>());
    return out;
  }
  if (!m.is_array() || m.empty()) throw QueryError("filter needs 'months' (array of 1..12)");
  for (const auto& v : m) {
    if (!v.is_number_integer() || !MonthSet::valid_month(v.get<int>()))
      throw QueryError("invalid month " + v.dump());
    out.insert(v.get<int>());
  }
  return out;
}

}  // namespace detail

/// Filter record: {"attribute": "budget", "value": "low", "mode": "at_most",
/// "roles": ["personalization"]}. Month-like attributes use "months"; the
/// interests attribute uses "tags" and an optional "match": "any"|"all".
inline std::pair<FilterSpec, std::set<AgentRole>> filter_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw QueryError("filter is not an object");
  const auto attr_name = j.value("attribute", std::string());
  const auto attr = parse_attribute(attr_name);
  if (!attr) throw QueryError("unknown filter attribute '" + attr_name + "'");
  const auto value = j.value("value", std::string());
  auto level = [&]() {
    const auto v = parse_level(value);
    if (!v) throw QueryError(attr_name + " filter has invalid value '" + value + "'");
    return *v;
  };
  auto cmp = [&](Comparison fallback) {
    return j.contains("mode") ? detail::parse_comparison(j["mode"].get<std::string>()) : fallback;
  };
  std::optional<FilterSpec> spec;
  switch (*attr) {
    case Attribute::popularity: spec = FilterSpec::popularity(level(), cmp(Comparison::exactly)); break;
    case Attribute::budget: spec = FilterSpec::budget(level(), cmp(Comparison::at_most)); break;
    case Attribute::walkability:
      spec = FilterSpec::walkability(level(), cmp(Comparison::at_least));
      break;
    case Attribute::aqi: {
      const auto v = parse_air_quality(value);
      if (!v) throw QueryError("aqi filter has invalid value '" + value + "'");
      spec = FilterSpec::aqi(*v, cmp(Comparison::at_most));
      break;
    }
    case Attribute::month: spec = FilterSpec::month(detail::months_field(j)); break;
    case Attribute::seasonality: spec = FilterSpec::seasonality(detail::months_field(j)); break;
    case Attribute::interests: {
      if (!j.contains("tags") || !j["tags"].is_array())
        throw QueryError("interests filter needs 'tags'");
      const auto match = j.value("match", std::string("any"));
      if (match != "any" && match != "all") throw QueryError("interests match must be any|all");
      spec = FilterSpec::interests(j["tags"].get<std::set<std::string>>(), match == "all");
      break;
    }
  }
  if (j.contains("mode") && (*attr == Attribute::month || *attr == Attribute::seasonality ||
                             *attr == Attribute::interests))
    throw QueryError("'mode' is not allowed for " + attr_name + " filters");
  std::set<AgentRole> owners;
  if (j.contains("roles")) {
    for (const auto& r : j["roles"]) {
      const auto role = parse_role(r.get<std::string>());
      if (!role) throw QueryError("unknown role " + r.dump());
      owners.insert(*role);
    }
    if (owners.empty()) throw QueryError("filter roles must not be empty");
  } else {
    owners.insert(default_owner(*attr));
  }
  return {*spec, owners};
}

inline QuerySpec query_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw QueryError("query is not an object");
  QuerySpec q;
  q.query_id = j.value("query_id", std::string());
  if (q.query_id.empty()) throw QueryError("missing query_id");
  q.query_text = j.value("query_text", std::string());
  if (j.contains("popularity_level")) {
    const auto v = parse_level(j["popularity_level"].get<std::string>());
    if (!v) throw QueryError("invalid popularity_level");
    q.popularity_level = *v;
  }
  if (j.contains("complexity")) {
    const auto c = j["complexity"].get<std::string>();
    if (c == "medium") q.complexity = Complexity::medium;
    else if (c == "hard") q.complexity = Complexity::hard;
    else if (c == "sustainable") q.complexity = Complexity::sustainable;
    else throw QueryError("invalid complexity '" + c + "'");
  }
  if (j.contains("filters")) {
    if (!j["filters"].is_array()) throw QueryError("filters must be an array");
    for (const auto& f : j["filters"]) {
      auto [spec, owners] = filter_from_json(f);
      q.filters.add(std::move(spec), std::move(owners));
    }
  }
  return q;
}

/// Line-delimited JSON queries; query_id must be unique.
inline std::vector<QuerySpec> load_queries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw QueryError("cannot open query file '" + path + "'");
  std::vector<QuerySpec> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto where = path + ":" + std::to_string(line_no) + ": ";
    try {
      auto q = query_from_json(nlohmann::json::parse(line));
      if (!ids.insert(q.query_id).second) throw QueryError("duplicate query_id '" + q.query_id + "'");
      out.push_back(std::move(q));
    } catch (const QueryError& e) {
      throw QueryError(where + e.what());
    } catch (const FilterError& e) {
      throw QueryError(where + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw QueryError(where + e.what());
    }
  }
  return out;
}

}  // namespace citynego
