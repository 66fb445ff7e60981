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
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "citynego/text.hpp"

namespace citynego {

using CityId = std::string;

// --- ordinals ---------------------------------------------------------------

enum class Level : int { low = 0, medium = 1, high = 2 };
enum class AirQuality : int { good = 0, moderate = 1, poor = 2 };

inline std::string_view to_string(Level v) {
  switch (v) {
    case Level::low: return "low";
    case Level::medium: return "medium";
    case Level::high: return "high";
  }
  return "?";
}

inline std::string_view to_string(AirQuality v) {
  switch (v) {
    case AirQuality::good: return "good";
    case AirQuality::moderate: return "moderate";
    case AirQuality::poor: return "poor";
  }
  return "?";
}

inline std::optional<Level> parse_level(std::string_view s) {
  if (s == "low") return Level::low;
  if (s == "medium") return Level::medium;
  if (s == "high") return Level::high;
  return std::nullopt;
}

inline std::optional<AirQuality> parse_air_quality(std::string_view s) {
  if (s == "good") return AirQuality::good;
  if (s == "moderate") return AirQuality::moderate;
  if (s == "poor") return AirQuality::poor;
  return std::nullopt;
}

/// Set of calendar months 1..12.
class MonthSet {
 public:
  MonthSet() = default;
  MonthSet(std::initializer_list<int> months) {
    for (int m : months) insert(m);
  }

  static bool valid_month(int m) { return m >= 1 && m <= 12; }

  void insert(int m) {
    if (!valid_month(m)) throw std::out_of_range("month out of range: " + std::to_string(m));
    bits_ |= static_cast<std::uint16_t>(1u << m);
  }
  bool contains(int m) const { return valid_month(m) && (bits_ >> m) & 1u; }
  bool intersects(const MonthSet& other) const { return (bits_ & other.bits_) != 0; }
  bool empty() const { return bits_ == 0; }

  std::vector<int> to_vector() const {
    std::vector<int> out;
    for (int m = 1; m <= 12; ++m)
      if (contains(m)) out.push_back(m);
    return out;
  }

  friend bool operator==(const MonthSet&, const MonthSet&) = default;

 private:
  std::uint16_t bits_ = 0;
};

// --- catalog records ----------------------------------------------------------

struct CityRecord {
  CityId city_id;
  std::string display_name;
  std::optional<std::string> iata_code;
  std::string country;
  Level popularity = Level::medium;
  double popularity_score = 0.0;
  Level budget_level = Level::medium;
  MonthSet suitable_months;
  std::set<std::string> interests;
  AirQuality aqi_level = AirQuality::moderate;
  Level walkability = Level::medium;
  MonthSet seasonality_offpeak_months;
  std::vector<std::string> aliases;
  // Attributes present in the source record but not used by any filter.
  nlohmann::json extra = nlohmann::json::object();
};

// --- agent roles ----------------------------------------------------------------

enum class AgentRole : int { popularity = 0, personalization = 1, sustainability = 2 };

inline constexpr std::array<AgentRole, 3> kAllRoles = {
    AgentRole::popularity, AgentRole::personalization, AgentRole::sustainability};

inline std::string_view to_string(AgentRole r) {
  switch (r) {
    case AgentRole::popularity: return "popularity";
    case AgentRole::personalization: return "personalization";
    case AgentRole::sustainability: return "sustainability";
  }
  return "?";
}

inline std::optional<AgentRole> parse_role(std::string_view s) {
  if (s == "popularity") return AgentRole::popularity;
  if (s == "personalization") return AgentRole::personalization;
  if (s == "sustainability") return AgentRole::sustainability;
  return std::nullopt;
}

// --- filters ----------------------------------------------------------------------

enum class Attribute { popularity, budget, month, interests, aqi, walkability, seasonality };

inline std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::popularity: return "popularity";
    case Attribute::budget: return "budget";
    case Attribute::month: return "month";
    case Attribute::interests: return "interests";
    case Attribute::aqi: return "aqi";
    case Attribute::walkability: return "walkability";
    case Attribute::seasonality: return "seasonality";
  }
  return "?";
}

inline std::optional<Attribute> parse_attribute(std::string_view s) {
  for (auto a : {Attribute::popularity, Attribute::budget, Attribute::month, Attribute::interests,
                 Attribute::aqi, Attribute::walkability, Attribute::seasonality})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

enum class Comparison { at_most, exactly, at_least };

/// Target is the integer rank of the ordinal (Level or AirQuality).
struct OrdinalPredicate {
  Comparison cmp = Comparison::exactly;
  int target = 0;
  friend bool operator==(const OrdinalPredicate&, const OrdinalPredicate&) = default;
};

/// Matches when any requested month is in the city's month set.
struct MonthPredicate {
  MonthSet months;
  friend bool operator==(const MonthPredicate&, const MonthPredicate&) = default;
};

/// Non-empty intersection by default; require_all switches to subset mode.
struct TagPredicate {
  std::set<std::string> tags;
  bool require_all = false;
  friend bool operator==(const TagPredicate&, const TagPredicate&) = default;
};

class FilterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One explicit constraint on city attributes. Only constructible through
/// the factories, which reject predicate kinds illegal for the attribute.
class FilterSpec {
 public:
  using Predicate = std::variant<OrdinalPredicate, MonthPredicate, TagPredicate>;

  static FilterSpec popularity(Level target, Comparison cmp = Comparison::exactly) {
    return {Attribute::popularity, OrdinalPredicate{cmp, static_cast<int>(target)}};
  }
  static FilterSpec budget(Level target, Comparison cmp = Comparison::at_most) {
    return {Attribute::budget, OrdinalPredicate{cmp, static_cast<int>(target)}};
  }
  static FilterSpec walkability(Level target, Comparison cmp = Comparison::at_least) {
    return {Attribute::walkability, OrdinalPredicate{cmp, static_cast<int>(target)}};
  }
  static FilterSpec aqi(AirQuality target, Comparison cmp = Comparison::at_most) {
    return {Attribute::aqi, OrdinalPredicate{cmp, static_cast<int>(target)}};
  }
  static FilterSpec month(MonthSet months) {
    if (months.empty()) throw FilterError("month filter needs at least one month");
    return {Attribute::month, MonthPredicate{months}};
  }
  static FilterSpec seasonality(MonthSet months) {
    if (months.empty()) throw FilterError("seasonality filter needs at least one month");
    return {Attribute::seasonality, MonthPredicate{months}};
  }
  static FilterSpec interests(std::set<std::string> tags, bool require_all = false) {
    if (tags.empty()) throw FilterError("interests filter needs at least one tag");
    std::set<std::string> folded;
    for (const auto& t : tags) folded.insert(normalize_name(t));
    return {Attribute::interests, TagPredicate{std::move(folded), require_all}};
  }

  Attribute attribute() const { return attribute_; }
  const Predicate& predicate() const { return predicate_; }

  bool matches(const CityRecord& city) const {
    switch (attribute_) {
      case Attribute::popularity: return ordinal(static_cast<int>(city.popularity));
      case Attribute::budget: return ordinal(static_cast<int>(city.budget_level));
      case Attribute::walkability: return ordinal(static_cast<int>(city.walkability));
      case Attribute::aqi: return ordinal(static_cast<int>(city.aqi_level));
      case Attribute::month:
        return std::get<MonthPredicate>(predicate_).months.intersects(city.suitable_months);
      case Attribute::seasonality:
        return std::get<MonthPredicate>(predicate_).months.intersects(
            city.seasonality_offpeak_months);
      case Attribute::interests: {
        const auto& p = std::get<TagPredicate>(predicate_);
        const auto hit = [&](const std::string& t) { return city.interests.count(t) > 0; };
        return p.require_all ? std::all_of(p.tags.begin(), p.tags.end(), hit)
                             : std::any_of(p.tags.begin(), p.tags.end(), hit);
      }
    }
    return false;
  }

  /// Short human-readable form, used in prompts and logs.
  std::string describe() const {
    std::string out(to_string(attribute_));
    if (const auto* o = std::get_if<OrdinalPredicate>(&predicate_)) {
      out += o->cmp == Comparison::at_most ? " <= " : o->cmp == Comparison::at_least ? " >= " : " = ";
      out += attribute_ == Attribute::aqi ? to_string(static_cast<AirQuality>(o->target))
                                          : to_string(static_cast<Level>(o->target));
    } else if (const auto* m = std::get_if<MonthPredicate>(&predicate_)) {
      out += " in {";
      bool first = true;
      for (int month : m->months.to_vector()) {
        if (!first) out += ",";
        out += std::to_string(month);
        first = false;
      }
      out += "}";
    } else {
      const auto& t = std::get<TagPredicate>(predicate_);
      out += t.require_all ? " all of {" : " any of {";
      bool first = true;
      for (const auto& tag : t.tags) {
        if (!first) out += ",";
        out += tag;
        first = false;
      }
      out += "}";
    }
    return out;
  }

  friend bool operator==(const FilterSpec&, const FilterSpec&) = default;

 private:
  FilterSpec(Attribute a, Predicate p) : attribute_(a), predicate_(std::move(p)) {}

  bool ordinal(int value) const {
    const auto& p = std::get<OrdinalPredicate>(predicate_);
    switch (p.cmp) {
      case Comparison::at_most: return value <= p.target;
      case Comparison::exactly: return value == p.target;
      case Comparison::at_least: return value >= p.target;
    }
    return false;
  }

  Attribute attribute_;
  Predicate predicate_;
};

/// Role that owns an attribute when a query does not assign one explicitly.
inline AgentRole default_owner(Attribute a) {
  switch (a) {
    case Attribute::popularity: return AgentRole::popularity;
    case Attribute::budget:
    case Attribute::month:
    case Attribute::interests: return AgentRole::personalization;
    case Attribute::aqi:
    case Attribute::walkability:
    case Attribute::seasonality: return AgentRole::sustainability;
  }
  return AgentRole::personalization;
}

/// The user's full set of filters with the roles responsible for each.
class FilterSet {
 public:
  FilterSet() = default;

  void add(FilterSpec filter, std::set<AgentRole> owners) {
    if (owners.empty()) throw FilterError("filter " + filter.describe() + " has no owner role");
    filters_.push_back(std::move(filter));
    owners_.push_back(std::move(owners));
  }
  void add(FilterSpec filter) {
    const auto owner = default_owner(filter.attribute());
    add(std::move(filter), {owner});
  }

  const std::vector<FilterSpec>& all() const { return filters_; }
  const std::set<AgentRole>& owners(std::size_t i) const { return owners_.at(i); }
  std::size_t size() const { return filters_.size(); }
  bool empty() const { return filters_.empty(); }

  std::vector<FilterSpec> for_role(AgentRole role) const {
    std::vector<FilterSpec> out;
    for (std::size_t i = 0; i < filters_.size(); ++i)
      if (owners_[i].count(role)) out.push_back(filters_[i]);
    return out;
  }

 private:
  std::vector<FilterSpec> filters_;
  std::vector<std::set<AgentRole>> owners_;
};

/// Fraction of filters the city satisfies; 1 for an empty filter list.
inline double match_fraction(const CityRecord& city, std::span<const FilterSpec> filters) {
  if (filters.empty()) return 1.0;
  const auto hits = std::count_if(filters.begin(), filters.end(),
                                  [&](const FilterSpec& f) { return f.matches(city); });
  return static_cast<double>(hits) / static_cast<double>(filters.size());
}

// --- catalog ------------------------------------------------------------------------

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable city catalog with a normalized-name index for grounding.
class Catalog {
 public:
  explicit Catalog(std::vector<CityRecord> records) {
    if (records.empty()) throw CatalogError("catalog is empty");
    for (auto& rec : records) {
      if (rec.city_id.empty()) throw CatalogError("city_id must not be empty");
      const auto id = rec.city_id;
      if (!cities_.emplace(id, std::move(rec)).second)
        throw CatalogError("duplicate city_id '" + id + "'");
    }
    for (const auto& [id, rec] : cities_) {
      index_name(rec.display_name, id);
      index_name(id, id);
      for (const auto& alias : rec.aliases) index_name(alias, id);
    }
  }

  const std::map<CityId, CityRecord>& cities() const { return cities_; }
  std::size_t size() const { return cities_.size(); }

  const CityRecord* find(std::string_view id) const {
    const auto it = cities_.find(std::string(id));
    return it == cities_.end() ? nullptr : &it->second;
  }
  const CityRecord& at(std::string_view id) const {
    const auto* rec = find(id);
    if (!rec) throw CatalogError("unknown city_id '" + std::string(id) + "'");
    return *rec;
  }

  /// Resolves free text to a city; absent when nothing matches.
  std::optional<CityId> ground(std::string_view name) const {
    const auto it = name_index_.find(normalize_name(name));
    if (it == name_index_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::string, CityId>& name_index() const { return name_index_; }

 private:
  void index_name(std::string_view name, const CityId& id) {
    const auto key = normalize_name(name);
    if (key.empty()) return;
    const auto [it, inserted] = name_index_.emplace(key, id);
    if (!inserted && it->second != id)
      throw CatalogError("name '" + key + "' is ambiguous between '" + it->second + "' and '" +
                         id + "'");
  }

  std::map<CityId, CityRecord> cities_;
  std::map<std::string, CityId> name_index_;
};

inline std::optional<CityId> ground(std::string_view name, const Catalog& catalog) {
  return catalog.ground(name);
}

// --- KB file format -----------------------------------------------------------------

namespace detail {

inline MonthSet parse_months(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array()) throw CatalogError(field + " must be an array of months");
  MonthSet out;
  for (const auto& m : j) {
    if (!m.is_number_integer() || !MonthSet::valid_month(m.get<int>()))
      throw CatalogError(field + " contains invalid month " + m.dump());
    out.insert(m.get<int>());
  }
  return out;
}

inline std::string require_string(const nlohmann::json& j, const std::string& field) {
  if (!j.contains(field)) throw CatalogError("missing field " + field);
  if (!j[field].is_string()) throw CatalogError(field + " must be a string");
  return j[field].get<std::string>();
}

inline Level require_level(const nlohmann::json& j, const std::string& field) {
  const auto s = require_string(j, field);
  const auto v = parse_level(s);
  if (!v) throw CatalogError(field + " has invalid value '" + s + "'");
  return *v;
}

inline const std::set<std::string> kKnownFields = {
    "city_id",     "display_name", "iata_code",      "country",
    "popularity",  "popularity_score", "budget_level", "suitable_months",
    "interests",   "aqi_level",    "walkability",    "seasonality_offpeak_months",
    "aliases"};

}  // namespace detail

/// Parses one KB record. Throws CatalogError naming the offending field.
inline CityRecord city_from_json(const nlohmann::json& j) {
  using detail::require_level;
  using detail::require_string;
  if (!j.is_object()) throw CatalogError("record is not an object");
  CityRecord c;
  c.city_id = require_string(j, "city_id");
  if (c.city_id != normalize_name(c.city_id) || c.city_id.find(' ') != std::string::npos)
    throw CatalogError("city_id must be a lowercase token, got '" + c.city_id + "'");
  c.display_name = require_string(j, "display_name");
  if (j.contains("iata_code") && !j["iata_code"].is_null()) {
    auto code = require_string(j, "iata_code");
    if (code.size() != 3) throw CatalogError("iata_code must have 3 letters");
    c.iata_code = std::move(code);
  }
  c.country = require_string(j, "country");
  c.popularity = require_level(j, "popularity");
  if (!j.contains("popularity_score") || !j["popularity_score"].is_number())
    throw CatalogError("popularity_score must be a number");
  c.popularity_score = j["popularity_score"].get<double>();
  if (!(c.popularity_score >= 0.0)) throw CatalogError("popularity_score must be >= 0");
  c.budget_level = require_level(j, "budget_level");
  if (!j.contains("suitable_months")) throw CatalogError("missing field suitable_months");
  c.suitable_months = detail::parse_months(j["suitable_months"], "suitable_months");
  if (j.contains("interests")) {
    if (!j["interests"].is_array()) throw CatalogError("interests must be an array");
    for (const auto& t : j["interests"]) {
      if (!t.is_string()) throw CatalogError("interests must contain strings");
      c.interests.insert(normalize_name(t.get<std::string>()));
    }
  }
  const auto aqi = require_string(j, "aqi_level");
  const auto aqi_v = parse_air_quality(aqi);
  if (!aqi_v) throw CatalogError("aqi_level has invalid value '" + aqi + "'");
  c.aqi_level = *aqi_v;
  c.walkability = require_level(j, "walkability");
  if (j.contains("seasonality_offpeak_months"))
    c.seasonality_offpeak_months =
        detail::parse_months(j["seasonality_offpeak_months"], "seasonality_offpeak_months");
  if (j.contains("aliases")) {
    if (!j["aliases"].is_array()) throw CatalogError("aliases must be an array");
    for (const auto& a : j["aliases"]) {
      if (!a.is_string()) throw CatalogError("aliases must contain strings");
      c.aliases.push_back(a.get<std::string>());
    }
  }
  for (const auto& [key, value] : j.items())
    if (!detail::kKnownFields.count(key)) c.extra[key] = value;
  return c;
}

inline nlohmann::json city_to_json(const CityRecord& c) {
  nlohmann::json j = c.extra;
  j["city_id"] = c.city_id;
  j["display_name"] = c.display_name;
  j["iata_code"] = c.iata_code ? nlohmann::json(*c.iata_code) : nlohmann::json(nullptr);
  j["country"] = c.country;
  j["popularity"] = to_string(c.popularity);
  j["popularity_score"] = c.popularity_score;
  j["budget_level"] = to_string(c.budget_level);
  j["suitable_months"] = c.suitable_months.to_vector();
  j["interests"] = c.interests;
  j["aqi_level"] = to_string(c.aqi_level);
  j["walkability"] = to_string(c.walkability);
  j["seasonality_offpeak_months"] = c.seasonality_offpeak_months.to_vector();
  if (!c.aliases.empty()) j["aliases"] = c.aliases;
  return j;
}

/// Reads line-delimited JSON city records. Blank lines and lines starting
/// with '#' are skipped. Errors carry the 1-based line number.
inline Catalog parse_catalog(std::istream& in, std::string_view source = "<stream>") {
  std::vector<CityRecord> records;
  std::set<CityId> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto where = std::string(source) + ":" + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw CatalogError(where + "malformed record: " + e.what());
    }
    try {
      auto rec = city_from_json(j);
      if (!seen.insert(rec.city_id).second)
        throw CatalogError("duplicate city_id '" + rec.city_id + "'");
      records.push_back(std::move(rec));
    } catch (const CatalogError& e) {
      throw CatalogError(where + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw CatalogError(where + e.what());
    }
  }
  try {
    return Catalog(std::move(records));
  } catch (const CatalogError& e) {
    throw CatalogError(std::string(source) + ": " + e.what());
  }
}

inline Catalog load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CatalogError("cannot open knowledge base file '" + path + "'");
  return parse_catalog(in, path);
}

}  // namespace citynego
