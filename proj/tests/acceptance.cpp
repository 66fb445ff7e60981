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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "citynego/harness.hpp"

using namespace citynego;

namespace {

const std::string kData = CITYNEGO_DATA_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::shared_ptr<const Catalog> toy_catalog() {
  static auto c = std::make_shared<const Catalog>(load_catalog(kData + "/toy_kb.jsonl"));
  return c;
}

// --- 1 ---------------------------------------------------------------------

Outcome scoring_oracle() {
  const auto t0 = Clock::now();
  const auto catalog = toy_catalog();
  std::vector<CityId> ids;
  for (const auto& [id, rec] : catalog->cities()) ids.push_back(id);

  std::mt19937_64 rng(20260101);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    ScoreTable table;
    for (const auto& id : ids) table.scores[id] = unit(rng) * 20.0;
    std::vector<CandidateList> lists;
    std::vector<AgentAssessment> assessments;
    const int k = 1 + static_cast<int>(rng() % 10);
    for (const auto role : kAllRoles) {
      CandidateList list;
      list.role = role;
      list.round = trial % 10;
      auto pool = ids;
      std::shuffle(pool.begin(), pool.end(), rng);
      for (int i = 0; i < k; ++i) {
        if (unit(rng) < 0.15) list.entries.push_back({"Atlantis " + std::to_string(i), {}, ""});
        else list.entries.push_back({pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(i)], ""});
      }
      lists.push_back(list);
      assessments.push_back({role, list.round, unit(rng), unit(rng), -unit(rng)});
    }
    std::shuffle(assessments.begin(), assessments.end(), rng);
    const auto got = update_scores(table, lists, assessments);

    // s(c,t) = s(c,t-1) + sum over agents holding c of (1/rank)(-h + r + d)
    for (const auto& id : ids) {
      double expected = table.scores.at(id);
      for (const auto& list : lists) {
        const AgentAssessment* a = nullptr;
        for (const auto& x : assessments)
          if (x.role == list.role) a = &x;
        for (std::size_t pos = 0; pos < list.entries.size(); ++pos) {
          if (list.entries[pos].city == id) {
            expected += (1.0 / static_cast<double>(pos + 1)) *
                        (-a->hallucination + a->success + a->reliability);
            break;
          }
        }
      }
      worst = std::max(worst, std::fabs(expected - got.scores.at(id)));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 5.0,
          fmt("500 transcripts, max |diff| %.3g, %.2fs", worst, secs)};
}

// --- 2 ---------------------------------------------------------------------

Outcome metric_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(42);
  double worst_g = 0.0;
  double worst_h = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<double> x(n);
    for (auto& v : x) v = static_cast<double>(1 + rng() % 100);
    double pair_sum = 0.0;
    double total = 0.0;
    for (double a : x) {
      total += a;
      for (double b : x) pair_sum += std::fabs(a - b);
    }
    const double g_ref = pair_sum / (2.0 * static_cast<double>(n) * total);
    double h_ref = 0.0;
    for (double a : x) h_ref -= (a / total) * std::log2(a / total);
    h_ref = n > 1 ? h_ref / std::log2(static_cast<double>(n)) : 0.0;
    worst_g = std::max(worst_g, std::fabs(gini(x) - g_ref));
    worst_h = std::max(worst_h, std::fabs(normalized_entropy(x) - h_ref));
  }
  const std::vector<double> hand = {3.0, 1.0};
  const double g = gini(hand);
  const double h = normalized_entropy(hand);
  const double secs = seconds_since(t0);
  const bool ok = worst_g <= 1e-9 && worst_h <= 1e-9 && std::fabs(g - 0.25) <= 1e-4 &&
                  std::fabs(h - 0.8113) <= 1e-4 && secs < 5.0;
  return {ok, fmt("1000 vectors, max |dG| %.3g, max |dH| %.3g; [3,1] -> G %.4f H %.4f, %.2fs",
                  worst_g, worst_h, g, h, secs)};
}

// --- 3 ---------------------------------------------------------------------

Outcome protocol_invariants() {
  const auto t0 = Clock::now();
  const auto catalog = toy_catalog();
  auto queries = load_queries(kData + "/toy_queries.jsonl");
  for (auto& q : load_queries(kData + "/convergent_query.jsonl")) queries.push_back(q);

  const std::vector<std::string> specs = {
      "",
      "popularity=popular@0.3",
      "personalization=hallucinating@0.3",
      "sustainability=stubborn@0.2",
      "popularity=greedy@1,personalization=greedy@1,sustainability=greedy@1",
      "popularity=longtail@2,personalization=greedy@2,sustainability=popular@0.5",
  };
  const std::vector<std::optional<double>> taus = {std::nullopt, 0.2, 0.6};

  int violations = 0;
  int aborted = 0;
  std::string first;
  auto violate = [&](const std::string& what) {
    if (violations++ == 0) first = what;
  };

  for (int run = 0; run < 200; ++run) {
    const auto& query = queries[static_cast<std::size_t>(run) % queries.size()];
    NegotiationConfig config;
    config.rejection_strategy = run % 2 ? RejectionStrategy::majority : RejectionStrategy::aggressive;
    config.tau = taus[static_cast<std::size_t>(run / 2) % taus.size()];
    config.rng_seed = static_cast<std::uint64_t>(run);
    const auto spec = parse_scripted_spec(specs[static_cast<std::size_t>(run / 6) % specs.size()]);
    const auto agents = scripted_factory(spec, catalog, config.rng_seed).roles(query);
    const auto tag = "run " + std::to_string(run) + " (" + query.query_id + ")";

    auto state = NegotiationState::initial(*catalog);
    std::set<CityId> rejected_so_far;
    std::optional<ScoreTable> previous_scores;
    int executed = -1;
    try {
      while (true) {
        const auto log = run_round(state, query, agents, *catalog, config, RunOptions::without_timing());
        const int t = log.round;
        // (a) a rejected city is absent from this round's offer and every later one
        for (const auto& c : log.rejected_added) rejected_so_far.insert(c);
        if (rejected_so_far.size() != log.rejected_total) violate(tag + ": rejection set shrank");
        for (const auto& c : log.offer.cities())
          if (rejected_so_far.count(c))
            violate(tag + ": rejected " + c + " offered at round " + std::to_string(t));
        // (b)
        for (const auto& a : log.agents) {
          const auto& s = a.assessment;
          if (s.success < 0 || s.success > 1 || s.reliability < 0 || s.reliability > 1 ||
              s.hallucination < -1 || s.hallucination > 0)
            violate(tag + ": assessment out of range at round " + std::to_string(t));
        }
        // (c)
        if (previous_scores) {
          for (const auto& [id, v] : state.scores.scores)
            if (v < previous_scores->scores.at(id)) violate(tag + ": score of " + id + " decreased");
        }
        previous_scores = state.scores;
        // (d)
        if (log.offer.size() != static_cast<std::size_t>(config.k))
          violate(tag + ": offer size " + std::to_string(log.offer.size()));
        if (t == 0) continue;
        if (check_termination(state.success_history, t, config).stop) {
          executed = t;
          break;
        }
      }
    } catch (const OfferShortfallError&) {
      ++aborted;
      continue;
    } catch (const std::exception& e) {
      violate(tag + ": " + e.what());
      continue;
    }
    // (e)
    if (executed < config.min_rounds || executed > config.max_rounds)
      violate(tag + ": executed " + std::to_string(executed) + " rounds");
    // the library driver agrees with the hand-rolled loop
    const auto again = scripted_factory(spec, catalog, config.rng_seed).roles(query);
    const auto result = run_negotiation(query, again, *catalog, config, RunOptions::without_timing());
    if (result.rounds_executed != executed || !(result.final_offer == *state.offer))
      violate(tag + ": run_negotiation disagrees with run_round loop");
  }
  const double secs = seconds_since(t0);
  auto detail = fmt("200 runs, %d violations, %d aborted by offer shortfall, %.2fs", violations,
                    aborted, secs);
  if (!first.empty()) detail += "; first: " + first;
  return {violations == 0 && secs < 30.0, detail};
}

// --- 4 ---------------------------------------------------------------------

std::string dump_rounds(const NegotiationResult& r) {
  std::string out;
  for (const auto& log : r.rounds) out += to_json(log, Mode::mami).dump() + "\n";
  return out;
}

Outcome convergence() {
  const auto catalog = toy_catalog();
  const auto query = load_queries(kData + "/convergent_query.jsonl").at(0);
  NegotiationConfig config;
  config.rejection_strategy = RejectionStrategy::aggressive;
  config.tau = 0.2;
  config.min_rounds = 5;
  const auto spec =
      parse_scripted_spec("popularity=greedy@1,personalization=greedy@1,sustainability=greedy@1");
  auto run = [&] {
    return run_negotiation(query, scripted_factory(spec, catalog, 0).roles(query), *catalog, config,
                           RunOptions::without_timing());
  };
  const auto a = run();
  const auto b = run();
  const double success = a.rounds.back().moderator_success;
  const bool ok = success == 1.0 && a.rounds_executed == 5 && a.stop_reason == StopReason::perfect &&
                  dump_rounds(a) == dump_rounds(b);
  return {ok, fmt("success %.4f, stopped after round %d (%s), repeat identical: %s", success,
                  a.rounds_executed, std::string(to_string(a.stop_reason)).c_str(),
                  dump_rounds(a) == dump_rounds(b) ? "yes" : "no")};
}

// --- 5 ---------------------------------------------------------------------

Outcome diversity() {
  const auto catalog = toy_catalog();
  const auto queries = load_queries(kData + "/toy_queries.jsonl");
  NegotiationConfig config;
  config.rejection_strategy = RejectionStrategy::aggressive;
  config.tau = 0.2;
  const auto factory = scripted_factory(ScriptedSpec{}, catalog, 0);
  std::vector<std::vector<CityId>> mami;
  std::vector<std::vector<CityId>> sasi;
  for (const auto& q : queries) {
    mami.push_back(run_negotiation(q, factory.roles(q), *catalog, config, RunOptions::without_timing())
                       .final_offer.cities());
    auto single = factory.single(q);
    sasi.push_back(run_sasi(q, *single, *catalog, config.k, RunOptions::without_timing()).grounded_ids());
  }
  const auto dm = collect_distribution(mami);
  const auto ds = collect_distribution(sasi);
  const double gm = gini(dm), gs = gini(ds);
  const double hm = normalized_entropy(dm), hs = normalized_entropy(ds);
  return {gm < gs && hm > hs,
          fmt("%zu queries: MAMI G %.3f H %.3f | SASI G %.3f H %.3f", queries.size(), gm, hm, gs, hs)};
}

// --- 6 ---------------------------------------------------------------------

Outcome hallucination_path() {
  const auto catalog = toy_catalog();
  const auto queries = load_queries(kData + "/toy_queries.jsonl");
  NegotiationConfig config;
  config.hallucination_correction_cycles = 1;
  config.tau = std::nullopt;

  auto run = [&](const std::string& spec_text, const QuerySpec& q) {
    const auto spec = parse_scripted_spec(spec_text);
    return run_negotiation(q, scripted_factory(spec, catalog, 11).roles(q), *catalog, config,
                           RunOptions::without_timing());
  };
  auto record = [](const RoundLog& log) -> const AgentRoundRecord& {
    return log.agents[static_cast<std::size_t>(AgentRole::personalization)];
  };

  int rounds = 0;
  int improved = 0;
  int stubborn_penalized = 0;
  int stubborn_rounds = 0;
  bool terminated = true;
  bool repeatable = true;
  for (const auto& q : queries) {
    const auto a = run("personalization=hallucinating@0.3", q);
    repeatable = repeatable && dump_rounds(a) == dump_rounds(run("personalization=hallucinating@0.3", q));
    for (const auto& log : a.rounds) {
      ++rounds;
      if (record(log).assessment.hallucination < record(log).hallucination_before_correction) ++improved;
    }
    try {
      const auto s = run("personalization=stubborn@0.3", q);
      terminated = terminated && s.rounds_executed <= config.max_rounds;
      for (const auto& log : s.rounds) {
        ++stubborn_rounds;
        if (record(log).assessment.hallucination > -1.0) ++stubborn_penalized;
      }
    } catch (const std::exception&) {
      terminated = false;
    }
  }
  const bool ok = rounds > 0 && improved == rounds && stubborn_penalized == stubborn_rounds &&
                  terminated && repeatable;
  return {ok, fmt("compliant: h improved in %d/%d rounds; stubborn: penalized in %d/%d rounds, "
                  "terminated: %s; repeatable: %s",
                  improved, rounds, stubborn_penalized, stubborn_rounds, terminated ? "yes" : "no",
                  repeatable ? "yes" : "no")};
}

// --- 7 ---------------------------------------------------------------------

Outcome termination() {
  NegotiationConfig config;
  config.max_rounds = 10;
  config.min_rounds = 5;
  config.tau = 0.2;
  const std::vector<double> early = {0.4, 0.6, 0.8, 1.0};
  const auto d1 = check_termination(early, 3, config);
  const std::vector<double> full(11, 0.5);
  const auto d2 = check_termination(full, 10, config);
  const std::vector<double> gain = {0.5, 0.5, 0.52, 0.55, 0.57, 0.58, 0.62};
  const auto d3 = check_termination(gain, 6, config);
  const bool ok = !d1.stop && d2 == TerminationDecision::stop_for(StopReason::max_rounds) &&
                  d3 == TerminationDecision::stop_for(StopReason::tau);
  return {ok, fmt("t=3 score 1.0 -> %s; t=10 -> %s; t=6 gain 0.24 -> %s",
                  d1.stop ? "stop" : "continue", std::string(to_string(d2.reason)).c_str(),
                  std::string(to_string(d3.reason)).c_str())};
}

// --- 8 ---------------------------------------------------------------------

Outcome baselines() {
  const auto catalog = toy_catalog();
  auto names = [](const BaselineResult& r) {
    std::string s;
    for (const auto& rec : r.recommendations) s += rec.name + "\n";
    return s;
  };
  bool reproducible = true;
  for (std::uint64_t seed : {0ULL, 7ULL, 123456789ULL})
    reproducible = reproducible && names(rand_rec(*catalog, 10, seed)) == names(rand_rec(*catalog, 10, seed));
  const bool seeds_differ = names(rand_rec(*catalog, 10, 7)) != names(rand_rec(*catalog, 10, 8));

  // Exhaustive reference: every city ordered by (score desc, id asc).
  std::vector<std::pair<double, CityId>> all;
  for (const auto& [id, rec] : catalog->cities()) all.emplace_back(-rec.popularity_score, id);
  std::sort(all.begin(), all.end());
  bool top_ok = true;
  for (int k = 1; k <= static_cast<int>(catalog->size()); ++k) {
    const auto got = top_pop(*catalog, k).grounded_ids();
    std::vector<CityId> want;
    for (int i = 0; i < k; ++i) want.push_back(all[static_cast<std::size_t>(i)].second);
    top_ok = top_ok && got == want;
  }
  return {reproducible && seeds_differ && top_ok,
          fmt("rand_rec reproducible: %s, seeds differ: %s; top_pop matches exhaustive sort for "
              "k=1..%zu: %s",
              reproducible ? "yes" : "no", seeds_differ ? "yes" : "no", catalog->size(),
              top_ok ? "yes" : "no")};
}

// --- 9 ---------------------------------------------------------------------

Outcome statistics() {
  const std::vector<double> p = {0.452, 0.0004};
  const auto corrected = bonferroni(p, 3);
  // Reference values from scipy.stats.ttest_ind(a, b, equal_var=False).
  const std::vector<double> a = {0.82, 0.75, 0.91, 0.68, 0.88, 0.79, 0.85, 0.73, 0.90, 0.81};
  const std::vector<double> b = {0.61, 0.72, 0.58, 0.66, 0.70, 0.55, 0.69, 0.63};
  const auto w = welch_t_test(a, b);
  const std::vector<double> c = {1, 2, 3, 4, 5};
  const std::vector<double> d = {2, 4, 6, 8, 10, 12};
  const auto w2 = welch_t_test(c, d);
  const bool welch_ok = std::fabs(w.statistic - 5.272261632689963) <= 1e-6 &&
                        std::fabs(w.p_value - 7.591374272702607e-05) <= 1e-6 &&
                        std::fabs(w.dof - 15.998998216974753) <= 1e-6 &&
                        std::fabs(w2.statistic - -2.3763541031440183) <= 1e-6 &&
                        std::fabs(w2.p_value - 0.04928433820673049) <= 1e-6 &&
                        std::fabs(w2.dof - 6.972255729794934) <= 1e-6;
  const bool ok = corrected[0] == 1.0 && std::fabs(corrected[1] - 0.0012) <= 1e-12 && welch_ok;
  return {ok, fmt("bonferroni(0.452, 3) = %.4f; bonferroni(0.0004, 3) = %.4f; welch t %.6f p %.6g",
                  corrected[0], corrected[1], w.statistic, w.p_value)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"scoring oracle equivalence", scoring_oracle},
      {"metric oracle equivalence", metric_oracle},
      {"protocol invariants", protocol_invariants},
      {"convergence with perfect-score stop", convergence},
      {"directional diversity", diversity},
      {"hallucination correction path", hallucination_path},
      {"termination arithmetic", termination},
      {"baseline determinism", baselines},
      {"statistics", statistics},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - failed << "/"
            << criteria.size() << std::endl;
  return failed ? 1 : 0;
}
