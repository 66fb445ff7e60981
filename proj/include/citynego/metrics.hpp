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
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "citynego/knowledge_base.hpp"

namespace citynego {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// How often each city was finally recommended across a set of runs.
struct FrequencyDistribution {
  std::map<CityId, long> counts;

  /// Counts of the cities that occur at least once.
  std::vector<double> support() const {
    std::vector<double> out;
    for (const auto& [id, c] : counts)
      if (c > 0) out.push_back(static_cast<double>(c));
    return out;
  }
  long total() const {
    long t = 0;
    for (const auto& [id, c] : counts) t += c;
    return t;
  }
};

inline FrequencyDistribution collect_distribution(const std::vector<std::vector<CityId>>& results) {
  FrequencyDistribution d;
  for (const auto& list : results)
    for (const auto& id : list) ++d.counts[id];
  return d;
}

/// Gini over raw counts: sum_ij |x_i - x_j| / (2 n sum x). Uses the sorted
/// closed form sum_i (2i - n - 1) x_(i) / (n sum x).
inline double gini(std::span<const double> counts) {
  if (counts.empty()) throw MetricError("gini of an empty distribution");
  if (counts.size() == 1) return 0.0;
  std::vector<double> x(counts.begin(), counts.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  const double sum = std::accumulate(x.begin(), x.end(), 0.0);
  if (!(sum > 0.0)) throw MetricError("gini needs a positive total");
  double weighted = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) * x[i];
  return std::max(0.0, weighted / (n * sum));
}

inline double gini(const FrequencyDistribution& dist) {
  const auto s = dist.support();
  return gini(std::span<const double>(s));
}

/// Shannon entropy of the count proportions divided by ln(n); 0 when n = 1.
inline double normalized_entropy(std::span<const double> counts) {
  if (counts.empty()) throw MetricError("entropy of an empty distribution");
  if (counts.size() == 1) return 0.0;
  const double sum = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(sum > 0.0)) throw MetricError("entropy needs a positive total");
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / sum;
    h -= p * std::log(p);
  }
  return std::clamp(h / std::log(static_cast<double>(counts.size())), 0.0, 1.0);
}

inline double normalized_entropy(const FrequencyDistribution& dist) {
  const auto s = dist.support();
  return normalized_entropy(std::span<const double>(s));
}

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double dof = 0.0;
};

/// Welch's unequal-variance two-sample t-test, two-sided.
inline TestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw MetricError("welch_t_test needs >= 2 values per sample");
  auto moments = [](std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / (n - 1.0)};
  };
  const auto [mean_a, var_a] = moments(a);
  const auto [mean_b, var_b] = moments(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ra = var_a / na;
  const double rb = var_b / nb;
  const double se2 = ra + rb;
  if (se2 == 0.0) {
    if (mean_a == mean_b) return {0.0, 1.0, 0.0};
    return {mean_a > mean_b ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity(),
            0.0, 0.0};
  }
  TestResult r;
  r.statistic = (mean_a - mean_b) / std::sqrt(se2);
  r.dof = se2 * se2 / (ra * ra / (na - 1.0) + rb * rb / (nb - 1.0));
  const boost::math::students_t_distribution<double> dist(r.dof);
  r.p_value = std::min(1.0, 2.0 * boost::math::cdf(dist, -std::fabs(r.statistic)));
  return r;
}

/// min(1, p * m) for each p.
inline std::vector<double> bonferroni(std::span<const double> p_values, int m) {
  if (m < 1) throw MetricError("bonferroni needs m >= 1");
  std::vector<double> out;
  out.reserve(p_values.size());
  for (double p : p_values) out.push_back(std::min(1.0, p * m));
  return out;
}

}  // namespace citynego
