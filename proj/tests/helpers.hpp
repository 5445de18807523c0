#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "core/baseline.hpp"
#include "core/types.hpp"

namespace fairdecide::test {

inline LabeledInstance inst(std::string id, std::string group, std::optional<int> decision = {},
                            std::optional<int> outcome = {}, double score = 0.5,
                            std::optional<double> p = {}, std::optional<std::string> stratum = {}) {
  LabeledInstance x;
  x.id = std::move(id);
  x.group = std::move(group);
  x.decision = decision;
  x.outcome = outcome;
  x.raw_score = score;
  x.calibrated_p = p;
  x.stratum = std::move(stratum);
  return x;
}

// Population with decisions (and optionally outcomes/strata) drawn uniformly.
inline Instances random_population(std::mt19937& gen, int n, int n_groups, bool with_outcomes,
                                   bool with_strata = false) {
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> pick_group(0, n_groups - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Instances out;
  for (int i = 0; i < n; ++i) {
    LabeledInstance x;
    x.id = "i" + std::to_string(i);
    x.group = "g" + std::to_string(pick_group(gen));
    x.raw_score = unif(gen);
    x.decision = coin(gen);
    if (with_outcomes) x.outcome = coin(gen);
    if (with_strata) x.stratum = "s" + std::to_string(coin(gen));
    out.push_back(std::move(x));
  }
  return out;
}

// Baseline from explicit (p, mass) pairs, mass normalized, 100 bins.
inline BaselineDistribution baseline_of(const std::string& group,
                                        const std::vector<std::pair<double, double>>& points,
                                        double base_rate, int bins = 100) {
  Instances tmp;
  int i = 0;
  double total = 0.0;
  for (const auto& [p, m] : points) total += m;
  // approximate masses with a large integer population
  for (const auto& [p, m] : points) {
    const int copies = static_cast<int>(m / total * 10000 + 0.5);
    for (int c = 0; c < copies; ++c) {
      LabeledInstance x;
      x.id = group + std::to_string(i++);
      x.group = group;
      x.calibrated_p = p;
      x.raw_score = p;
      tmp.push_back(std::move(x));
    }
  }
  BaselineDistribution b = baseline::estimate(tmp, group, bins);
  b.base_rate = base_rate;
  b.base_rate_source = BaseRateSource::Labels;
  return b;
}

}  // namespace fairdecide::test
