#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace fairdecide::testkit {

// Desk-scale verification tools: a seeded synthetic-population generator and
// brute-force reference implementations of the metric and optimizer paths.
// The brute-force code shares no logic with metrics.cpp / optimizer.cpp beyond
// the pinned constraint-rate arithmetic convention documented in
// optimizer.cpp, which both sides restate verbatim.

// Beta-distributed true probabilities, Bernoulli outcomes, raw_score equal to
// the (optionally distorted) true probability. Deterministic in spec.seed.
Instances generate_population(const SyntheticSpec& spec);

struct OracleRates {
  std::optional<double> acceptance;
  std::optional<double> tpr;
  std::optional<double> fpr;
  std::optional<double> ppv;
  std::optional<double> for_rate;
  std::optional<double> base_rate;
};

struct OracleGaps {
  std::map<std::string, std::optional<double>> gaps;
  std::map<std::string, OracleRates> per_group;
  std::vector<std::string> undefined;   // "group/component" markers
};

// Direct conditional counting over the instance table.
OracleGaps brute_force_metrics(const Instances& instances,
                               const std::vector<std::string>& strata = {});

// Exhaustive search over the same rule family and grid as
// optimizer::optimize_constrained, with the identical tie-breaking
// definition. Raises Infeasible exactly when the optimizer does.
OptimizationResult brute_force_optimum(const BaselineSet& baselines, const UtilityParams& u,
                                       const FairnessConstraint& constraint, double resolution);

}  // namespace fairdecide::testkit
