#pragma once

#include <cstdint>

#include "core/types.hpp"

namespace fairdecide::optimizer {

// Per-capita expected utility of a (possibly randomized) rule under the
// baseline distributions, with bin midpoints standing in for the true
// probability of each mass bin.
double evaluate_utility(const DecisionRule& rule, const BaselineSet& baselines,
                        const UtilityParams& u);

// Closed-form accept-above cutoff (beta+gamma)/(alpha+beta). Returns the raw
// value, which can lie outside [0,1]; emitted rules clamp it. Refuses the
// inverted regime alpha+beta < 0.
double optimal_unconstrained_threshold(const UtilityParams& u);

OptimizationResult optimize_unconstrained(const BaselineSet& baselines, const UtilityParams& u);

// Utility-maximal rule within the criterion's rule family whose achieved
// gap(s) stay within constraint.epsilon, searched on a threshold grid of the
// given resolution:
//   - independence / conditional parity / equal opportunity / predictive
//     equality: deterministic accept-above thresholds per group;
//   - equalized odds / sufficiency: randomized two-threshold bands per group
//     (thresholds and mix on the grid), coupled through a rate lattice of one
//     grid step, so reported gaps can exceed epsilon by at most one step;
//   - predictive parity / FOR parity: target value v scanned over the grid,
//     per-group direction decided by v against the group's base rate.
// Conditional statistical parity additionally requires stratum-refined
// baselines in the set (MissingDeliverable otherwise).
OptimizationResult optimize_constrained(const BaselineSet& baselines, const UtilityParams& u,
                                        const FairnessConstraint& constraint, double resolution);

// Applies the rule to calibrated instances. Band decisions use a draw derived
// from (seed, instance id); identical inputs give identical decisions.
Instances apply_rule(const DecisionRule& rule, const Instances& instances, std::uint64_t seed);

}  // namespace fairdecide::optimizer
