#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace fairdecide::baseline {

// Histogram of calibrated_p over bin_count equal-width bins on [0,1].
// base_rate prefers empirical outcomes (present for >= 90% of the group) and
// falls back to the mean calibrated probability, flagged via base_rate_source.
BaselineDistribution estimate(const Instances& instances, const std::string& group, int bin_count);

// Per-group baselines plus population-share weights for every observed (or
// declared) group. When with_strata is true and instances carry strata,
// (group, stratum) cells are estimated as well.
BaselineSet estimate_set(const Instances& instances, int bin_count,
                         const std::vector<std::string>& declared_groups = {},
                         bool with_strata = false);

struct RatePoint {
  double acceptance = 0.0;
  std::optional<double> tpr;
  std::optional<double> fpr;
  std::optional<double> ppv;
  std::optional<double> for_rate;
};

// Rates implied by a single-threshold rule on a baseline, treating each bin's
// midpoint as the true probability of its mass. Zero-denominator ratios come
// back unset.
RatePoint expected_rate_curves(const BaselineDistribution& b, double tau, Direction direction);

}  // namespace fairdecide::baseline
