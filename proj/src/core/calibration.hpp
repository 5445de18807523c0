#pragma once

#include <string>

#include "core/types.hpp"

namespace fairdecide::calibration {

// Equal-frequency binning over raw scores with pooled-adjacent-violators
// monotonization. Bin values are in-bin empirical frequencies of Y=1; pooling
// preserves the count-weighted mean. group_scope "" fits globally, otherwise
// only instances of that group are used.
CalibrationFunction fit(const Instances& instances, const std::string& group_scope, int bin_count);

// Value of the bin containing raw_score. Bins are half-open [lo, hi); scores
// below the first edge map to the first bin, at or above the last to the last.
double apply(const CalibrationFunction& fn, double raw_score);

// Sets calibrated_p on every instance from its group's function (or the
// global one). Raises UnknownGroup when a fairness-mode set lacks a group.
void calibrate_instances(Instances& instances, const CalibrationSet& set);

// Expected calibration error of fn evaluated on the given labeled instances,
// binned by fn's own edges.
CalibrationReport error_report(const CalibrationFunction& fn, const Instances& instances);

}  // namespace fairdecide::calibration
