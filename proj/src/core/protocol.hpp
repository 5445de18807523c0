#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace fairdecide::protocol {

// The decision-maker's task specification. Fairness mode requires a declared
// sensitive-attribute group set with at least two groups.
TaskSpec build_task_spec(BundleMode mode, const std::string& target_definition,
                         const std::vector<std::string>& groups = {},
                         const std::vector<std::string>& strata = {},
                         const std::string& population_note = "");

// Accuracy at the 0.5 probability cutoff, a rank-based area under the ROC
// curve on raw scores, and calibration error reports for every function in
// the set, all computed on the labeled, calibrated instances.
PerformanceReport compute_performance(const Instances& instances, const CalibrationSet& calibration);

// The prediction-modeler's return bundle. Raises GroupCoverageError when a
// declared group lacks its calibration function or baseline in fairness mode.
DeliverableBundle assemble_bundle(const TaskSpec& task, const std::string& scored_data_ref,
                                  const CalibrationSet& calibration,
                                  const std::map<std::string, BaselineDistribution>& baselines,
                                  const PerformanceReport& performance,
                                  const Provenance& provenance);

// Checks that the bundle carries every deliverable required for the intended
// mode (the bundle's own mode, escalated to fairness when a constraint is
// given). Reports, never throws.
ValidationReport validate_bundle(const DeliverableBundle& bundle,
                                 const std::optional<FairnessConstraint>& intended_constraint);

// Baselines and population weights as delivered in the bundle.
BaselineSet baseline_set_from_bundle(const DeliverableBundle& bundle);

// Validation gate in front of the optimizer: an invalid bundle fails with
// MissingDeliverable naming exactly the validation report's missing list.
// scored_for_strata supplies the instance table when the criterion needs
// stratum-refined baselines (conditional statistical parity).
OptimizationResult optimize_with_bundle(const DeliverableBundle& bundle, const UtilityParams& u,
                                        const std::optional<FairnessConstraint>& constraint,
                                        double resolution, int baseline_bins,
                                        const Instances* scored_for_strata = nullptr);

}  // namespace fairdecide::protocol
