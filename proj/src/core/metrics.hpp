#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace fairdecide::metrics {

// All gaps are maximum pairwise absolute differences of per-group conditional
// frequencies. Groups whose conditioning set is empty are excluded from the
// maximum and reported through `warnings`, never treated as zero.

struct SeparationGaps {
  std::optional<double> tpr_gap;
  std::optional<double> fpr_gap;
};

struct SufficiencyGaps {
  std::optional<double> ppv_gap;
  std::optional<double> for_gap;
};

// Empirical P(D=1 | A=a). `declared_groups`, when nonempty, fixes the group
// set; a declared group without instances raises EmptyGroup.
std::map<std::string, double> acceptance_rates(const Instances& instances,
                                               const std::vector<std::string>& declared_groups = {});

double independence_gap(const Instances& instances,
                        const std::vector<std::string>& declared_groups = {});

// Max over strata of the within-stratum independence gap. Empty (stratum,
// group) cells are skipped with a warning.
double conditional_parity_gap(const Instances& instances, const std::vector<std::string>& strata,
                              const std::vector<std::string>& declared_groups = {},
                              std::vector<std::string>* warnings = nullptr);

SeparationGaps separation_gaps(const Instances& instances,
                               const std::vector<std::string>& declared_groups = {},
                               std::vector<std::string>* warnings = nullptr);

SufficiencyGaps sufficiency_gaps(const Instances& instances,
                                 const std::vector<std::string>& declared_groups = {},
                                 std::vector<std::string>* warnings = nullptr);

// Full audit: every gap the data supports, per-group rates, and pass/fail for
// the given constraint (pass iff all defined constrained gaps <= epsilon).
GapReport audit(const Instances& instances, const FairnessConstraint& constraint,
                const std::vector<std::string>& declared_groups = {});

// Gap-component keys used in GapReport.gaps and OptimizationResult.achieved_gaps.
std::vector<std::string> constraint_components(Criterion c);

}  // namespace fairdecide::metrics
