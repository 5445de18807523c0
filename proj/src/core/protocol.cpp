#include "core/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "core/baseline.hpp"
#include "core/calibration.hpp"
#include "core/optimizer.hpp"

namespace fairdecide::protocol {

TaskSpec build_task_spec(BundleMode mode, const std::string& target_definition,
                         const std::vector<std::string>& groups,
                         const std::vector<std::string>& strata,
                         const std::string& population_note) {
  if (target_definition.empty())
    fail(Errc::InvalidArgument, "task spec needs a target variable definition");
  if (mode == BundleMode::Fairness && groups.size() < 2)
    fail(Errc::MissingSensitiveAttribute,
         "fairness mode requires a declared sensitive attribute with at least two groups");
  TaskSpec t;
  t.mode = mode;
  t.target_definition = target_definition;
  t.groups = groups;
  t.strata = strata;
  t.population_note = population_note;
  return t;
}

PerformanceReport compute_performance(const Instances& instances,
                                      const CalibrationSet& calibration) {
  PerformanceReport perf;

  std::int64_t n = 0, correct = 0;
  std::vector<std::pair<double, int>> scored;  // (raw score, y)
  for (const auto& x : instances) {
    if (!x.outcome) continue;
    scored.emplace_back(x.raw_score, *x.outcome);
    if (x.calibrated_p) {
      ++n;
      const int pred = *x.calibrated_p >= 0.5 ? 1 : 0;
      if (pred == *x.outcome) ++correct;
    }
  }
  if (scored.empty()) fail(Errc::NoLabeledData, "performance needs labeled instances");
  perf.accuracy_at_half = n > 0 ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;

  // Mann-Whitney AUC with midranks for score ties
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum_pos = 0.0;
  std::int64_t n_pos = 0;
  std::size_t i = 0;
  while (i < scored.size()) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (scored[k].second == 1) {
        rank_sum_pos += midrank;
        ++n_pos;
      }
    i = j;
  }
  const std::int64_t n_neg = static_cast<std::int64_t>(scored.size()) - n_pos;
  perf.auroc = (n_pos > 0 && n_neg > 0)
                   ? (rank_sum_pos - 0.5 * n_pos * (n_pos + 1)) / (static_cast<double>(n_pos) * n_neg)
                   : 0.5;

  if (calibration.global)
    perf.calibration_reports.push_back(calibration::error_report(*calibration.global, instances));
  for (const auto& [g, fn] : calibration.per_group)
    perf.calibration_reports.push_back(calibration::error_report(fn, instances));
  return perf;
}

DeliverableBundle assemble_bundle(const TaskSpec& task, const std::string& scored_data_ref,
                                  const CalibrationSet& calibration,
                                  const std::map<std::string, BaselineDistribution>& baselines,
                                  const PerformanceReport& performance,
                                  const Provenance& provenance) {
  if (scored_data_ref.empty()) fail(Errc::InvalidArgument, "bundle needs a scored data reference");
  if (task.mode == BundleMode::Fairness) {
    for (const auto& g : task.groups) {
      if (!calibration.per_group.count(g))
        fail(Errc::GroupCoverageError, "group '" + g + "' has no calibration function");
      if (!baselines.count(g))
        fail(Errc::GroupCoverageError, "group '" + g + "' has no baseline distribution");
    }
  } else {
    if (!calibration.global)
      fail(Errc::InvalidArgument, "unconstrained bundle needs a global calibration function");
  }
  DeliverableBundle b;
  b.mode = task.mode;
  b.task = task;
  b.scored_data_ref = scored_data_ref;
  b.calibration = calibration;
  b.baselines = baselines;
  b.performance = performance;
  b.provenance = provenance;
  return b;
}

ValidationReport validate_bundle(const DeliverableBundle& bundle,
                                 const std::optional<FairnessConstraint>& intended_constraint) {
  ValidationReport report;
  const bool fairness = intended_constraint.has_value() || bundle.mode == BundleMode::Fairness;

  if (bundle.scored_data_ref.empty()) report.missing.push_back(deliverable::kScoredData);
  if (!bundle.performance) report.missing.push_back(deliverable::kPerformance);
  if (!bundle.calibration.global && bundle.calibration.per_group.empty())
    report.missing.push_back(deliverable::kCalibration);

  if (fairness) {
    std::set<std::string> declared(bundle.task.groups.begin(), bundle.task.groups.end());
    if (declared.size() < 2) {
      report.warnings.push_back("no sensitive-attribute group set declared in the task spec");
      for (const auto& [g, _] : bundle.baselines) declared.insert(g);
    }
    bool calib_ok = declared.size() >= 2;
    bool base_ok = declared.size() >= 2;
    for (const auto& g : declared) {
      if (!bundle.calibration.per_group.count(g)) calib_ok = false;
      if (!bundle.baselines.count(g)) base_ok = false;
    }
    if (!calib_ok) report.missing.push_back(deliverable::kGroupCalibration);
    if (!base_ok) report.missing.push_back(deliverable::kGroupBaselines);
  }
  report.valid = report.missing.empty();
  return report;
}

BaselineSet baseline_set_from_bundle(const DeliverableBundle& bundle) {
  if (bundle.baselines.empty()) fail(Errc::MissingDeliverable, deliverable::kGroupBaselines);
  BaselineSet set;
  double total = 0.0;
  for (const auto& [g, d] : bundle.baselines) total += static_cast<double>(d.count);
  for (const auto& [g, d] : bundle.baselines) {
    set.per_group[g] = d;
    set.group_weights[g] = static_cast<double>(d.count) / total;
  }
  return set;
}

OptimizationResult optimize_with_bundle(const DeliverableBundle& bundle, const UtilityParams& u,
                                        const std::optional<FairnessConstraint>& constraint,
                                        double resolution, int baseline_bins,
                                        const Instances* scored_for_strata) {
  const ValidationReport validation = validate_bundle(bundle, constraint);
  if (!validation.valid) {
    std::string names;
    for (const auto& m : validation.missing) {
      if (!names.empty()) names += ", ";
      names += m;
    }
    fail(Errc::MissingDeliverable, names);
  }
  if (!constraint) {
    // unconstrained mode may run from a single global baseline; build one per
    // known group, or from the bundle's own baselines when present
    if (!bundle.baselines.empty())
      return optimizer::optimize_unconstrained(baseline_set_from_bundle(bundle), u);
    if (!scored_for_strata)
      fail(Errc::MissingDeliverable,
           "unconstrained optimization without bundled baselines needs the scored data");
    Instances scored = *scored_for_strata;
    calibration::calibrate_instances(scored, bundle.calibration);
    return optimizer::optimize_unconstrained(baseline::estimate_set(scored, baseline_bins), u);
  }

  BaselineSet set = baseline_set_from_bundle(bundle);
  if (constraint->criterion == Criterion::ConditionalStatisticalParity) {
    if (!scored_for_strata)
      fail(Errc::MissingDeliverable,
           "conditional statistical parity needs the scored data to refine baselines by stratum");
    Instances scored = *scored_for_strata;
    calibration::calibrate_instances(scored, bundle.calibration);
    const BaselineSet refined =
        baseline::estimate_set(scored, baseline_bins, bundle.task.groups, /*with_strata=*/true);
    set.strata = refined.strata;
  }
  return optimizer::optimize_constrained(set, u, *constraint, resolution);
}

}  // namespace fairdecide::protocol
