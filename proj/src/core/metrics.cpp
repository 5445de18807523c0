#include "core/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <set>

namespace fairdecide::metrics {

namespace {

struct GroupCounts {
  std::int64_t n = 0;
  std::int64_t d1 = 0;
  std::int64_t y_known = 0;
  std::int64_t y1 = 0;
  std::int64_t y1d1 = 0;
  std::int64_t y0d1 = 0;
  std::int64_t y1d0 = 0;
  std::int64_t y0d0 = 0;
};

void require_decisions(const Instances& instances) {
  for (const auto& x : instances)
    if (!x.decision) fail(Errc::MissingDecision, "instance '" + x.id + "' has no decision");
}

void require_outcomes(const Instances& instances) {
  for (const auto& x : instances)
    if (!x.outcome) fail(Errc::MissingOutcome, "instance '" + x.id + "' has no outcome");
}

std::map<std::string, GroupCounts> count_by_group(const Instances& instances,
                                                  const std::vector<std::string>& declared) {
  std::map<std::string, GroupCounts> counts;
  for (const auto& g : declared) counts[g];
  for (const auto& x : instances) {
    auto& c = counts[x.group];
    c.n += 1;
    const int d = x.decision.value_or(0);
    if (d == 1) c.d1 += 1;
    if (x.outcome) {
      c.y_known += 1;
      const int y = *x.outcome;
      if (y == 1) {
        c.y1 += 1;
        (d == 1 ? c.y1d1 : c.y1d0) += 1;
      } else {
        (d == 1 ? c.y0d1 : c.y0d0) += 1;
      }
    }
  }
  if (instances.empty()) fail(Errc::EmptyGroup, "no instances");
  for (const auto& [g, c] : counts)
    if (c.n == 0) fail(Errc::EmptyGroup, "declared group '" + g + "' has no instances");
  return counts;
}

// Max pairwise |a-b| equals max - min.
std::optional<double> pairwise_gap(const std::vector<double>& values) {
  if (values.size() < 2) return values.empty() ? std::optional<double>{} : std::optional<double>{0.0};
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

void warn(std::vector<std::string>* warnings, const std::string& msg) {
  if (warnings) warnings->push_back(msg);
}

}  // namespace

std::map<std::string, double> acceptance_rates(const Instances& instances,
                                               const std::vector<std::string>& declared_groups) {
  require_decisions(instances);
  auto counts = count_by_group(instances, declared_groups);
  std::map<std::string, double> rates;
  for (const auto& [g, c] : counts) rates[g] = static_cast<double>(c.d1) / static_cast<double>(c.n);
  return rates;
}

double independence_gap(const Instances& instances, const std::vector<std::string>& declared_groups) {
  std::vector<double> values;
  for (const auto& [g, r] : acceptance_rates(instances, declared_groups)) values.push_back(r);
  return pairwise_gap(values).value_or(0.0);
}

double conditional_parity_gap(const Instances& instances, const std::vector<std::string>& strata,
                              const std::vector<std::string>& declared_groups,
                              std::vector<std::string>* warnings) {
  require_decisions(instances);
  if (strata.empty()) fail(Errc::InvalidArgument, "conditional parity needs a nonempty stratum set");
  std::set<std::string> allowed(strata.begin(), strata.end());
  for (const auto& x : instances) {
    if (!x.stratum) fail(Errc::MissingStratum, "instance '" + x.id + "' has no stratum");
    if (!allowed.count(*x.stratum))
      fail(Errc::MissingStratum, "instance '" + x.id + "' has stratum '" + *x.stratum +
                                     "' outside the declared set");
  }
  std::set<std::string> groups(declared_groups.begin(), declared_groups.end());
  for (const auto& x : instances) groups.insert(x.group);

  double gap = 0.0;
  bool any_pair = false;
  for (const auto& l : strata) {
    std::vector<double> rates;
    for (const auto& g : groups) {
      std::int64_t n = 0, d1 = 0;
      for (const auto& x : instances) {
        if (x.group != g || *x.stratum != l) continue;
        n += 1;
        if (*x.decision == 1) d1 += 1;
      }
      if (n == 0) {
        warn(warnings, "stratum '" + l + "': group '" + g + "' cell is empty; rate undefined");
        continue;
      }
      rates.push_back(static_cast<double>(d1) / static_cast<double>(n));
    }
    if (rates.size() < 2) {
      warn(warnings, "stratum '" + l + "': fewer than two nonempty group cells");
      continue;
    }
    any_pair = true;
    gap = std::max(gap, *pairwise_gap(rates));
  }
  if (!any_pair) warn(warnings, "conditional parity gap undefined: no stratum with two nonempty cells");
  return gap;
}

SeparationGaps separation_gaps(const Instances& instances,
                               const std::vector<std::string>& declared_groups,
                               std::vector<std::string>* warnings) {
  require_decisions(instances);
  require_outcomes(instances);
  auto counts = count_by_group(instances, declared_groups);
  std::vector<double> tprs, fprs;
  for (const auto& [g, c] : counts) {
    const std::int64_t y0 = c.y_known - c.y1;
    if (c.y1 > 0)
      tprs.push_back(static_cast<double>(c.y1d1) / static_cast<double>(c.y1));
    else
      warn(warnings, "group '" + g + "': no instances with Y=1; TPR undefined");
    if (y0 > 0)
      fprs.push_back(static_cast<double>(c.y0d1) / static_cast<double>(y0));
    else
      warn(warnings, "group '" + g + "': no instances with Y=0; FPR undefined");
  }
  return {pairwise_gap(tprs), pairwise_gap(fprs)};
}

SufficiencyGaps sufficiency_gaps(const Instances& instances,
                                 const std::vector<std::string>& declared_groups,
                                 std::vector<std::string>* warnings) {
  require_decisions(instances);
  require_outcomes(instances);
  auto counts = count_by_group(instances, declared_groups);
  std::vector<double> ppvs, fors;
  for (const auto& [g, c] : counts) {
    const std::int64_t d1 = c.y1d1 + c.y0d1;
    const std::int64_t d0 = c.y1d0 + c.y0d0;
    if (d1 > 0)
      ppvs.push_back(static_cast<double>(c.y1d1) / static_cast<double>(d1));
    else
      warn(warnings, "group '" + g + "': no instances with D=1; PPV undefined");
    if (d0 > 0)
      fors.push_back(static_cast<double>(c.y1d0) / static_cast<double>(d0));
    else
      warn(warnings, "group '" + g + "': no instances with D=0; FOR undefined");
  }
  return {pairwise_gap(ppvs), pairwise_gap(fors)};
}

std::vector<std::string> constraint_components(Criterion c) {
  switch (c) {
    case Criterion::Independence: return {"independence"};
    case Criterion::ConditionalStatisticalParity: return {"conditional_statistical_parity"};
    case Criterion::EqualOpportunity: return {"tpr"};
    case Criterion::PredictiveEquality: return {"fpr"};
    case Criterion::EqualizedOdds: return {"tpr", "fpr"};
    case Criterion::PredictiveParity: return {"ppv"};
    case Criterion::FORParity: return {"for"};
    case Criterion::Sufficiency: return {"ppv", "for"};
  }
  return {};
}

GapReport audit(const Instances& instances, const FairnessConstraint& constraint,
                const std::vector<std::string>& declared_groups) {
  constraint.check();
  require_decisions(instances);
  if (criterion_needs_outcome(constraint.criterion)) require_outcomes(instances);

  GapReport report;
  report.audited = constraint;

  auto counts = count_by_group(instances, declared_groups);
  const bool all_outcomes =
      std::all_of(instances.begin(), instances.end(), [](const auto& x) { return bool(x.outcome); });

  for (const auto& [g, c] : counts) {
    GroupRates r;
    r.acceptance = static_cast<double>(c.d1) / static_cast<double>(c.n);
    if (c.y_known > 0) {
      r.base_rate = static_cast<double>(c.y1) / static_cast<double>(c.y_known);
      const std::int64_t y0 = c.y_known - c.y1;
      const std::int64_t d1 = c.y1d1 + c.y0d1;
      const std::int64_t d0 = c.y1d0 + c.y0d0;
      if (c.y1 > 0) r.tpr = static_cast<double>(c.y1d1) / static_cast<double>(c.y1);
      if (y0 > 0) r.fpr = static_cast<double>(c.y0d1) / static_cast<double>(y0);
      if (d1 > 0) r.ppv = static_cast<double>(c.y1d1) / static_cast<double>(d1);
      if (d0 > 0) r.for_rate = static_cast<double>(c.y1d0) / static_cast<double>(d0);
    }
    report.per_group[g] = r;
  }

  report.gaps["independence"] = independence_gap(instances, declared_groups);
  if (constraint.criterion == Criterion::ConditionalStatisticalParity) {
    report.gaps["conditional_statistical_parity"] =
        conditional_parity_gap(instances, constraint.strata, declared_groups, &report.warnings);
  }
  if (all_outcomes) {
    auto sep = separation_gaps(instances, declared_groups, &report.warnings);
    auto suf = sufficiency_gaps(instances, declared_groups, &report.warnings);
    report.gaps["tpr"] = sep.tpr_gap;
    report.gaps["fpr"] = sep.fpr_gap;
    report.gaps["ppv"] = suf.ppv_gap;
    report.gaps["for"] = suf.for_gap;
  }

  bool pass = true;
  for (const auto& comp : constraint_components(constraint.criterion)) {
    auto it = report.gaps.find(comp);
    if (it == report.gaps.end() || !it->second) {
      report.warnings.push_back("constraint component '" + comp + "' is undefined on this data");
      continue;  // undefined gaps never fail the audit, but they are flagged
    }
    if (*it->second > constraint.epsilon) pass = false;
  }
  report.pass = pass;
  return report;
}

}  // namespace fairdecide::metrics
