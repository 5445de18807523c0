#include "core/types.hpp"

#include <cmath>

namespace fairdecide {

const char* criterion_name(Criterion c) {
  switch (c) {
    case Criterion::Independence: return "independence";
    case Criterion::ConditionalStatisticalParity: return "conditional_statistical_parity";
    case Criterion::EqualOpportunity: return "equal_opportunity";
    case Criterion::PredictiveEquality: return "predictive_equality";
    case Criterion::EqualizedOdds: return "equalized_odds";
    case Criterion::PredictiveParity: return "predictive_parity";
    case Criterion::FORParity: return "for_parity";
    case Criterion::Sufficiency: return "sufficiency";
  }
  return "?";
}

std::optional<Criterion> criterion_from_name(const std::string& name) {
  for (Criterion c : {Criterion::Independence, Criterion::ConditionalStatisticalParity,
                      Criterion::EqualOpportunity, Criterion::PredictiveEquality,
                      Criterion::EqualizedOdds, Criterion::PredictiveParity, Criterion::FORParity,
                      Criterion::Sufficiency}) {
    if (name == criterion_name(c)) return c;
  }
  return std::nullopt;
}

bool criterion_needs_outcome(Criterion c) {
  switch (c) {
    case Criterion::Independence:
    case Criterion::ConditionalStatisticalParity:
      return false;
    default:
      return true;
  }
}

bool criterion_needs_strata(Criterion c) { return c == Criterion::ConditionalStatisticalParity; }

void FairnessConstraint::check() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail(Errc::InvalidArgument, "epsilon must lie in [0,1]");
  if (criterion_needs_strata(criterion) && strata.empty())
    fail(Errc::InvalidArgument, "conditional_statistical_parity requires a nonempty stratum set");
}

void UtilityParams::check() const {
  if (!(std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(gamma)))
    fail(Errc::InvalidArgument, "utility parameters must be finite");
  if (alpha + beta == 0.0) fail(Errc::DegenerateUtility, "alpha + beta must be nonzero");
}

const char* direction_name(Direction d) {
  return d == Direction::AcceptAbove ? "accept-above" : "accept-below";
}

std::optional<Direction> direction_from_name(const std::string& name) {
  if (name == "accept-above") return Direction::AcceptAbove;
  if (name == "accept-below") return Direction::AcceptBelow;
  return std::nullopt;
}

bool DecisionRule::requires_seed() const {
  for (const auto& [g, r] : per_group)
    if (r.tau_lo < r.tau_hi && r.mix > 0.0 && r.mix < 1.0) return true;
  return false;
}

void DecisionRule::check() const {
  if (per_group.empty()) fail(Errc::InvalidArgument, "decision rule covers no group");
  for (const auto& [g, r] : per_group) {
    if (!(r.tau_lo >= 0.0 && r.tau_hi <= 1.0 && r.tau_lo <= r.tau_hi))
      fail(Errc::InvalidArgument, "rule thresholds for group '" + g + "' must satisfy 0 <= tau_lo <= tau_hi <= 1");
    if (!(r.mix >= 0.0 && r.mix <= 1.0))
      fail(Errc::InvalidArgument, "rule mix for group '" + g + "' must lie in [0,1]");
  }
}

void CalibrationFunction::check() const {
  if (bin_values.empty()) fail(Errc::InvalidArgument, "calibration function has no bins");
  if (bin_edges.size() + 1 != bin_values.size())
    fail(Errc::InvalidArgument, "calibration function needs bins-1 interior edges");
  if (fit_counts.size() != bin_values.size())
    fail(Errc::InvalidArgument, "calibration fit_counts size mismatch");
  for (std::size_t i = 1; i < bin_edges.size(); ++i)
    if (!(bin_edges[i - 1] < bin_edges[i]))
      fail(Errc::InvalidArgument, "calibration bin edges must be strictly ascending");
  for (std::size_t i = 0; i < bin_values.size(); ++i) {
    if (!(bin_values[i] >= 0.0 && bin_values[i] <= 1.0))
      fail(Errc::InvalidArgument, "calibration bin values must lie in [0,1]");
    if (i > 0 && bin_values[i] < bin_values[i - 1])
      fail(Errc::InvalidArgument, "calibration bin values must be nondecreasing");
    if (fit_counts[i] < 0) fail(Errc::InvalidArgument, "calibration fit counts must be >= 0");
  }
}

void BaselineDistribution::check() const {
  if (mass.empty() || bin_edges.size() != mass.size() + 1)
    fail(Errc::InvalidArgument, "baseline needs bins+1 edges");
  if (count <= 0) fail(Errc::InvalidArgument, "baseline count must be positive");
  if (!(base_rate >= 0.0 && base_rate <= 1.0))
    fail(Errc::InvalidArgument, "baseline base_rate must lie in [0,1]");
  if (bin_edges.front() != 0.0 || bin_edges.back() != 1.0)
    fail(Errc::InvalidArgument, "baseline bin edges must cover [0,1]");
  double total = 0.0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (mass[i] < 0.0) fail(Errc::InvalidArgument, "baseline mass must be nonnegative");
    if (bin_edges[i] >= bin_edges[i + 1])
      fail(Errc::InvalidArgument, "baseline bin edges must be strictly ascending");
    total += mass[i];
  }
  if (std::fabs(total - 1.0) > 1e-9) fail(Errc::InvalidArgument, "baseline mass must sum to 1");
}

std::vector<std::string> BaselineSet::groups() const {
  std::vector<std::string> out;
  out.reserve(per_group.size());
  for (const auto& [g, _] : per_group) out.push_back(g);
  return out;
}

void BaselineSet::check() const {
  if (per_group.empty()) fail(Errc::InvalidArgument, "baseline set is empty");
  double total = 0.0;
  for (const auto& [g, d] : per_group) {
    d.check();
    auto it = group_weights.find(g);
    if (it == group_weights.end()) fail(Errc::GroupMismatch, "no weight for group '" + g + "'");
    if (it->second < 0.0) fail(Errc::InvalidArgument, "group weights must be nonnegative");
    total += it->second;
  }
  if (std::fabs(total - 1.0) > 1e-9) fail(Errc::InvalidArgument, "group weights must sum to 1");
}

const char* bundle_mode_name(BundleMode m) {
  return m == BundleMode::Unconstrained ? "unconstrained" : "fairness";
}

std::optional<BundleMode> bundle_mode_from_name(const std::string& name) {
  if (name == "unconstrained") return BundleMode::Unconstrained;
  if (name == "fairness") return BundleMode::Fairness;
  return std::nullopt;
}

void SyntheticSpec::check() const {
  if (groups.empty()) fail(Errc::InvalidArgument, "synthetic spec needs at least one group");
  for (const auto& g : groups) {
    if (g.size < 1) fail(Errc::InvalidArgument, "synthetic group sizes must be >= 1");
    if (!(g.beta_a > 0.0 && g.beta_b > 0.0))
      fail(Errc::InvalidArgument, "Beta shape parameters must be positive");
    if (!(g.distortion_power > 0.0))
      fail(Errc::InvalidArgument, "distortion power must be positive to stay monotone");
  }
}

}  // namespace fairdecide
