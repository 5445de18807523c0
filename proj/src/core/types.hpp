#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairdecide {

// Error codes shared by the C++ core, the C API and the CLI exit-code map.
enum class Errc {
  Ok = 0,
  MissingDecision,
  MissingOutcome,
  MissingStratum,
  EmptyGroup,
  EmptyStratumGroup,
  NoLabeledData,
  InsufficientData,
  UncalibratedInstance,
  UnknownGroup,
  GroupMismatch,
  DegenerateUtility,
  NegativeRegime,
  Infeasible,
  MissingDeliverable,
  MissingSensitiveAttribute,
  GroupCoverageError,
  SchemaError,
  MissingArtifact,
  InvalidArgument,
  IoError,
};

class FdError : public std::runtime_error {
 public:
  FdError(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw FdError(code, what); }

// One scored individual. Optional fields use sentinel-free optionals so a
// missing outcome is distinguishable from outcome 0.
struct LabeledInstance {
  std::string id;
  double raw_score = 0.0;
  std::string group;
  std::optional<int> outcome;            // Y in {0,1}
  std::optional<std::string> stratum;    // L, the legitimate feature
  std::optional<int> decision;           // D in {0,1}
  std::optional<double> calibrated_p;    // p-hat in [0,1]
};

using Instances = std::vector<LabeledInstance>;

enum class Criterion {
  Independence,
  ConditionalStatisticalParity,
  EqualOpportunity,
  PredictiveEquality,
  EqualizedOdds,
  PredictiveParity,
  FORParity,
  Sufficiency,
};

const char* criterion_name(Criterion c);
std::optional<Criterion> criterion_from_name(const std::string& name);
bool criterion_needs_outcome(Criterion c);
bool criterion_needs_strata(Criterion c);

struct FairnessConstraint {
  Criterion criterion = Criterion::Independence;
  double epsilon = 0.0;                       // gap tolerance, in [0,1]
  std::vector<std::string> strata;            // required iff ConditionalStatisticalParity

  void check() const;
};

// Per-group conditional rates; absent value means the conditioning set was empty.
struct GroupRates {
  std::optional<double> acceptance;
  std::optional<double> tpr;
  std::optional<double> fpr;
  std::optional<double> ppv;
  std::optional<double> for_rate;
  std::optional<double> base_rate;
};

struct GapReport {
  std::map<std::string, std::optional<double>> gaps;   // component name -> gap
  std::map<std::string, GroupRates> per_group;
  std::optional<bool> pass;                            // set when a constraint was audited
  std::optional<FairnessConstraint> audited;
  std::vector<std::string> warnings;
};

// Decision utilities of the accept/reject problem: profit on a correct
// acceptance, loss magnitude on a wrong one, outside option on rejection.
struct UtilityParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.0;

  void check() const;
};

enum class Direction { AcceptAbove, AcceptBelow };

const char* direction_name(Direction d);
std::optional<Direction> direction_from_name(const std::string& name);

// Randomized two-threshold rule for one group. Deterministic iff tau_lo ==
// tau_hi. In the band the rule accepts with probability mix, decided by a
// per-instance draw derived from (seed, instance id).
struct GroupRule {
  Direction direction = Direction::AcceptAbove;
  double tau_lo = 0.5;
  double tau_hi = 0.5;
  double mix = 0.0;

  bool deterministic() const { return tau_lo == tau_hi; }
};

struct DecisionRule {
  std::map<std::string, GroupRule> per_group;

  bool requires_seed() const;
  void check() const;
};

struct SearchTrace {
  double resolution = 0.0;
  std::uint64_t evaluations = 0;
  std::string method;
};

struct OptimizationResult {
  DecisionRule rule;
  double expected_utility_per_capita = 0.0;
  std::map<std::string, double> achieved_gaps;      // constraint component -> gap
  std::map<std::string, bool> binding;
  SearchTrace search_trace;
  std::optional<double> target_value;               // v for PredictiveParity / FORParity
  std::vector<std::string> warnings;
};

// Monotone step function from raw score to probability estimate. Edges are the
// interior bin boundaries, so a single-bin function has none and degenerate
// score ranges stay well-formed.
struct CalibrationFunction {
  std::string group_scope;                 // "" means global
  std::vector<double> bin_edges;           // strictly ascending, size = bins - 1
  std::vector<double> bin_values;          // nondecreasing, in [0,1]
  std::vector<std::int64_t> fit_counts;    // per bin

  bool global() const { return group_scope.empty(); }
  std::size_t bins() const { return bin_values.size(); }
  void check() const;
};

struct CalibrationBin {
  double mean_score = 0.0;
  double frequency = 0.0;
  std::int64_t count = 0;
};

struct CalibrationReport {
  std::string group_scope;
  double ece = 0.0;
  std::vector<CalibrationBin> bins;
};

// Global or per-group calibration, as delivered in a bundle.
struct CalibrationSet {
  std::optional<CalibrationFunction> global;
  std::map<std::string, CalibrationFunction> per_group;

  bool fairness_mode() const { return !per_group.empty(); }
};

enum class BaseRateSource { Labels, CalibratedScores };

// Per-group histogram of calibrated probabilities over [0,1].
struct BaselineDistribution {
  std::string group;
  std::vector<double> bin_edges;       // size bins+1, covers [0,1]
  std::vector<double> mass;            // sums to 1
  std::int64_t count = 0;
  double base_rate = 0.0;
  BaseRateSource base_rate_source = BaseRateSource::Labels;

  std::size_t bins() const { return mass.size(); }
  double midpoint(std::size_t b) const { return 0.5 * (bin_edges[b] + bin_edges[b + 1]); }
  void check() const;
};

// Baselines for one (group, stratum) cell plus its population share.
struct StratumCell {
  BaselineDistribution dist;
  double weight = 0.0;   // share of the whole population
};

struct BaselineSet {
  std::map<std::string, BaselineDistribution> per_group;
  std::map<std::string, double> group_weights;                          // sums to 1
  std::map<std::string, std::map<std::string, StratumCell>> strata;     // stratum -> group -> cell

  std::vector<std::string> groups() const;
  void check() const;
};

enum class BundleMode { Unconstrained, Fairness };

const char* bundle_mode_name(BundleMode m);
std::optional<BundleMode> bundle_mode_from_name(const std::string& name);

struct TaskSpec {
  BundleMode mode = BundleMode::Unconstrained;
  std::string target_definition;
  std::vector<std::string> groups;       // declared sensitive-attribute values
  std::vector<std::string> strata;
  std::string population_note;
};

struct PerformanceReport {
  double accuracy_at_half = 0.0;
  double auroc = 0.0;
  std::vector<CalibrationReport> calibration_reports;
};

struct Provenance {
  std::string estimation_set;
  std::string generator;       // RNG identity when data is synthetic
  std::string timestamp;       // caller-supplied; outputs stay reproducible
};

struct DeliverableBundle {
  int version = 1;
  BundleMode mode = BundleMode::Unconstrained;
  TaskSpec task;
  std::string scored_data_ref;            // relative path to the instance table
  std::optional<PerformanceReport> performance;
  CalibrationSet calibration;
  std::map<std::string, BaselineDistribution> baselines;   // fairness mode only
  Provenance provenance;
  std::map<std::string, std::string> extensions;
};

struct ValidationReport {
  bool valid = true;
  std::vector<std::string> missing;
  std::vector<std::string> warnings;
};

// Table-1 deliverable names, used by ValidationReport.missing and the
// MissingDeliverable error message.
namespace deliverable {
inline constexpr const char* kScoredData = "scored data";
inline constexpr const char* kPerformance = "prediction model performance";
inline constexpr const char* kCalibration = "calibration function";
inline constexpr const char* kGroupCalibration = "group-specific calibration functions";
inline constexpr const char* kGroupBaselines = "group-specific baseline distributions";
}  // namespace deliverable

// One synthetic group: Beta-distributed true probabilities, Bernoulli labels,
// optionally a monotone distortion of the reported score.
struct SyntheticGroupSpec {
  std::string name;
  std::int64_t size = 0;
  double beta_a = 1.0;
  double beta_b = 1.0;
  double distortion_power = 1.0;   // raw_score = p^k; 1.0 keeps the score calibrated
};

struct SyntheticSpec {
  std::vector<SyntheticGroupSpec> groups;
  std::uint64_t seed = 0;

  void check() const;
};

}  // namespace fairdecide
