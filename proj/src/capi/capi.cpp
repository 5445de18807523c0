#include "fairdecide.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <optional>
#include <set>
#include <string>

#include "core/baseline.hpp"
#include "core/calibration.hpp"
#include "core/io.hpp"
#include "core/metrics.hpp"
#include "core/optimizer.hpp"
#include "core/protocol.hpp"
#include "core/rng.hpp"
#include "core/testkit.hpp"
#include "core/types.hpp"

using namespace fairdecide;

struct fd_instances {
  Instances data;
};
struct fd_calibration {
  CalibrationSet set;
};
struct fd_baselines {
  BaselineSet set;
};
struct fd_bundle {
  DeliverableBundle bundle;
};
struct fd_rule {
  DecisionRule rule;
};
struct fd_result {
  OptimizationResult result;
};

namespace {

thread_local std::string g_last_error;

fd_status status_of(Errc code) {
  switch (code) {
    case Errc::Ok: return FD_OK;
    case Errc::MissingDecision: return FD_E_MISSING_DECISION;
    case Errc::MissingOutcome: return FD_E_MISSING_OUTCOME;
    case Errc::MissingStratum: return FD_E_MISSING_STRATUM;
    case Errc::EmptyGroup: return FD_E_EMPTY_GROUP;
    case Errc::EmptyStratumGroup: return FD_E_EMPTY_GROUP;
    case Errc::NoLabeledData: return FD_E_NO_LABELED_DATA;
    case Errc::InsufficientData: return FD_E_INSUFFICIENT_DATA;
    case Errc::UncalibratedInstance: return FD_E_UNCALIBRATED;
    case Errc::UnknownGroup: return FD_E_UNKNOWN_GROUP;
    case Errc::GroupMismatch: return FD_E_GROUP_MISMATCH;
    case Errc::DegenerateUtility: return FD_E_DEGENERATE_UTILITY;
    case Errc::NegativeRegime: return FD_E_NEGATIVE_REGIME;
    case Errc::Infeasible: return FD_E_INFEASIBLE;
    case Errc::MissingDeliverable: return FD_E_MISSING_DELIVERABLE;
    case Errc::MissingSensitiveAttribute: return FD_E_MISSING_SENSITIVE_ATTRIBUTE;
    case Errc::GroupCoverageError: return FD_E_GROUP_COVERAGE;
    case Errc::SchemaError: return FD_E_SCHEMA;
    case Errc::MissingArtifact: return FD_E_MISSING_ARTIFACT;
    case Errc::InvalidArgument: return FD_E_INVALID_ARGUMENT;
    case Errc::IoError: return FD_E_IO;
  }
  return FD_E_INTERNAL;
}

template <typename Fn>
fd_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return FD_OK;
  } catch (const FdError& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FD_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return FD_E_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool cond, const char* what) {
  if (!cond) fail(Errc::InvalidArgument, what);
}

std::optional<FairnessConstraint> parse_constraint(const char* criterion, double epsilon,
                                                   const char* const* strata, size_t n_strata) {
  if (!criterion) return std::nullopt;
  auto c = criterion_from_name(criterion);
  if (!c) fail(Errc::InvalidArgument, "unknown criterion '" + std::string(criterion) + "'");
  FairnessConstraint fc;
  fc.criterion = *c;
  fc.epsilon = epsilon;
  for (size_t i = 0; i < n_strata; ++i) fc.strata.emplace_back(strata[i]);
  fc.check();
  return fc;
}

}  // namespace

extern "C" {

const char* fd_version(void) { return "1.0.0"; }

const char* fd_generator_id(void) { return rng::kGeneratorId; }

const char* fd_status_name(fd_status status) {
  switch (status) {
    case FD_OK: return "ok";
    case FD_E_INVALID_ARGUMENT: return "invalid argument";
    case FD_E_MISSING_DECISION: return "missing decision";
    case FD_E_MISSING_OUTCOME: return "missing outcome";
    case FD_E_MISSING_STRATUM: return "missing stratum";
    case FD_E_EMPTY_GROUP: return "empty group";
    case FD_E_NO_LABELED_DATA: return "no labeled data";
    case FD_E_INSUFFICIENT_DATA: return "insufficient data";
    case FD_E_UNCALIBRATED: return "uncalibrated instance";
    case FD_E_UNKNOWN_GROUP: return "unknown group";
    case FD_E_GROUP_MISMATCH: return "group mismatch";
    case FD_E_DEGENERATE_UTILITY: return "degenerate utility";
    case FD_E_NEGATIVE_REGIME: return "negative utility regime";
    case FD_E_INFEASIBLE: return "infeasible";
    case FD_E_MISSING_DELIVERABLE: return "missing deliverable";
    case FD_E_MISSING_SENSITIVE_ATTRIBUTE: return "missing sensitive attribute";
    case FD_E_GROUP_COVERAGE: return "group coverage error";
    case FD_E_SCHEMA: return "schema error";
    case FD_E_MISSING_ARTIFACT: return "missing artifact";
    case FD_E_IO: return "io error";
    default: return "internal error";
  }
}

const char* fd_last_error(void) { return g_last_error.c_str(); }

void fd_string_free(char* s) { delete[] s; }

/* -- instances -------------------------------------------------------------- */

fd_status fd_instances_read_csv(const char* path, fd_instances** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-null");
    *out = new fd_instances{io::read_instances_csv(path)};
  });
}

fd_status fd_instances_write_csv(const fd_instances* data, const char* path) {
  return guarded([&] {
    require(data && path, "data and path must be non-null");
    io::write_instances_csv(data->data, path);
  });
}

fd_status fd_instances_to_csv(const fd_instances* data, char** out_csv) {
  return guarded([&] {
    require(data && out_csv, "data and out_csv must be non-null");
    *out_csv = dup_string(io::instances_to_csv(data->data));
  });
}

size_t fd_instances_count(const fd_instances* data) { return data ? data->data.size() : 0; }

fd_status fd_instances_groups(const fd_instances* data, char** out_json) {
  return guarded([&] {
    require(data && out_json, "data and out_json must be non-null");
    std::set<std::string> groups;
    for (const auto& x : data->data) groups.insert(x.group);
    *out_json = dup_string(io::json(groups).dump());
  });
}

void fd_instances_free(fd_instances* data) { delete data; }

fd_status fd_population_generate(const char* spec_json, fd_instances** out) {
  return guarded([&] {
    require(spec_json && out, "spec_json and out must be non-null");
    io::json j;
    try {
      j = io::json::parse(spec_json);
    } catch (const io::json::parse_error& e) {
      fail(Errc::SchemaError, e.what());
    }
    *out = new fd_instances{testkit::generate_population(io::synthetic_spec_from_json(j))};
  });
}

/* -- calibration ------------------------------------------------------------- */

fd_status fd_calibration_fit(const fd_instances* data, int per_group, int bin_count,
                             fd_calibration** out) {
  return guarded([&] {
    require(data && out, "data and out must be non-null");
    CalibrationSet set;
    if (per_group) {
      std::set<std::string> groups;
      for (const auto& x : data->data) groups.insert(x.group);
      for (const auto& g : groups)
        set.per_group[g] = calibration::fit(data->data, g, bin_count);
    } else {
      set.global = calibration::fit(data->data, "", bin_count);
    }
    *out = new fd_calibration{std::move(set)};
  });
}

fd_status fd_calibration_apply(const fd_calibration* cal, fd_instances* data) {
  return guarded([&] {
    require(cal && data, "cal and data must be non-null");
    calibration::calibrate_instances(data->data, cal->set);
  });
}

fd_status fd_calibration_save(const fd_calibration* cal, const char* path) {
  return guarded([&] {
    require(cal && path, "cal and path must be non-null");
    io::write_json_file(io::calibration_set_to_json(cal->set), path);
  });
}

fd_status fd_calibration_load(const char* path, fd_calibration** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-null");
    *out = new fd_calibration{io::calibration_set_from_json(io::read_json_file(path))};
  });
}

fd_status fd_calibration_report(const fd_calibration* cal, const fd_instances* data,
                                char** out_json) {
  return guarded([&] {
    require(cal && data && out_json, "cal, data and out_json must be non-null");
    io::json reports = io::json::array();
    if (cal->set.global)
      reports.push_back(
          io::calibration_report_to_json(calibration::error_report(*cal->set.global, data->data)));
    for (const auto& [g, fn] : cal->set.per_group)
      reports.push_back(io::calibration_report_to_json(calibration::error_report(fn, data->data)));
    *out_json = dup_string(reports.dump(2));
  });
}

void fd_calibration_free(fd_calibration* cal) { delete cal; }

/* -- baselines ---------------------------------------------------------------- */

fd_status fd_baselines_estimate(const fd_instances* data, int bin_count, int with_strata,
                                fd_baselines** out) {
  return guarded([&] {
    require(data && out, "data and out must be non-null");
    *out = new fd_baselines{baseline::estimate_set(data->data, bin_count, {}, with_strata != 0)};
  });
}

fd_status fd_baselines_groups(const fd_baselines* baselines, char** out_json) {
  return guarded([&] {
    require(baselines && out_json, "baselines and out_json must be non-null");
    *out_json = dup_string(io::json(baselines->set.groups()).dump());
  });
}

void fd_baselines_free(fd_baselines* baselines) { delete baselines; }

fd_status fd_rate_curve(const fd_baselines* baselines, const char* group, const char* direction,
                        double resolution, char** out_json) {
  return guarded([&] {
    require(baselines && group && direction && out_json, "all arguments must be non-null");
    auto dir = direction_from_name(direction);
    if (!dir) fail(Errc::InvalidArgument, "direction must be accept-above or accept-below");
    auto it = baselines->set.per_group.find(group);
    if (it == baselines->set.per_group.end())
      fail(Errc::UnknownGroup, "no baseline for group '" + std::string(group) + "'");
    if (!(resolution > 0.0 && resolution <= 0.1))
      fail(Errc::InvalidArgument, "resolution must lie in (0, 0.1]");
    const int n = static_cast<int>(std::llround(1.0 / resolution));
    io::json rows = io::json::array();
    for (int k = 0; k <= n; ++k) {
      const double tau = static_cast<double>(k) / n;
      const auto pt = baseline::expected_rate_curves(it->second, tau, *dir);
      io::json row{{"tau", tau}, {"acceptance", pt.acceptance}};
      row["tpr"] = pt.tpr ? io::json(*pt.tpr) : io::json();
      row["fpr"] = pt.fpr ? io::json(*pt.fpr) : io::json();
      row["ppv"] = pt.ppv ? io::json(*pt.ppv) : io::json();
      row["for"] = pt.for_rate ? io::json(*pt.for_rate) : io::json();
      rows.push_back(std::move(row));
    }
    *out_json = dup_string(rows.dump(2));
  });
}

/* -- protocol ------------------------------------------------------------------ */

fd_status fd_task_spec_build(const char* mode, const char* target_definition,
                             const char* const* groups, size_t n_groups, const char* const* strata,
                             size_t n_strata, const char* population_note, char** out_json) {
  return guarded([&] {
    require(mode && target_definition && out_json, "mode, target_definition, out_json required");
    auto m = bundle_mode_from_name(mode);
    if (!m) fail(Errc::InvalidArgument, "mode must be unconstrained or fairness");
    std::vector<std::string> gs, ss;
    for (size_t i = 0; i < n_groups; ++i) gs.emplace_back(groups[i]);
    for (size_t i = 0; i < n_strata; ++i) ss.emplace_back(strata[i]);
    const TaskSpec t = protocol::build_task_spec(*m, target_definition, gs, ss,
                                                 population_note ? population_note : "");
    *out_json = dup_string(io::task_spec_to_json(t).dump(2));
  });
}

fd_status fd_bundle_assemble(const char* task_spec_json, const char* scored_data_ref,
                             const fd_instances* scored, const fd_calibration* cal,
                             const fd_baselines* baselines, const char* estimation_set,
                             const char* generator, const char* timestamp, fd_bundle** out) {
  return guarded([&] {
    require(task_spec_json && scored_data_ref && scored && cal && out,
            "task spec, scored data, calibration and out are required");
    io::json tj;
    try {
      tj = io::json::parse(task_spec_json);
    } catch (const io::json::parse_error& e) {
      fail(Errc::SchemaError, e.what());
    }
    const TaskSpec task = io::task_spec_from_json(tj);
    Instances calibrated = scored->data;
    calibration::calibrate_instances(calibrated, cal->set);
    const PerformanceReport perf = protocol::compute_performance(calibrated, cal->set);
    Provenance prov;
    prov.estimation_set = estimation_set ? estimation_set : "";
    prov.generator = generator ? generator : "";
    prov.timestamp = timestamp ? timestamp : "";
    std::map<std::string, BaselineDistribution> base;
    if (baselines) base = baselines->set.per_group;
    *out = new fd_bundle{
        protocol::assemble_bundle(task, scored_data_ref, cal->set, base, perf, prov)};
  });
}

fd_status fd_bundle_save(const fd_bundle* bundle, const char* path) {
  return guarded([&] {
    require(bundle && path, "bundle and path must be non-null");
    io::write_json_file(io::bundle_to_json(bundle->bundle), path);
  });
}

fd_status fd_bundle_load(const char* path, fd_bundle** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-null");
    *out = new fd_bundle{io::bundle_from_json(io::read_json_file(path))};
  });
}

fd_status fd_bundle_validate(const fd_bundle* bundle, const char* criterion, char** out_json) {
  return guarded([&] {
    require(bundle && out_json, "bundle and out_json must be non-null");
    // validation cares only about the intended mode, so the constraint is not
    // fully formed here (no epsilon or strata)
    std::optional<FairnessConstraint> constraint;
    if (criterion) {
      auto c = criterion_from_name(criterion);
      if (!c) fail(Errc::InvalidArgument, "unknown criterion '" + std::string(criterion) + "'");
      constraint = FairnessConstraint{*c, 0.0, {}};
    }
    *out_json =
        dup_string(io::validation_to_json(protocol::validate_bundle(bundle->bundle, constraint))
                       .dump(2));
  });
}

fd_status fd_bundle_baselines(const fd_bundle* bundle, fd_baselines** out) {
  return guarded([&] {
    require(bundle && out, "bundle and out must be non-null");
    *out = new fd_baselines{protocol::baseline_set_from_bundle(bundle->bundle)};
  });
}

fd_status fd_bundle_to_json(const fd_bundle* bundle, char** out_json) {
  return guarded([&] {
    require(bundle && out_json, "bundle and out_json must be non-null");
    *out_json = dup_string(io::bundle_to_json(bundle->bundle).dump(2));
  });
}

void fd_bundle_free(fd_bundle* bundle) { delete bundle; }

/* -- optimization ---------------------------------------------------------------- */

fd_status fd_optimal_threshold(double alpha, double beta, double gamma, double* out) {
  return guarded([&] {
    require(out != nullptr, "out must be non-null");
    *out = optimizer::optimal_unconstrained_threshold(UtilityParams{alpha, beta, gamma});
  });
}

fd_status fd_optimize(const fd_bundle* bundle, const fd_instances* scored, double alpha,
                      double beta, double gamma, const char* criterion, double epsilon,
                      const char* const* strata, size_t n_strata, double resolution,
                      int baseline_bins, fd_result** out) {
  return guarded([&] {
    require(bundle && out, "bundle and out must be non-null");
    const auto constraint = parse_constraint(criterion, epsilon, strata, n_strata);
    const UtilityParams u{alpha, beta, gamma};
    *out = new fd_result{protocol::optimize_with_bundle(
        bundle->bundle, u, constraint, resolution, baseline_bins,
        scored ? &scored->data : nullptr)};
  });
}

fd_status fd_result_to_json(const fd_result* result, char** out_json) {
  return guarded([&] {
    require(result && out_json, "result and out_json must be non-null");
    *out_json = dup_string(io::result_to_json(result->result).dump(2));
  });
}

fd_status fd_result_utility(const fd_result* result, double* out) {
  return guarded([&] {
    require(result && out, "result and out must be non-null");
    *out = result->result.expected_utility_per_capita;
  });
}

fd_status fd_result_rule(const fd_result* result, fd_rule** out) {
  return guarded([&] {
    require(result && out, "result and out must be non-null");
    *out = new fd_rule{result->result.rule};
  });
}

void fd_result_free(fd_result* result) { delete result; }

/* -- rules -------------------------------------------------------------------------- */

fd_status fd_rule_save(const fd_rule* rule, const char* path) {
  return guarded([&] {
    require(rule && path, "rule and path must be non-null");
    io::write_json_file(io::rule_to_json(rule->rule), path);
  });
}

fd_status fd_rule_load(const char* path, fd_rule** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-null");
    *out = new fd_rule{io::rule_from_json(io::read_json_file(path))};
  });
}

fd_status fd_rule_to_json(const fd_rule* rule, char** out_json) {
  return guarded([&] {
    require(rule && out_json, "rule and out_json must be non-null");
    *out_json = dup_string(io::rule_to_json(rule->rule).dump(2));
  });
}

fd_status fd_rule_apply(const fd_rule* rule, fd_instances* data, uint64_t seed) {
  return guarded([&] {
    require(rule && data, "rule and data must be non-null");
    data->data = optimizer::apply_rule(rule->rule, data->data, seed);
  });
}

void fd_rule_free(fd_rule* rule) { delete rule; }

/* -- audit ----------------------------------------------------------------------------- */

fd_status fd_audit(const fd_instances* data, const char* criterion, double epsilon,
                   const char* const* strata, size_t n_strata, char** out_json, int* out_pass) {
  return guarded([&] {
    require(data && criterion && out_json, "data, criterion and out_json must be non-null");
    const auto constraint = parse_constraint(criterion, epsilon, strata, n_strata);
    const GapReport report = metrics::audit(data->data, *constraint);
    *out_json = dup_string(io::gap_report_to_json(report).dump(2));
    if (out_pass) *out_pass = report.pass.value_or(false) ? 1 : 0;
  });
}

}  // extern "C"
