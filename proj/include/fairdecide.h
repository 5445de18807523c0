/* fairdecide — post-processing fairness optimization for calibrated scores.
 *
 * C interface to the fairdecide core. All objects are opaque handles created
 * and destroyed by the library; every function returns FD_OK or an error code,
 * with a human-readable detail available from fd_last_error() until the next
 * call on the same thread. Strings returned through char** out-parameters are
 * heap-allocated and must be released with fd_string_free().
 */

#ifndef FAIRDECIDE_H
#define FAIRDECIDE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FD_API __declspec(dllexport)
#else
#define FD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef int fd_status;

enum {
  FD_OK = 0,
  FD_E_INVALID_ARGUMENT = 1,
  FD_E_MISSING_DECISION = 2,
  FD_E_MISSING_OUTCOME = 3,
  FD_E_MISSING_STRATUM = 4,
  FD_E_EMPTY_GROUP = 5,
  FD_E_NO_LABELED_DATA = 6,
  FD_E_INSUFFICIENT_DATA = 7,
  FD_E_UNCALIBRATED = 8,
  FD_E_UNKNOWN_GROUP = 9,
  FD_E_GROUP_MISMATCH = 10,
  FD_E_DEGENERATE_UTILITY = 11,
  FD_E_NEGATIVE_REGIME = 12,
  FD_E_INFEASIBLE = 13,
  FD_E_MISSING_DELIVERABLE = 14,
  FD_E_MISSING_SENSITIVE_ATTRIBUTE = 15,
  FD_E_GROUP_COVERAGE = 16,
  FD_E_SCHEMA = 17,
  FD_E_MISSING_ARTIFACT = 18,
  FD_E_IO = 19,
  FD_E_INTERNAL = 20
};

typedef struct fd_instances fd_instances;     /* scored individuals            */
typedef struct fd_calibration fd_calibration; /* global or per-group functions */
typedef struct fd_baselines fd_baselines;     /* per-group p-hat distributions */
typedef struct fd_bundle fd_bundle;           /* deliverable bundle            */
typedef struct fd_rule fd_rule;               /* decision rule                 */
typedef struct fd_result fd_result;           /* optimization result           */

FD_API const char* fd_version(void);
/* Identity of the pseudo-random generator behind synthetic data and
 * randomized decisions, recorded in provenance fields. */
FD_API const char* fd_generator_id(void);
FD_API const char* fd_status_name(fd_status status);
FD_API const char* fd_last_error(void);
FD_API void fd_string_free(char* s);

/* -- instance tables (CSV: id,score,group[,y][,stratum][,decision][,p]) ----- */

FD_API fd_status fd_instances_read_csv(const char* path, fd_instances** out);
FD_API fd_status fd_instances_write_csv(const fd_instances* data, const char* path);
FD_API fd_status fd_instances_to_csv(const fd_instances* data, char** out_csv);
FD_API size_t fd_instances_count(const fd_instances* data);
/* JSON array of the distinct group ids, sorted */
FD_API fd_status fd_instances_groups(const fd_instances* data, char** out_json);
FD_API void fd_instances_free(fd_instances* data);

/* Seeded synthetic population. spec_json:
 * {"seed": 7, "groups": [{"name":"a","size":1000,"beta":[2,5],
 *                         "distortion_power":1.0}, ...]} */
FD_API fd_status fd_population_generate(const char* spec_json, fd_instances** out);

/* -- calibration ------------------------------------------------------------ */

/* Equal-frequency binning with pooled-adjacent-violators monotonization.
 * per_group != 0 fits one function per observed group (fairness mode). */
FD_API fd_status fd_calibration_fit(const fd_instances* data, int per_group, int bin_count,
                                    fd_calibration** out);
/* Sets the calibrated probability column on every instance. */
FD_API fd_status fd_calibration_apply(const fd_calibration* cal, fd_instances* data);
FD_API fd_status fd_calibration_save(const fd_calibration* cal, const char* path);
FD_API fd_status fd_calibration_load(const char* path, fd_calibration** out);
/* Expected-calibration-error report(s) on the given instances, as JSON. */
FD_API fd_status fd_calibration_report(const fd_calibration* cal, const fd_instances* data,
                                       char** out_json);
FD_API void fd_calibration_free(fd_calibration* cal);

/* -- baselines --------------------------------------------------------------- */

FD_API fd_status fd_baselines_estimate(const fd_instances* data, int bin_count, int with_strata,
                                       fd_baselines** out);
/* JSON array of the covered group ids, sorted */
FD_API fd_status fd_baselines_groups(const fd_baselines* baselines, char** out_json);
FD_API void fd_baselines_free(fd_baselines* baselines);

/* Expected rates of a single-threshold rule swept over the grid, as a JSON
 * array of {tau, acceptance, tpr, fpr, ppv, for} (nulls where undefined).
 * direction is "accept-above" or "accept-below". */
FD_API fd_status fd_rate_curve(const fd_baselines* baselines, const char* group,
                               const char* direction, double resolution, char** out_json);

/* -- deliverables protocol ---------------------------------------------------- */

/* mode is "unconstrained" or "fairness"; fairness requires >= 2 groups. */
FD_API fd_status fd_task_spec_build(const char* mode, const char* target_definition,
                                    const char* const* groups, size_t n_groups,
                                    const char* const* strata, size_t n_strata,
                                    const char* population_note, char** out_json);

FD_API fd_status fd_bundle_assemble(const char* task_spec_json, const char* scored_data_ref,
                                    const fd_instances* scored, const fd_calibration* cal,
                                    const fd_baselines* baselines, const char* estimation_set,
                                    const char* generator, const char* timestamp, fd_bundle** out);
FD_API fd_status fd_bundle_save(const fd_bundle* bundle, const char* path);
FD_API fd_status fd_bundle_load(const char* path, fd_bundle** out);
/* Validation report (JSON {valid, missing, warnings}); criterion may be NULL
 * for an unconstrained intent. Never fails on an invalid bundle. */
FD_API fd_status fd_bundle_validate(const fd_bundle* bundle, const char* criterion,
                                    char** out_json);
FD_API fd_status fd_bundle_baselines(const fd_bundle* bundle, fd_baselines** out);
FD_API fd_status fd_bundle_to_json(const fd_bundle* bundle, char** out_json);
FD_API void fd_bundle_free(fd_bundle* bundle);

/* -- optimization ------------------------------------------------------------- */

FD_API fd_status fd_optimal_threshold(double alpha, double beta, double gamma, double* out);

/* Validates the bundle for the intended mode first and fails with
 * FD_E_MISSING_DELIVERABLE naming the gaps. criterion NULL runs the
 * unconstrained closed form. scored may be NULL unless the criterion needs
 * stratum-refined baselines (conditional_statistical_parity). */
FD_API fd_status fd_optimize(const fd_bundle* bundle, const fd_instances* scored, double alpha,
                             double beta, double gamma, const char* criterion, double epsilon,
                             const char* const* strata, size_t n_strata, double resolution,
                             int baseline_bins, fd_result** out);

FD_API fd_status fd_result_to_json(const fd_result* result, char** out_json);
FD_API fd_status fd_result_utility(const fd_result* result, double* out);
FD_API fd_status fd_result_rule(const fd_result* result, fd_rule** out);
FD_API void fd_result_free(fd_result* result);

/* -- decision rules ------------------------------------------------------------ */

FD_API fd_status fd_rule_save(const fd_rule* rule, const char* path);
FD_API fd_status fd_rule_load(const char* path, fd_rule** out);
FD_API fd_status fd_rule_to_json(const fd_rule* rule, char** out_json);
/* Writes the decision column. Randomized bands draw deterministically from
 * (seed, instance id). */
FD_API fd_status fd_rule_apply(const fd_rule* rule, fd_instances* data, uint64_t seed);
FD_API void fd_rule_free(fd_rule* rule);

/* -- audit ---------------------------------------------------------------------- */

/* Gap report as JSON; out_pass is 1 when every defined constrained gap is
 * within epsilon. strata are required for conditional_statistical_parity. */
FD_API fd_status fd_audit(const fd_instances* data, const char* criterion, double epsilon,
                          const char* const* strata, size_t n_strata, char** out_json,
                          int* out_pass);

#ifdef __cplusplus
}
#endif

#endif /* FAIRDECIDE_H */
