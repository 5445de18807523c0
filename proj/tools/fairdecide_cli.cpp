// fairdecide command line: one-shot batch pipeline over the C API.
//
// Exit codes: 0 success / audit pass, 1 audit fail, 2 schema or argument
// error, 3 insufficient data, 4 missing deliverable, 5 infeasible constraint,
// 6 unknown group, 7 missing prior artifact.

#include <fairdecide.h>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitAuditFail = 1;
constexpr int kExitSchema = 2;
constexpr int kExitInsufficient = 3;
constexpr int kExitMissingDeliverable = 4;
constexpr int kExitInfeasible = 5;
constexpr int kExitUnknownGroup = 6;
constexpr int kExitMissingArtifact = 7;

int exit_code_for(fd_status s) {
  switch (s) {
    case FD_OK: return 0;
    case FD_E_INSUFFICIENT_DATA:
    case FD_E_NO_LABELED_DATA:
      return kExitInsufficient;
    case FD_E_MISSING_DELIVERABLE:
    case FD_E_MISSING_SENSITIVE_ATTRIBUTE:
    case FD_E_GROUP_COVERAGE:
      return kExitMissingDeliverable;
    case FD_E_INFEASIBLE: return kExitInfeasible;
    case FD_E_UNKNOWN_GROUP: return kExitUnknownGroup;
    case FD_E_MISSING_ARTIFACT: return kExitMissingArtifact;
    default: return kExitSchema;
  }
}

struct CliError {
  int code;
  std::string message;
};

void check(fd_status s, const std::string& context) {
  if (s == FD_OK) return;
  throw CliError{exit_code_for(s), context + ": " + fd_status_name(s) + " - " + fd_last_error()};
}

// RAII wrappers over the C handles
template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  explicit Handle(T* p) : ptr(p) {}
  ~Handle() { reset(); }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& other) noexcept : ptr(other.ptr) { other.ptr = nullptr; }
  Handle& operator=(Handle&& other) noexcept {
    if (this != &other) {
      reset();
      ptr = other.ptr;
      other.ptr = nullptr;
    }
    return *this;
  }
  void reset() {
    if (ptr) Free(ptr);
    ptr = nullptr;
  }
  T** out() {
    reset();
    return &ptr;
  }
  operator T*() const { return ptr; }
};

using InstancesH = Handle<fd_instances, fd_instances_free>;
using CalibrationH = Handle<fd_calibration, fd_calibration_free>;
using BaselinesH = Handle<fd_baselines, fd_baselines_free>;
using BundleH = Handle<fd_bundle, fd_bundle_free>;
using RuleH = Handle<fd_rule, fd_rule_free>;
using ResultH = Handle<fd_result, fd_result_free>;

std::string take_string(char* s) {
  std::string out = s ? s : "";
  fd_string_free(s);
  return out;
}

std::string fmt(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

// Run settings: command-line flags override config-file values.
struct Config {
  json file;  // loaded --config document, possibly empty

  template <typename T>
  T get(const CLI::Option* opt, const T& flag_value, const char* key, const T& fallback) const {
    if (opt && opt->count() > 0) return flag_value;
    if (file.contains(key)) return file.at(key).get<T>();
    return fallback;
  }
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw CliError{kExitSchema, "cannot open config '" + path + "'"};
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw CliError{kExitSchema, path + ": " + e.what()};
  }
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{kExitSchema, "cannot write '" + path.string() + "'"};
  out << text;
}

std::string read_file(const fs::path& path, int missing_code = kExitSchema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{missing_code, "cannot open '" + path.string() + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CommonOpts {
  std::string config_path;
  std::string input;
  std::string output_dir = "run";
  std::string mode = "unconstrained";
  std::string criterion;
  double epsilon = 0.0;
  double alpha = 1.0, beta = 1.0, gamma = 0.0;
  int calibration_bins = 10;
  int baseline_bins = 100;
  double resolution = 0.005;
  std::uint64_t seed = 0;
  std::vector<std::string> groups;
  std::vector<std::string> strata;
  std::string target = "binary outcome Y";
};

// Shared flag wiring; each subcommand picks the subset it documents.
void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON config file; flags override its values");
}

void resolve(CLI::App* cmd, CommonOpts& o, Config& cfg) {
  cfg.file = load_config(o.config_path);
  auto opt = [&](const char* name) { return cmd->get_option_no_throw(name); };
  if (auto* p = opt("--input")) o.input = cfg.get(p, o.input, "input", o.input);
  if (auto* p = opt("--output-dir")) o.output_dir = cfg.get(p, o.output_dir, "output_dir", o.output_dir);
  if (auto* p = opt("--mode")) o.mode = cfg.get(p, o.mode, "mode", o.mode);
  if (auto* p = opt("--criterion")) o.criterion = cfg.get(p, o.criterion, "criterion", o.criterion);
  if (auto* p = opt("--epsilon")) o.epsilon = cfg.get(p, o.epsilon, "epsilon", o.epsilon);
  if (auto* p = opt("--alpha")) o.alpha = cfg.get(p, o.alpha, "alpha", o.alpha);
  if (auto* p = opt("--beta")) o.beta = cfg.get(p, o.beta, "beta", o.beta);
  if (auto* p = opt("--gamma")) o.gamma = cfg.get(p, o.gamma, "gamma", o.gamma);
  if (auto* p = opt("--calibration-bins"))
    o.calibration_bins = cfg.get(p, o.calibration_bins, "calibration_bins", o.calibration_bins);
  if (auto* p = opt("--baseline-bins"))
    o.baseline_bins = cfg.get(p, o.baseline_bins, "baseline_bins", o.baseline_bins);
  if (auto* p = opt("--resolution")) o.resolution = cfg.get(p, o.resolution, "resolution", o.resolution);
  if (auto* p = opt("--seed")) o.seed = cfg.get(p, o.seed, "seed", o.seed);
  if (auto* p = opt("--groups")) o.groups = cfg.get(p, o.groups, "groups", o.groups);
  if (auto* p = opt("--strata")) o.strata = cfg.get(p, o.strata, "strata", o.strata);
  if (auto* p = opt("--target")) o.target = cfg.get(p, o.target, "target_definition", o.target);
}

std::vector<std::string> groups_of(const fd_instances* data) {
  char* s = nullptr;
  check(fd_instances_groups(data, &s), "listing groups");
  return json::parse(take_string(s)).get<std::vector<std::string>>();
}

// PM-side pipeline shared by `calibrate` and `simulate`: fit calibration,
// calibrate the table, estimate baselines (fairness mode), assemble and save
// the deliverable bundle. Returns the calibrated table.
struct PmArtifacts {
  CalibrationH calibration;
  BundleH bundle;
};

PmArtifacts run_pm_side(InstancesH& data, const CommonOpts& o, const fs::path& out_dir,
                        const std::string& scored_ref, const std::string& estimation_note) {
  const bool fairness = o.mode == "fairness";
  PmArtifacts pm;

  check(fd_calibration_fit(data, fairness ? 1 : 0, o.calibration_bins, pm.calibration.out()),
        "fitting calibration");
  check(fd_calibration_apply(pm.calibration, data), "applying calibration");

  // one function file per scope, plus the combined set
  {
    char* js = nullptr;
    check(fd_calibration_report(pm.calibration, data, &js), "calibration report");
    write_file(out_dir / "calibration_report.json", take_string(js) + "\n");
    check(fd_calibration_save(pm.calibration, (out_dir / "calibration_set.json").string().c_str()),
          "saving calibration set");
  }
  if (fairness) {
    const json set = json::parse(read_file(out_dir / "calibration_set.json"));
    for (const auto& [g, fn] : set.at("per_group").items())
      write_file(out_dir / ("calibration_" + g + ".json"), fn.dump(2) + "\n");
  } else {
    const json set = json::parse(read_file(out_dir / "calibration_set.json"));
    write_file(out_dir / "calibration_global.json", set.at("global").dump(2) + "\n");
  }

  BaselinesH baselines;
  if (fairness)
    check(fd_baselines_estimate(data, o.baseline_bins, 0, baselines.out()), "estimating baselines");

  std::vector<std::string> groups = o.groups;
  if (fairness && groups.empty()) groups = groups_of(data);
  auto group_ptrs = c_strings(groups);
  auto strata_ptrs = c_strings(o.strata);

  char* task_json = nullptr;
  check(fd_task_spec_build(o.mode.c_str(), o.target.c_str(),
                           group_ptrs.empty() ? nullptr : group_ptrs.data(), group_ptrs.size(),
                           strata_ptrs.empty() ? nullptr : strata_ptrs.data(), strata_ptrs.size(),
                           "", &task_json),
        "building task spec");
  const std::string task = take_string(task_json);
  write_file(out_dir / "task_spec.json", task + "\n");

  check(fd_bundle_assemble(task.c_str(), scored_ref.c_str(), data, pm.calibration,
                           fairness ? baselines.ptr : nullptr, estimation_note.c_str(),
                           fd_generator_id(), "", pm.bundle.out()),
        "assembling bundle");
  check(fd_bundle_save(pm.bundle, (out_dir / "bundle.json").string().c_str()), "saving bundle");
  return pm;
}

int run_calibrate(CLI::App* cmd, CommonOpts& o, Config& cfg) {
  resolve(cmd, o, cfg);
  if (o.input.empty()) throw CliError{kExitSchema, "calibrate needs --input"};
  {
    // calibration fits against outcomes, so the column must exist up front
    std::ifstream in(o.input);
    if (!in) throw CliError{kExitSchema, "cannot open '" + o.input + "'"};
    std::string header;
    std::getline(in, header);
    while (!header.empty() && (header.back() == '\r' || header.back() == '\n')) header.pop_back();
    if ((',' + header + ',').find(",y,") == std::string::npos)
      throw CliError{kExitSchema, o.input + ": calibration needs the outcome column 'y'"};
  }
  const fs::path out_dir = o.output_dir;
  fs::create_directories(out_dir);

  InstancesH data;
  check(fd_instances_read_csv(o.input.c_str(), data.out()), "reading " + o.input);
  run_pm_side(data, o, out_dir, "scored_calibrated.csv", o.input);
  check(fd_instances_write_csv(data, (out_dir / "scored_calibrated.csv").string().c_str()),
        "writing calibrated table");

  std::cout << "calibration written to " << out_dir.string() << " (mode " << o.mode << ", "
            << o.calibration_bins << " bins)\n"
            << read_file(out_dir / "calibration_report.json");
  return 0;
}

struct OptimizeOutput {
  ResultH result;
  json result_json;
};

OptimizeOutput do_optimize(const fd_bundle* bundle, const fd_instances* scored,
                           const CommonOpts& o, bool constrained) {
  OptimizeOutput out;
  auto strata_ptrs = c_strings(o.strata);
  check(fd_optimize(bundle, scored, o.alpha, o.beta, o.gamma,
                    constrained ? o.criterion.c_str() : nullptr, o.epsilon,
                    strata_ptrs.empty() ? nullptr : strata_ptrs.data(), strata_ptrs.size(),
                    o.resolution, o.baseline_bins, out.result.out()),
        "optimizing");
  char* js = nullptr;
  check(fd_result_to_json(out.result, &js), "serializing result");
  out.result_json = json::parse(take_string(js));
  return out;
}

InstancesH load_scored_for(const fd_bundle* bundle, const fs::path& bundle_path) {
  char* bj = nullptr;
  check(fd_bundle_to_json(bundle, &bj), "reading bundle");
  const json j = json::parse(take_string(bj));
  const std::string ref = j.at("scored_data_ref").get<std::string>();
  const fs::path data_path = bundle_path.parent_path() / ref;
  InstancesH scored;
  if (fs::exists(data_path))
    check(fd_instances_read_csv(data_path.string().c_str(), scored.out()), "reading scored data");
  return scored;
}

int run_optimize(CLI::App* cmd, CommonOpts& o, Config& cfg, const std::string& bundle_path) {
  resolve(cmd, o, cfg);
  std::string bp = bundle_path;
  if (bp.empty() && cfg.file.contains("bundle")) bp = cfg.file.at("bundle").get<std::string>();
  if (bp.empty()) throw CliError{kExitSchema, "optimize needs --bundle"};
  const bool constrained = !o.criterion.empty();
  const fs::path out_dir = o.output_dir;
  fs::create_directories(out_dir);

  BundleH bundle;
  check(fd_bundle_load(bp.c_str(), bundle.out()), "loading bundle");

  // gate first so a missing deliverable reports exactly the validation gaps
  {
    char* vj = nullptr;
    check(fd_bundle_validate(bundle, constrained ? o.criterion.c_str() : nullptr, &vj),
          "validating bundle");
    const json v = json::parse(take_string(vj));
    if (!v.at("valid").get<bool>()) {
      std::string names;
      for (const auto& m : v.at("missing")) {
        if (!names.empty()) names += ", ";
        names += m.get<std::string>();
      }
      throw CliError{kExitMissingDeliverable, "bundle is missing deliverables: " + names};
    }
  }

  InstancesH scored = load_scored_for(bundle, bp);
  OptimizeOutput main_run = do_optimize(bundle, scored, o, constrained);

  json report;
  report["result"] = main_run.result_json;
  if (constrained) {
    OptimizeOutput unc = do_optimize(bundle, scored, o, false);
    const double cu = main_run.result_json.at("expected_utility_per_capita").get<double>();
    const double uu = unc.result_json.at("expected_utility_per_capita").get<double>();
    report["unconstrained"] = unc.result_json;
    report["cost_of_fairness"] = uu - cu;
  }
  write_file(out_dir / "result.json", main_run.result_json.dump(2) + "\n");
  write_file(out_dir / "optimize_report.json", report.dump(2) + "\n");
  {
    RuleH rule;
    check(fd_result_rule(main_run.result, rule.out()), "extracting rule");
    check(fd_rule_save(rule, (out_dir / "rule.json").string().c_str()), "saving rule");
  }

  std::cout << "expected utility per capita: "
            << fmt(main_run.result_json.at("expected_utility_per_capita").get<double>()) << "\n";
  if (constrained) {
    std::cout << "criterion " << o.criterion << " (epsilon " << fmt(o.epsilon) << "), achieved gaps:";
    for (const auto& [k, v] : main_run.result_json.at("achieved_gaps").items())
      std::cout << ' ' << k << '=' << fmt(v.get<double>());
    std::cout << "\ncost of fairness: " << fmt(report.at("cost_of_fairness").get<double>()) << "\n";
  }
  std::cout << "rule written to " << (out_dir / "rule.json").string() << "\n";
  return 0;
}

int run_apply(CLI::App* cmd, CommonOpts& o, Config& cfg, const std::string& rule_path,
              const std::string& calibration_path, const std::string& output_csv) {
  resolve(cmd, o, cfg);
  std::string rp = rule_path;
  if (rp.empty() && cfg.file.contains("rule")) rp = cfg.file.at("rule").get<std::string>();
  if (rp.empty() || o.input.empty()) throw CliError{kExitSchema, "apply needs --rule and --input"};
  std::string out_csv = output_csv.empty() ? "decisions.csv" : output_csv;

  InstancesH data;
  check(fd_instances_read_csv(o.input.c_str(), data.out()), "reading " + o.input);
  if (!calibration_path.empty()) {
    CalibrationH cal;
    check(fd_calibration_load(calibration_path.c_str(), cal.out()), "loading calibration");
    check(fd_calibration_apply(cal, data), "applying calibration");
  }
  RuleH rule;
  check(fd_rule_load(rp.c_str(), rule.out()), "loading rule");
  check(fd_rule_apply(rule, data, o.seed), "applying rule");
  check(fd_instances_write_csv(data, out_csv.c_str()), "writing " + out_csv);
  std::cout << "decisions for " << fd_instances_count(data) << " instances written to " << out_csv
            << "\n";
  return 0;
}

int run_audit(CLI::App* cmd, CommonOpts& o, Config& cfg, const std::string& report_path) {
  resolve(cmd, o, cfg);
  if (o.input.empty() || o.criterion.empty())
    throw CliError{kExitSchema, "audit needs --input and --criterion"};

  InstancesH data;
  check(fd_instances_read_csv(o.input.c_str(), data.out()), "reading " + o.input);
  auto strata_ptrs = c_strings(o.strata);
  char* js = nullptr;
  int pass = 0;
  check(fd_audit(data, o.criterion.c_str(), o.epsilon,
                 strata_ptrs.empty() ? nullptr : strata_ptrs.data(), strata_ptrs.size(), &js, &pass),
        "auditing");
  const std::string report = take_string(js);
  if (!report_path.empty()) write_file(report_path, report + "\n");
  std::cout << report << "\n"
            << "audit " << (pass ? "PASS" : "FAIL") << " (" << o.criterion << ", epsilon "
            << fmt(o.epsilon) << ")\n";
  return pass ? 0 : kExitAuditFail;
}

int run_generate(CLI::App* cmd, CommonOpts& o, Config& cfg, const std::string& output_csv) {
  resolve(cmd, o, cfg);
  if (!cfg.file.contains("population"))
    throw CliError{kExitSchema, "generate needs a config with a 'population' object"};
  json spec = cfg.file.at("population");
  if (!spec.contains("seed")) spec["seed"] = o.seed;
  InstancesH data;
  check(fd_population_generate(spec.dump().c_str(), data.out()), "generating population");
  const std::string out_csv = output_csv.empty() ? "population.csv" : output_csv;
  check(fd_instances_write_csv(data, out_csv.c_str()), "writing " + out_csv);
  std::cout << fd_instances_count(data) << " instances written to " << out_csv << " (generator "
            << fd_generator_id() << ")\n";
  return 0;
}

int run_simulate(CLI::App* cmd, CommonOpts& o, Config& cfg) {
  resolve(cmd, o, cfg);
  if (!cfg.file.contains("population"))
    throw CliError{kExitSchema, "simulate needs a config with a 'population' object"};
  const bool fairness = o.mode == "fairness";
  if (fairness && o.criterion.empty())
    throw CliError{kExitSchema, "simulate in fairness mode needs a criterion"};
  if (o.criterion == "conditional_statistical_parity")
    throw CliError{kExitSchema, "simulate does not generate strata; "
                                "conditional_statistical_parity is not supported here"};
  const fs::path out_dir = o.output_dir;
  fs::create_directories(out_dir);

  json spec = cfg.file.at("population");
  if (!spec.contains("seed")) spec["seed"] = o.seed;
  InstancesH data;
  check(fd_population_generate(spec.dump().c_str(), data.out()), "generating population");
  check(fd_instances_write_csv(data, (out_dir / "population.csv").string().c_str()),
        "writing population");

  PmArtifacts pm =
      run_pm_side(data, o, out_dir, "scored_calibrated.csv", "synthetic population");
  check(fd_instances_write_csv(data, (out_dir / "scored_calibrated.csv").string().c_str()),
        "writing calibrated table");

  OptimizeOutput main_run = do_optimize(pm.bundle, data, o, fairness);
  write_file(out_dir / "result.json", main_run.result_json.dump(2) + "\n");
  RuleH rule;
  check(fd_result_rule(main_run.result, rule.out()), "extracting rule");
  check(fd_rule_save(rule, (out_dir / "rule.json").string().c_str()), "saving rule");

  json report;
  report["seed"] = o.seed;
  report["generator"] = fd_generator_id();
  report["mode"] = o.mode;
  report["result"] = main_run.result_json;
  if (fairness) {
    OptimizeOutput unc = do_optimize(pm.bundle, data, o, false);
    report["unconstrained"] = unc.result_json;
    report["cost_of_fairness"] =
        unc.result_json.at("expected_utility_per_capita").get<double>() -
        main_run.result_json.at("expected_utility_per_capita").get<double>();
  }

  check(fd_rule_apply(rule, data, o.seed), "applying rule");
  check(fd_instances_write_csv(data, (out_dir / "decisions.csv").string().c_str()),
        "writing decisions");

  const std::string audit_criterion = fairness ? o.criterion : "independence";
  char* js = nullptr;
  int pass = 0;
  check(fd_audit(data, audit_criterion.c_str(), fairness ? o.epsilon : 1.0, nullptr, 0, &js, &pass),
        "auditing decisions");
  const std::string audit = take_string(js);
  write_file(out_dir / "audit.json", audit + "\n");
  report["audit"] = json::parse(audit);
  report["audit_pass"] = pass == 1;
  write_file(out_dir / "simulate_report.json", report.dump(2) + "\n");

  std::cout << "simulation complete in " << out_dir.string() << "\n"
            << "expected utility per capita: "
            << fmt(main_run.result_json.at("expected_utility_per_capita").get<double>()) << "\n";
  if (fairness)
    std::cout << "cost of fairness: " << fmt(report.at("cost_of_fairness").get<double>()) << "\n";
  std::cout << "empirical audit (" << audit_criterion << "): " << (pass ? "PASS" : "FAIL") << "\n";
  return 0;
}

int run_report(CLI::App* cmd, CommonOpts& o, Config& cfg, const std::string& run_dir_in,
               std::vector<double>& epsilons) {
  resolve(cmd, o, cfg);
  const fs::path run_dir = run_dir_in.empty() ? o.output_dir : run_dir_in;
  const fs::path bundle_path = run_dir / "bundle.json";
  if (!fs::exists(bundle_path))
    throw CliError{kExitMissingArtifact, "no bundle.json in " + run_dir.string() +
                                             "; run calibrate/simulate first"};
  if (epsilons.empty() && cfg.file.contains("epsilons"))
    epsilons = cfg.file.at("epsilons").get<std::vector<double>>();
  if (epsilons.empty()) epsilons = {0.0, 0.01, 0.05, 0.1, 1.0};

  BundleH bundle;
  check(fd_bundle_load(bundle_path.string().c_str(), bundle.out()), "loading bundle");
  InstancesH scored = load_scored_for(bundle, bundle_path);

  BaselinesH baselines;
  check(fd_bundle_baselines(bundle, baselines.out()), "reading baselines");

  // per-group rate curves over the threshold grid
  {
    char* gj = nullptr;
    check(fd_baselines_groups(baselines, &gj), "listing groups");
    const auto groups = json::parse(take_string(gj)).get<std::vector<std::string>>();
    for (const auto& g : groups) {
      char* cj = nullptr;
      check(fd_rate_curve(baselines, g.c_str(), "accept-above", o.resolution, &cj), "rate curve");
      const json rows = json::parse(take_string(cj));
      std::ostringstream csv;
      csv << "tau,acceptance,tpr,fpr,ppv,for\n";
      for (const auto& r : rows) {
        auto cell = [&](const char* k) {
          return r.at(k).is_null() ? std::string() : fmt(r.at(k).get<double>());
        };
        csv << fmt(r.at("tau").get<double>()) << ',' << fmt(r.at("acceptance").get<double>()) << ','
            << cell("tpr") << ',' << cell("fpr") << ',' << cell("ppv") << ',' << cell("for")
            << "\n";
      }
      write_file(run_dir / ("rate_curves_" + g + ".csv"), csv.str());
    }
  }

  // utility vs epsilon sweep, nondecreasing in epsilon by nested feasibility
  if (!o.criterion.empty()) {
    std::ostringstream csv;
    csv << "epsilon,expected_utility,feasible\n";
    for (double eps : epsilons) {
      CommonOpts run = o;
      run.epsilon = eps;
      try {
        OptimizeOutput out = do_optimize(bundle, scored, run, true);
        csv << fmt(eps) << ','
            << fmt(out.result_json.at("expected_utility_per_capita").get<double>()) << ",1\n";
      } catch (const CliError& e) {
        if (e.code != kExitInfeasible) throw;
        csv << fmt(eps) << ",,0\n";
      }
    }
    write_file(run_dir / "epsilon_sweep.csv", csv.str());
    std::cout << "epsilon sweep written to " << (run_dir / "epsilon_sweep.csv").string() << "\n";
  }
  std::cout << "rate curves written to " << run_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairness-constrained decision optimization over calibrated scores"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fd_version()));

  CommonOpts o;
  Config cfg;
  std::string bundle_path, rule_path, calibration_path, output_csv, report_path, run_dir;
  std::vector<double> epsilons;

  auto* calibrate = app.add_subcommand("calibrate",
                                       "fit calibration, estimate baselines and assemble the "
                                       "deliverable bundle (prediction-modeler side)");
  add_common(calibrate, o);
  calibrate->add_option("--input", o.input, "scored CSV with outcomes");
  calibrate->add_option("--mode", o.mode, "unconstrained or fairness");
  calibrate->add_option("--calibration-bins", o.calibration_bins, "equal-frequency bin count");
  calibrate->add_option("--baseline-bins", o.baseline_bins, "baseline histogram bins");
  calibrate->add_option("--groups", o.groups, "declared sensitive groups")->delimiter(',');
  calibrate->add_option("--strata", o.strata, "declared legitimate strata")->delimiter(',');
  calibrate->add_option("--target", o.target, "target variable definition");
  calibrate->add_option("--output-dir", o.output_dir, "artifact directory");

  auto* optimize = app.add_subcommand("optimize", "solve the decision-maker problem from a bundle");
  add_common(optimize, o);
  optimize->add_option("--bundle", bundle_path, "deliverable bundle file");
  optimize->add_option("--criterion", o.criterion, "fairness criterion (omit for unconstrained)");
  optimize->add_option("--epsilon", o.epsilon, "gap tolerance");
  optimize->add_option("--strata", o.strata, "strata for conditional parity")->delimiter(',');
  optimize->add_option("--alpha", o.alpha, "utility of a correct acceptance");
  optimize->add_option("--beta", o.beta, "loss of a wrong acceptance");
  optimize->add_option("--gamma", o.gamma, "utility of a rejection");
  optimize->add_option("--resolution", o.resolution, "threshold grid resolution");
  optimize->add_option("--baseline-bins", o.baseline_bins, "baseline histogram bins");
  optimize->add_option("--output-dir", o.output_dir, "artifact directory");

  auto* apply = app.add_subcommand("apply", "apply a decision rule to a calibrated table");
  add_common(apply, o);
  apply->add_option("--rule", rule_path, "decision rule file");
  apply->add_option("--input", o.input, "instance CSV (calibrated, or pass --calibration)");
  apply->add_option("--calibration", calibration_path, "calibration file to apply first");
  apply->add_option("--seed", o.seed, "seed for randomized bands");
  apply->add_option("--output", output_csv, "output CSV path");

  auto* audit = app.add_subcommand("audit", "audit decisions against a fairness constraint");
  add_common(audit, o);
  audit->add_option("--input", o.input, "decision CSV");
  audit->add_option("--criterion", o.criterion, "fairness criterion");
  audit->add_option("--epsilon", o.epsilon, "gap tolerance");
  audit->add_option("--strata", o.strata, "strata for conditional parity")->delimiter(',');
  audit->add_option("--report", report_path, "also write the gap report here");

  auto* simulate = app.add_subcommand("simulate", "full pipeline on a synthetic population");
  add_common(simulate, o);
  simulate->add_option("--mode", o.mode, "unconstrained or fairness");
  simulate->add_option("--criterion", o.criterion, "fairness criterion");
  simulate->add_option("--epsilon", o.epsilon, "gap tolerance");
  simulate->add_option("--alpha", o.alpha, "utility of a correct acceptance");
  simulate->add_option("--beta", o.beta, "loss of a wrong acceptance");
  simulate->add_option("--gamma", o.gamma, "utility of a rejection");
  simulate->add_option("--calibration-bins", o.calibration_bins, "equal-frequency bin count");
  simulate->add_option("--baseline-bins", o.baseline_bins, "baseline histogram bins");
  simulate->add_option("--resolution", o.resolution, "threshold grid resolution");
  simulate->add_option("--seed", o.seed, "run seed");
  simulate->add_option("--output-dir", o.output_dir, "run directory");

  auto* report = app.add_subcommand("report", "emit plot data from a prior run directory");
  add_common(report, o);
  report->add_option("--run-dir", run_dir, "directory with bundle.json (and result.json)");
  report->add_option("--criterion", o.criterion, "criterion for the epsilon sweep");
  report->add_option("--epsilons", epsilons, "epsilon sweep values")->delimiter(',');
  report->add_option("--alpha", o.alpha, "utility of a correct acceptance");
  report->add_option("--beta", o.beta, "loss of a wrong acceptance");
  report->add_option("--gamma", o.gamma, "utility of a rejection");
  report->add_option("--resolution", o.resolution, "threshold grid resolution");
  report->add_option("--baseline-bins", o.baseline_bins, "baseline histogram bins");

  auto* generate = app.add_subcommand("generate", "write a synthetic scored population CSV");
  add_common(generate, o);
  generate->add_option("--seed", o.seed, "generation seed");
  generate->add_option("--output", output_csv, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (calibrate->parsed()) return run_calibrate(calibrate, o, cfg);
    if (optimize->parsed()) return run_optimize(optimize, o, cfg, bundle_path);
    if (apply->parsed()) return run_apply(apply, o, cfg, rule_path, calibration_path, output_csv);
    if (audit->parsed()) return run_audit(audit, o, cfg, report_path);
    if (simulate->parsed()) return run_simulate(simulate, o, cfg);
    if (report->parsed()) return run_report(report, o, cfg, run_dir, epsilons);
    if (generate->parsed()) return run_generate(generate, o, cfg, output_csv);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  }
  return 0;
}
