#include "core/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace fairdecide::io {

namespace {

constexpr int kSchemaVersion = 1;

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    fail(Errc::SchemaError, where + ": '" + s + "' is not a number");
  return v;
}

int parse_binary(const std::string& s, const std::string& where) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  fail(Errc::SchemaError, where + ": '" + s + "' is not 0 or 1");
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

const json& get(const json& j, const char* key, const std::string& doc) {
  auto it = j.find(key);
  if (it == j.end()) fail(Errc::SchemaError, doc + ": missing field '" + key + "'");
  return *it;
}

void check_schema(const json& j, const std::string& name) {
  if (get(j, "schema", name).get<std::string>() != "fairdecide/" + name)
    fail(Errc::SchemaError, "document is not a fairdecide/" + name);
  if (get(j, "version", name).get<int>() > kSchemaVersion)
    fail(Errc::SchemaError, name + ": unsupported schema version");
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

Instances read_instances_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail(Errc::SchemaError, path + ": empty file");

  const auto header = split_line(line);
  int c_id = -1, c_score = -1, c_group = -1, c_y = -1, c_stratum = -1, c_decision = -1, c_p = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& h = header[i];
    if (h == "id") c_id = static_cast<int>(i);
    else if (h == "score") c_score = static_cast<int>(i);
    else if (h == "group") c_group = static_cast<int>(i);
    else if (h == "y") c_y = static_cast<int>(i);
    else if (h == "stratum") c_stratum = static_cast<int>(i);
    else if (h == "decision") c_decision = static_cast<int>(i);
    else if (h == "p") c_p = static_cast<int>(i);
    else fail(Errc::SchemaError, path + ": unknown column '" + h + "'");
  }
  for (const auto& [col, name] :
       std::vector<std::pair<int, const char*>>{{c_id, "id"}, {c_score, "score"}, {c_group, "group"}})
    if (col < 0) fail(Errc::SchemaError, path + ": missing column '" + std::string(name) + "'");

  Instances out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_line(line);
    const std::string where = path + " line " + std::to_string(lineno);
    if (fields.size() != header.size())
      fail(Errc::SchemaError, where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
    LabeledInstance x;
    x.id = fields[c_id];
    if (x.id.empty()) fail(Errc::SchemaError, where + ": column 'id' is empty");
    x.raw_score = parse_double(fields[c_score], where + " column 'score'");
    x.group = fields[c_group];
    if (x.group.empty()) fail(Errc::SchemaError, where + ": column 'group' is empty");
    if (c_y >= 0 && !fields[c_y].empty()) x.outcome = parse_binary(fields[c_y], where + " column 'y'");
    if (c_stratum >= 0 && !fields[c_stratum].empty()) x.stratum = fields[c_stratum];
    if (c_decision >= 0 && !fields[c_decision].empty())
      x.decision = parse_binary(fields[c_decision], where + " column 'decision'");
    if (c_p >= 0 && !fields[c_p].empty()) {
      x.calibrated_p = parse_double(fields[c_p], where + " column 'p'");
      if (!(*x.calibrated_p >= 0.0 && *x.calibrated_p <= 1.0))
        fail(Errc::SchemaError, where + ": column 'p' outside [0,1]");
    }
    out.push_back(std::move(x));
  }
  return out;
}

std::string instances_to_csv(const Instances& instances) {
  bool any_y = false, any_stratum = false, any_decision = false, any_p = false;
  for (const auto& x : instances) {
    any_y |= bool(x.outcome);
    any_stratum |= bool(x.stratum);
    any_decision |= bool(x.decision);
    any_p |= bool(x.calibrated_p);
  }
  auto clean = [](const std::string& s) {
    if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos)
      fail(Errc::SchemaError, "field '" + s + "' contains a separator");
    return s;
  };
  std::ostringstream out;
  out << "id,score,group";
  if (any_y) out << ",y";
  if (any_stratum) out << ",stratum";
  if (any_decision) out << ",decision";
  if (any_p) out << ",p";
  out << "\n";
  for (const auto& x : instances) {
    out << clean(x.id) << ',' << format_double(x.raw_score) << ',' << clean(x.group);
    if (any_y) out << ',' << (x.outcome ? std::to_string(*x.outcome) : "");
    if (any_stratum) out << ',' << (x.stratum ? clean(*x.stratum) : "");
    if (any_decision) out << ',' << (x.decision ? std::to_string(*x.decision) : "");
    if (any_p) out << ',' << (x.calibrated_p ? format_double(*x.calibrated_p) : "");
    out << "\n";
  }
  return out.str();
}

void write_instances_csv(const Instances& instances, const std::string& path) {
  write_text_file(instances_to_csv(instances), path);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(Errc::SchemaError, path + ": " + e.what());
  }
}

void write_json_file(const json& j, const std::string& path) {
  write_text_file(j.dump(2) + "\n", path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(Errc::IoError, "failed writing '" + path + "'");
}

json calibration_to_json(const CalibrationFunction& fn) {
  return json{{"schema", "fairdecide/calibration"},
              {"version", kSchemaVersion},
              {"group_scope", fn.group_scope},
              {"bin_edges", fn.bin_edges},
              {"bin_values", fn.bin_values},
              {"fit_counts", fn.fit_counts}};
}

CalibrationFunction calibration_from_json(const json& j) {
  check_schema(j, "calibration");
  CalibrationFunction fn;
  fn.group_scope = get(j, "group_scope", "calibration").get<std::string>();
  fn.bin_edges = get(j, "bin_edges", "calibration").get<std::vector<double>>();
  fn.bin_values = get(j, "bin_values", "calibration").get<std::vector<double>>();
  fn.fit_counts = get(j, "fit_counts", "calibration").get<std::vector<std::int64_t>>();
  fn.check();
  return fn;
}

json calibration_set_to_json(const CalibrationSet& set) {
  json per_group = json::object();
  for (const auto& [g, fn] : set.per_group) per_group[g] = calibration_to_json(fn);
  json j{{"schema", "fairdecide/calibration-set"},
         {"version", kSchemaVersion},
         {"per_group", per_group}};
  j["global"] = set.global ? calibration_to_json(*set.global) : json();
  return j;
}

// Accepts either a calibration-set document or a single-function document
// (slotted by its group_scope).
CalibrationSet calibration_set_from_json(const json& j) {
  CalibrationSet set;
  if (j.contains("schema") && j["schema"] == "fairdecide/calibration") {
    CalibrationFunction fn = calibration_from_json(j);
    if (fn.global())
      set.global = std::move(fn);
    else
      set.per_group[fn.group_scope] = std::move(fn);
    return set;
  }
  if (j.contains("global") && !j["global"].is_null())
    set.global = calibration_from_json(j["global"]);
  if (j.contains("per_group"))
    for (const auto& [g, fj] : j["per_group"].items()) set.per_group[g] = calibration_from_json(fj);
  if (!set.global && set.per_group.empty())
    fail(Errc::SchemaError, "document holds no calibration function");
  return set;
}

json calibration_report_to_json(const CalibrationReport& report) {
  json bins = json::array();
  for (const auto& b : report.bins)
    bins.push_back(
        json{{"mean_score", b.mean_score}, {"frequency", b.frequency}, {"count", b.count}});
  return json{{"group_scope", report.group_scope},
              {"expected_calibration_error", report.ece},
              {"bins", bins}};
}

json baseline_to_json(const BaselineDistribution& b) {
  return json{{"group", b.group},
              {"bin_edges", b.bin_edges},
              {"mass", b.mass},
              {"count", b.count},
              {"base_rate", b.base_rate},
              {"base_rate_source",
               b.base_rate_source == BaseRateSource::Labels ? "labels" : "calibrated_scores"}};
}

BaselineDistribution baseline_from_json(const json& j) {
  BaselineDistribution b;
  b.group = get(j, "group", "baseline").get<std::string>();
  b.bin_edges = get(j, "bin_edges", "baseline").get<std::vector<double>>();
  b.mass = get(j, "mass", "baseline").get<std::vector<double>>();
  b.count = get(j, "count", "baseline").get<std::int64_t>();
  b.base_rate = get(j, "base_rate", "baseline").get<double>();
  const auto src = get(j, "base_rate_source", "baseline").get<std::string>();
  if (src == "labels")
    b.base_rate_source = BaseRateSource::Labels;
  else if (src == "calibrated_scores")
    b.base_rate_source = BaseRateSource::CalibratedScores;
  else
    fail(Errc::SchemaError, "baseline: unknown base_rate_source '" + src + "'");
  b.check();
  return b;
}

json task_spec_to_json(const TaskSpec& task) {
  return json{{"schema", "fairdecide/task-spec"},
              {"version", kSchemaVersion},
              {"mode", bundle_mode_name(task.mode)},
              {"target_definition", task.target_definition},
              {"sensitive_groups", task.groups},
              {"legitimate_strata", task.strata},
              {"population_note", task.population_note}};
}

TaskSpec task_spec_from_json(const json& j) {
  check_schema(j, "task-spec");
  TaskSpec t;
  auto mode = bundle_mode_from_name(get(j, "mode", "task-spec").get<std::string>());
  if (!mode) fail(Errc::SchemaError, "task-spec: unknown mode");
  t.mode = *mode;
  t.target_definition = get(j, "target_definition", "task-spec").get<std::string>();
  t.groups = get(j, "sensitive_groups", "task-spec").get<std::vector<std::string>>();
  t.strata = get(j, "legitimate_strata", "task-spec").get<std::vector<std::string>>();
  t.population_note = j.value("population_note", "");
  return t;
}

json bundle_to_json(const DeliverableBundle& bundle) {
  json baselines = json::object();
  for (const auto& [g, b] : bundle.baselines) baselines[g] = baseline_to_json(b);
  json perf;
  if (bundle.performance) {
    json reports = json::array();
    for (const auto& r : bundle.performance->calibration_reports)
      reports.push_back(calibration_report_to_json(r));
    perf = json{{"accuracy_at_half", bundle.performance->accuracy_at_half},
                {"auroc", bundle.performance->auroc},
                {"calibration_reports", reports}};
  }
  return json{{"schema", "fairdecide/bundle"},
              {"version", bundle.version},
              {"mode", bundle_mode_name(bundle.mode)},
              {"task", task_spec_to_json(bundle.task)},
              {"scored_data_ref", bundle.scored_data_ref},
              {"performance", perf},
              {"calibration", calibration_set_to_json(bundle.calibration)},
              {"baselines", baselines},
              {"provenance",
               json{{"estimation_set", bundle.provenance.estimation_set},
                    {"generator", bundle.provenance.generator},
                    {"timestamp", bundle.provenance.timestamp}}},
              {"extensions", bundle.extensions}};
}

DeliverableBundle bundle_from_json(const json& j) {
  check_schema(j, "bundle");
  DeliverableBundle b;
  b.version = get(j, "version", "bundle").get<int>();
  auto mode = bundle_mode_from_name(get(j, "mode", "bundle").get<std::string>());
  if (!mode) fail(Errc::SchemaError, "bundle: unknown mode");
  b.mode = *mode;
  b.task = task_spec_from_json(get(j, "task", "bundle"));
  b.scored_data_ref = get(j, "scored_data_ref", "bundle").get<std::string>();
  if (j.contains("performance") && !j["performance"].is_null()) {
    PerformanceReport perf;
    const json& pj = j["performance"];
    perf.accuracy_at_half = get(pj, "accuracy_at_half", "bundle.performance").get<double>();
    perf.auroc = get(pj, "auroc", "bundle.performance").get<double>();
    if (pj.contains("calibration_reports")) {
      for (const auto& rj : pj["calibration_reports"]) {
        CalibrationReport r;
        r.group_scope = rj.value("group_scope", "");
        r.ece = rj.value("expected_calibration_error", 0.0);
        if (rj.contains("bins"))
          for (const auto& bj : rj["bins"])
            r.bins.push_back(CalibrationBin{bj.value("mean_score", 0.0), bj.value("frequency", 0.0),
                                            bj.value("count", std::int64_t{0})});
        perf.calibration_reports.push_back(std::move(r));
      }
    }
    b.performance = std::move(perf);
  }
  b.calibration = calibration_set_from_json(get(j, "calibration", "bundle"));
  for (const auto& [g, bj] : get(j, "baselines", "bundle").items())
    b.baselines[g] = baseline_from_json(bj);
  if (j.contains("provenance")) {
    const json& pj = j["provenance"];
    b.provenance.estimation_set = pj.value("estimation_set", "");
    b.provenance.generator = pj.value("generator", "");
    b.provenance.timestamp = pj.value("timestamp", "");
  }
  if (j.contains("extensions"))
    for (const auto& [k, v] : j["extensions"].items()) b.extensions[k] = v.get<std::string>();
  return b;
}

json rule_to_json(const DecisionRule& rule) {
  json per_group = json::object();
  for (const auto& [g, r] : rule.per_group)
    per_group[g] = json{{"direction", direction_name(r.direction)},
                        {"tau_lo", r.tau_lo},
                        {"tau_hi", r.tau_hi},
                        {"mix", r.mix}};
  return json{{"schema", "fairdecide/decision-rule"},
              {"version", kSchemaVersion},
              {"requires_seed", rule.requires_seed()},
              {"per_group", per_group}};
}

DecisionRule rule_from_json(const json& j) {
  check_schema(j, "decision-rule");
  DecisionRule rule;
  for (const auto& [g, rj] : get(j, "per_group", "decision-rule").items()) {
    GroupRule r;
    auto dir = direction_from_name(get(rj, "direction", "decision-rule").get<std::string>());
    if (!dir) fail(Errc::SchemaError, "decision-rule: unknown direction");
    r.direction = *dir;
    r.tau_lo = get(rj, "tau_lo", "decision-rule").get<double>();
    r.tau_hi = get(rj, "tau_hi", "decision-rule").get<double>();
    r.mix = get(rj, "mix", "decision-rule").get<double>();
    rule.per_group[g] = r;
  }
  rule.check();
  return rule;
}

json result_to_json(const OptimizationResult& result) {
  json j{{"schema", "fairdecide/optimization-result"},
         {"version", kSchemaVersion},
         {"rule", rule_to_json(result.rule)},
         {"expected_utility_per_capita", result.expected_utility_per_capita},
         {"achieved_gaps", result.achieved_gaps},
         {"binding", result.binding},
         {"search_trace",
          json{{"resolution", result.search_trace.resolution},
               {"evaluations", result.search_trace.evaluations},
               {"method", result.search_trace.method}}},
         {"warnings", result.warnings}};
  j["target_value"] = result.target_value ? json(*result.target_value) : json();
  return j;
}

json gap_report_to_json(const GapReport& report) {
  json gaps = json::object();
  for (const auto& [k, v] : report.gaps) gaps[k] = v ? json(*v) : json();
  json per_group = json::object();
  for (const auto& [g, r] : report.per_group) {
    json rj = json::object();
    auto put = [&rj](const char* key, const std::optional<double>& v) {
      rj[key] = v ? json(*v) : json();
    };
    put("acceptance", r.acceptance);
    put("tpr", r.tpr);
    put("fpr", r.fpr);
    put("ppv", r.ppv);
    put("for", r.for_rate);
    put("base_rate", r.base_rate);
    per_group[g] = rj;
  }
  json j{{"schema", "fairdecide/gap-report"},
         {"version", kSchemaVersion},
         {"gaps", gaps},
         {"per_group", per_group},
         {"warnings", report.warnings}};
  j["pass"] = report.pass ? json(*report.pass) : json();
  if (report.audited) {
    j["constraint"] = json{{"criterion", criterion_name(report.audited->criterion)},
                           {"epsilon", report.audited->epsilon},
                           {"strata", report.audited->strata}};
  }
  return j;
}

json validation_to_json(const ValidationReport& report) {
  return json{{"valid", report.valid}, {"missing", report.missing}, {"warnings", report.warnings}};
}

json synthetic_spec_to_json(const SyntheticSpec& spec) {
  json groups = json::array();
  for (const auto& g : spec.groups)
    groups.push_back(json{{"name", g.name},
                          {"size", g.size},
                          {"beta", json::array({g.beta_a, g.beta_b})},
                          {"distortion_power", g.distortion_power}});
  return json{{"seed", spec.seed}, {"groups", groups}};
}

SyntheticSpec synthetic_spec_from_json(const json& j) {
  SyntheticSpec spec;
  spec.seed = get(j, "seed", "synthetic-spec").get<std::uint64_t>();
  for (const auto& gj : get(j, "groups", "synthetic-spec")) {
    SyntheticGroupSpec g;
    g.name = get(gj, "name", "synthetic-spec group").get<std::string>();
    g.size = get(gj, "size", "synthetic-spec group").get<std::int64_t>();
    const auto beta = get(gj, "beta", "synthetic-spec group").get<std::vector<double>>();
    if (beta.size() != 2) fail(Errc::SchemaError, "synthetic-spec: beta needs two shape values");
    g.beta_a = beta[0];
    g.beta_b = beta[1];
    g.distortion_power = gj.value("distortion_power", 1.0);
    spec.groups.push_back(std::move(g));
  }
  spec.check();
  return spec;
}

}  // namespace fairdecide::io
