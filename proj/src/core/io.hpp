#pragma once

#include <string>

#include <json.hpp>

#include "core/types.hpp"

namespace fairdecide::io {

using json = nlohmann::json;

// Shortest round-trip decimal form, locale-independent.
std::string format_double(double x);

// Instance tables: UTF-8 CSV, header row, dot decimal separator. Required
// columns id, score, group; optional y, stratum, decision, p. Parse errors
// raise SchemaError naming the offending line and column.
Instances read_instances_csv(const std::string& path);
std::string instances_to_csv(const Instances& instances);
void write_instances_csv(const Instances& instances, const std::string& path);

json read_json_file(const std::string& path);
void write_json_file(const json& j, const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& text, const std::string& path);

json calibration_to_json(const CalibrationFunction& fn);
CalibrationFunction calibration_from_json(const json& j);

json calibration_set_to_json(const CalibrationSet& set);
CalibrationSet calibration_set_from_json(const json& j);

json calibration_report_to_json(const CalibrationReport& report);

json baseline_to_json(const BaselineDistribution& b);
BaselineDistribution baseline_from_json(const json& j);

json task_spec_to_json(const TaskSpec& task);
TaskSpec task_spec_from_json(const json& j);

json bundle_to_json(const DeliverableBundle& bundle);
DeliverableBundle bundle_from_json(const json& j);

json rule_to_json(const DecisionRule& rule);
DecisionRule rule_from_json(const json& j);

json result_to_json(const OptimizationResult& result);

json gap_report_to_json(const GapReport& report);

json validation_to_json(const ValidationReport& report);

json synthetic_spec_to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const json& j);

}  // namespace fairdecide::io
