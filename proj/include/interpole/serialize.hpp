#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "interpole/audit.hpp"
#include "interpole/envs.hpp"
#include "interpole/learner.hpp"
#include "interpole/metrics.hpp"

namespace interpole {

using nlohmann::json;

json spaces_to_json(const Spaces& spaces);
Spaces spaces_from_json(const json& j);

/// Decision-dynamics document: cardinalities, tensors in [s][a][s'] /
/// [a][s'][z] index order, initial belief, optional labels.
json params_to_json(const IohmmParams& params, const Spaces* spaces = nullptr);
IohmmParams params_from_json(const json& j);

json policy_to_json(const BoundaryPolicy& policy);
BoundaryPolicy policy_from_json(const json& j);

json theta_to_json(const ThetaEstimate& theta, const Spaces* spaces = nullptr);
ThetaEstimate theta_from_json(const json& j);

/// Model files are fit reports: the estimate under "params"/"policy"/
/// "frozen" plus the trace and convergence diagnostics.
json fit_report_to_json(const FitReport& report, const Spaces* spaces = nullptr);

json environment_to_json(const EnvironmentSpec& env);
EnvironmentSpec environment_from_json(const json& j);

/// Datasets are JSON Lines: a header with the spaces and stop actions, then
/// one {"steps": [[a, z], ...]} object per trajectory (optional "tags").
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path, int max_trajectory_length = 1000);

/// Generation records are JSON Lines keyed by trajectory line number.
void save_ground_truth(const std::string& path, const GroundTruth& truth);
GroundTruth load_ground_truth(const std::string& path);

json eval_report_to_json(const EvalReport& report);
std::string eval_report_to_csv(const EvalReport& report);

json audit_report_to_json(const AuditReport& report);
std::string audit_cohorts_to_csv(const AuditReport& report);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);
json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const json& j);

/// FNV-1a 64-bit content hash, hex encoded; used for manifest checksums.
std::string file_checksum(const std::string& path);

}  // namespace interpole
