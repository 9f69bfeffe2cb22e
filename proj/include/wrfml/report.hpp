#pragma once

#include "wrfml/model_selection.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace wrfml {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::string_view kReportCsvHeader = "location,label,test_nrmse,cv_mean_nrmse,n_train,n_test,seed";
inline constexpr std::string_view kFigureCsvHeader = "label,nrmse";

nlohmann::ordered_json space_to_json(const HyperparameterSpace& space);
HyperparameterSpace space_from_json(const nlohmann::json& j, Family family);

nlohmann::ordered_json protocol_to_json(const ExperimentProtocol& protocol);
nlohmann::ordered_json spec_to_json(const ModelSpec& spec);

/// Content hash of the protocol and spec list (worker count excluded).
std::string config_fingerprint(const ExperimentProtocol& protocol, const std::vector<ModelSpec>& specs);

std::string report_to_json(const EvaluationReport& report);
std::string report_to_csv(const EvaluationReport& report);

/// One `label,nrmse` CSV per comparison group present in the report, keyed by
/// group name (baselines, base, neighbor, lag, ensemble).
std::map<std::string, std::string> figure_csvs(const EvaluationReport& report);

} // namespace wrfml
