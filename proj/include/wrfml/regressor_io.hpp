#pragma once

#include "wrfml/regressors.hpp"

#include <json.hpp>

namespace wrfml {

inline constexpr int kRegressorFormatVersion = 1;

/// Hyperparameters of the config's own family plus the seed.
nlohmann::ordered_json config_to_json(const RegressorConfig& config);
/// Missing keys keep their defaults; `family` is required.
RegressorConfig config_from_json(const nlohmann::json& j);

/// Versioned document holding the config, training shape and fitted state
/// (standardization stats and points, or flat tree arrays).
nlohmann::ordered_json regressor_to_json(const TrainedRegressor& model);
TrainedRegressor regressor_from_json(const nlohmann::json& j);

} // namespace wrfml
