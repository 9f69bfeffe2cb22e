#pragma once

#include "wrfml/core_data.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace wrfml {

/// Affine + noise distortion applied to the met truth to make one NWP channel.
struct ChannelBias {
    Channel channel = Channel::M1;
    double gain = 1.0;
    double offset = 0.0;   // W/m2
    double noise_sd = 0.0; // W/m2
    int lag_smear = 0;     // hours, 0 or 1
    friend bool operator==(const ChannelBias&, const ChannelBias&) = default;
};

std::vector<ChannelBias> default_channel_biases();

struct ScenarioConfig {
    int n_days = 93;
    std::string start_date = "2014-01-01";
    std::string target = "X0";
    std::vector<std::string> neighbors{"X1", "X2", "X3"};
    double peak_clear_ghi = 950.0;
    /// Hour-to-hour AR(1) coefficient of the cloud process.
    double cloud_persistence = 0.7;
    double cloud_depth = 0.8;
    /// Scale of the cloud driver in cover units: cover = clamp(0.5 + spread * z, 0, 1).
    double cloud_spread = 0.4;
    /// Day-to-day AR(1) coefficient of the weather regime.
    double regime_persistence = 0.9;
    /// Variance share of the daily regime in the cloud driver.
    double regime_weight = 0.6;
    /// Variance share of the per-location component in the hourly part.
    double local_weight = 0.2;
    std::vector<ChannelBias> channel_biases = default_channel_biases();
    std::uint64_t seed = 2014;

    /// Throws InvalidConfig naming the field, e.g. "channel_biases[2].noise_sd".
    void validate() const;
    std::vector<std::string> locations() const;
    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

nlohmann::ordered_json scenario_config_to_json(const ScenarioConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
ScenarioConfig scenario_config_from_json(const nlohmann::json& j);

struct Scenario {
    ScenarioConfig config;
    /// Every location, grouped by location in config order, hourly within.
    std::vector<MetObservation> met;
    /// Grouped by channel, then location, hourly within.
    std::vector<NwpOutput> nwp;
    /// Clear-sky GHI for each hour of the axis.
    std::vector<double> clear_sky;
    /// Cloud factor per location (config order) per hour, in [1 - cloud_depth, 1].
    std::vector<std::vector<double>> cloud_factor;

    std::vector<MetObservation> met_for(const std::string& location) const;
};

/// peak * sin(pi * (hour - 7) / 12) inside (7, 19), zero elsewhere.
double clear_sky_ghi(int hour_of_day, double peak = 950.0);

Scenario generate_scenario(const ScenarioConfig& cfg);

/// (met CSV, nwp CSV) in the core_data schemas.
std::pair<std::string, std::string> scenario_to_csv(const Scenario& s);

} // namespace wrfml
