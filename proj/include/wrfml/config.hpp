#pragma once

#include "wrfml/model_selection.hpp"
#include "wrfml/synth.hpp"

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace wrfml {

struct FileSource {
    std::filesystem::path met;
    std::filesystem::path nwp;
    std::string target;
    std::vector<std::string> neighbors;
};

/// Which specs to run: RawWrf per selected channel plus both persistence
/// baselines, then every variant x channel x family (ensemble variants once
/// per family).
struct SpecSelection {
    bool baselines = true;
    std::vector<VariantKind> variants{VariantKind::Base};
    std::vector<Channel> channels{kAllChannels.begin(), kAllChannels.end()};
    std::vector<Family> families{Family::KNN, Family::RandomForest, Family::GradientBoost};
};

enum class ReportFormat { Json, Csv };

struct OutputConfig {
    std::filesystem::path report = "report.json";
    ReportFormat format = ReportFormat::Json;
    /// Per-figure CSVs go here; empty disables them.
    std::filesystem::path figures_dir = "figures";
};

struct ExperimentConfig {
    std::variant<ScenarioConfig, FileSource> data;
    SpecSelection specs;
    ExperimentProtocol protocol;
    OutputConfig output;
};

/// Parses an experiment config. Relative paths resolve against `base_dir`.
/// Throws InvalidConfig naming the offending key.
ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

std::vector<ModelSpec> expand_specs(const SpecSelection& sel);

} // namespace wrfml
