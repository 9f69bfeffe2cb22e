#pragma once

#include "wrfml/core_data.hpp"
#include "wrfml/features.hpp"
#include "wrfml/regressors.hpp"

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace wrfml {

/// RMSE divided by the mean of the truth. Throws LengthMismatch for unequal
/// or empty inputs and ZeroMeanTruth when mean(truth) <= 0.
double nrmse(std::span<const double> pred, std::span<const double> truth);

/// Shuffled partition of 0..n-1 into k folds whose sizes differ by at most
/// one (the first n % k folds get the extra index). Each fold is ascending.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed);

/// Discrete candidate lists per hyperparameter. Only the lists relevant to
/// `family` are drawn from.
struct HyperparameterSpace {
    Family family = Family::GradientBoost;
    std::vector<std::size_t> k;
    std::vector<Weighting> weighting;
    std::vector<std::size_t> n_trees;
    std::vector<std::optional<int>> max_depth;
    std::vector<std::size_t> min_samples_leaf;
    std::vector<double> max_features_fraction;
    std::vector<std::size_t> n_rounds;
    std::vector<double> learning_rate;
    std::vector<double> subsample_fraction;
    std::size_t n_samples = 25;

    static HyperparameterSpace defaults(Family family);

    void validate() const;
    std::size_t cardinality() const;
    RegressorConfig draw(Rng& rng) const;
    /// Every config in the space, in mixed-radix order of the lists.
    std::vector<RegressorConfig> enumerate() const;
};

/// Receives the row indices (into the matrix handed to the search) of every fit.
using FitAudit = std::function<void(std::span<const std::size_t> rows)>;

struct SearchOptions {
    std::size_t workers = 1;
    FitAudit audit;
};

struct Trial {
    std::size_t index = 0;
    RegressorConfig config;
    std::vector<double> fold_nrmse;
    double cv_mean_nrmse = std::numeric_limits<double>::infinity();
    bool failed = false;
    std::string error;
};

struct SearchResult {
    RegressorConfig best;
    double best_cv_nrmse = std::numeric_limits<double>::infinity();
    std::vector<Trial> trials;
};

/// Mean validation NRMSE of `config` over the given folds.
Trial cross_validate(const RegressorConfig& config, const Matrix& x, std::span<const double> y,
                     const std::vector<std::vector<std::size_t>>& folds, const FitAudit& audit = {});

/// Draws n_samples configs uniformly with replacement, drops repeats, scores
/// each by k-fold mean NRMSE and returns the lowest (earliest on ties).
/// Trial i is fitted with seed `seed ^ i`. Failed trials score +inf.
SearchResult randomized_search(const HyperparameterSpace& space, const Matrix& x, std::span<const double> y,
                               std::size_t k, std::uint64_t seed, const SearchOptions& options = {});

struct WrfMlSpec {
    FeatureVariant variant;
    Family family = Family::GradientBoost;
    friend bool operator==(const WrfMlSpec&, const WrfMlSpec&) = default;
};

struct ModelSpec {
    std::variant<BaselineSpec, WrfMlSpec> kind;
    std::string label;

    static ModelSpec baseline(const BaselineSpec& spec);
    static ModelSpec wrf_ml(const FeatureVariant& variant, Family family);
    bool is_baseline() const noexcept { return std::holds_alternative<BaselineSpec>(kind); }
};

struct ExperimentProtocol {
    double test_fraction = 0.2;
    SplitMode split_mode = SplitMode::Random;
    std::size_t folds = 5;
    std::size_t n_samples = 25;
    std::uint64_t seed = 42;
    std::size_t workers = 1;
    /// Overrides of the default candidate lists, per family.
    std::map<Family, HyperparameterSpace> spaces;

    /// Space for `family` with n_samples taken from the protocol.
    HyperparameterSpace space_for(Family family) const;
};

struct EvaluationEntry {
    std::string location;
    std::string label;
    std::string group; // baselines, base, neighbor, lag, ensemble
    std::optional<RegressorConfig> hyperparameters;
    std::optional<double> cv_mean_nrmse;
    double test_nrmse = 0.0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::uint64_t seed = 0;
    std::size_t n_trials = 0;
};

struct SpecFailure {
    std::string label;
    std::string code;
    std::string message;
};

struct ReportMetadata {
    std::string location;
    std::string dataset_fingerprint;
    std::string config_fingerprint;
    std::string toolkit_version;
    std::size_t n_rows = 0;
    std::size_t n_test_rows = 0;
    std::size_t dropped_rows = 0;
};

struct EvaluationReport {
    std::vector<EvaluationEntry> entries;
    std::vector<SpecFailure> failures;
    ReportMetadata metadata;

    const EvaluationEntry* find(std::string_view label) const;
};

/// Called with the spec label and the timestamps of every row handed to fit.
using ExperimentAudit = std::function<void(const std::string& label, std::span<const HourStamp> rows)>;

std::string dataset_fingerprint(const AlignedDataset& ds);
std::string group_of(const ModelSpec& spec);

/// Runs every spec against one shared train/test split of `ds`. WRF-ML specs
/// are searched and refitted on training rows only; baselines are scored on
/// the test timestamps they can cover. A failing spec lands in `failures`.
EvaluationReport evaluate_experiment(const AlignedDataset& ds, const std::vector<ModelSpec>& specs,
                                     const ExperimentProtocol& protocol, const ExperimentAudit& audit = {});

} // namespace wrfml
