#pragma once

#include "wrfml/matrix.hpp"
#include "wrfml/random.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace wrfml {

enum class Family { KNN, RandomForest, GradientBoost };

/// Short labels: "KNN", "RF", "GBT".
std::string_view to_string(Family f);
std::optional<Family> parse_family(std::string_view s);

enum class Weighting { Uniform, InverseDistance };
std::string_view to_string(Weighting w);
std::optional<Weighting> parse_weighting(std::string_view s);

struct KnnParams {
    std::size_t k = 5;
    Weighting weighting = Weighting::Uniform;
    friend bool operator==(const KnnParams&, const KnnParams&) = default;
};

/// max_depth: nullopt grows until leaves are pure or too small; 0 is a single leaf.
struct ForestParams {
    std::size_t n_trees = 100;
    std::optional<int> max_depth;
    std::size_t min_samples_leaf = 1;
    double max_features_fraction = 1.0;
    /// Test hook: false fits every tree on the identity resample.
    bool bootstrap = true;
    friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

struct BoostParams {
    std::size_t n_rounds = 100;
    double learning_rate = 0.1;
    std::optional<int> max_depth = 3;
    std::size_t min_samples_leaf = 1;
    double subsample_fraction = 1.0;
    friend bool operator==(const BoostParams&, const BoostParams&) = default;
};

/// Only the block matching `family` is used.
struct RegressorConfig {
    Family family = Family::GradientBoost;
    KnnParams knn;
    ForestParams forest;
    BoostParams boost;
    std::uint64_t seed = 0;

    /// Throws InvalidConfig naming the offending field.
    void validate() const;
    friend bool operator==(const RegressorConfig&, const RegressorConfig&) = default;
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// CART regression tree stored as a flat node array; node 0 is the root.
/// Rows with x[feature] <= threshold descend left.
struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> row) const;
    std::size_t depth() const;
    std::size_t leaf_count() const;
    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct TreeParams {
    std::optional<int> max_depth;
    std::size_t min_samples_leaf = 1;
    double max_features_fraction = 1.0;
};

/// Row order of every column of x by (value, row index). Built once per fit
/// and shared by all trees grown on the same matrix.
struct ColumnOrder {
    std::vector<std::vector<std::size_t>> by_column;
    /// Column-major copy of x.
    std::vector<std::vector<double>> values;
    static ColumnOrder of(const Matrix& x);
};

/// Grows one variance-reduction tree over `samples` (row indices into x and
/// y, duplicates allowed). Candidate thresholds are midpoints between
/// adjacent distinct values; gain ties keep the lowest column, then the
/// lowest threshold. `rng` is consumed only for column subsampling.
RegressionTree fit_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> samples,
                        const TreeParams& params, Rng& rng);
RegressionTree fit_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> samples,
                        const TreeParams& params, Rng& rng, const ColumnOrder& order);

/// Mean that is exact for constant input.
double stable_mean(std::span<const double> values);

struct KnnModel {
    KnnParams params;
    std::vector<double> mean;
    std::vector<double> scale;
    Matrix points; // standardized training rows
    std::vector<double> targets;
};

struct ForestModel {
    std::vector<RegressionTree> trees;
};

struct BoostModel {
    double initial = 0.0;
    double learning_rate = 0.1;
    std::vector<RegressionTree> stages;
    /// Training MSE after stage 0 and after each round.
    std::vector<double> loss_trace;
};

using ModelState = std::variant<KnnModel, ForestModel, BoostModel>;

/// Immutable fitted predictor.
class TrainedRegressor {
public:
    TrainedRegressor(RegressorConfig config, std::size_t n_rows, std::size_t n_cols, ModelState state);

    Family family() const noexcept { return config_.family; }
    const RegressorConfig& config() const noexcept { return config_; }
    std::size_t n_rows() const noexcept { return n_rows_; }
    std::size_t n_cols() const noexcept { return n_cols_; }
    const ModelState& state() const noexcept { return state_; }

    std::vector<double> predict(const Matrix& x) const;
    double predict_row(std::span<const double> row) const;

private:
    RegressorConfig config_;
    std::size_t n_rows_;
    std::size_t n_cols_;
    ModelState state_;
};

/// `workers` parallelizes forest trees; results never depend on it.
TrainedRegressor fit(const RegressorConfig& config, const Matrix& x, std::span<const double> y,
                     std::size_t workers = 1);

std::vector<double> predict(const TrainedRegressor& model, const Matrix& x);

/// Training MSE per boosting stage (length n_rounds + 1). Throws WrongFamily.
const std::vector<double>& boosting_loss_trace(const TrainedRegressor& model);

} // namespace wrfml
