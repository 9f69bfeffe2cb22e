#include "wrfml/regressors.hpp"

#include "wrfml/error.hpp"
#include "wrfml/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wrfml {

namespace {

constexpr std::uint64_t kBoostStream = 0x424F4F5354ULL; // "BOOST"

void check_finite(const Matrix& x, std::string_view what) {
    for (double v : x.values())
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFiniteInput, std::string(what) + " contains a non-finite value");
}

void invalid(const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, field + ": " + why, std::nullopt, field);
}

void check_fraction(double v, const std::string& field) {
    if (!(v > 0.0 && v <= 1.0))
        invalid(field, "must lie in (0, 1]");
}

void check_depth(const std::optional<int>& d, const std::string& field) {
    if (d && *d < 0)
        invalid(field, "must be >= 0 or unbounded");
}

KnnModel fit_knn(const KnnParams& params, const Matrix& x, std::span<const double> y) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    KnnModel m;
    m.params = params;
    m.mean.assign(p, 0.0);
    m.scale.assign(p, 1.0);
    for (std::size_t c = 0; c < p; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            sum += x(r, c);
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double d = x(r, c) - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        if (sd > 0.0 && std::isfinite(sd)) {
            m.mean[c] = mean;
            m.scale[c] = sd;
        }
    }
    m.points = Matrix(n, p);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < p; ++c)
            m.points(r, c) = (x(r, c) - m.mean[c]) / m.scale[c];
    m.targets.assign(y.begin(), y.end());
    return m;
}

double predict_knn(const KnnModel& m, std::span<const double> query) {
    const std::size_t n = m.points.rows();
    const std::size_t p = m.points.cols();
    std::vector<double> z(p);
    for (std::size_t c = 0; c < p; ++c)
        z[c] = (query[c] - m.mean[c]) / m.scale[c];

    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto pt = m.points.row(r);
        double d2 = 0.0;
        for (std::size_t c = 0; c < p; ++c) {
            const double d = pt[c] - z[c];
            d2 += d * d;
        }
        dist[r] = {d2, r};
    }
    const std::size_t k = std::min(m.params.k, n);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

    if (m.params.weighting == Weighting::InverseDistance) {
        if (dist[0].first == 0.0) {
            double sum = 0.0;
            std::size_t hits = 0;
            for (std::size_t i = 0; i < k && dist[i].first == 0.0; ++i, ++hits)
                sum += m.targets[dist[i].second];
            return sum / static_cast<double>(hits);
        }
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double w = 1.0 / std::sqrt(dist[i].first);
            num += w * m.targets[dist[i].second];
            den += w;
        }
        // Every neighbor at infinite distance: weights vanish, fall back to uniform.
        if (den > 0.0)
            return num / den;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        sum += m.targets[dist[i].second];
    return sum / static_cast<double>(k);
}

ForestModel fit_forest(const ForestParams& params, std::uint64_t seed, const Matrix& x, std::span<const double> y,
                       std::size_t workers) {
    const std::size_t n = x.rows();
    const TreeParams tree_params{params.max_depth, params.min_samples_leaf, params.max_features_fraction};
    const auto order = ColumnOrder::of(x);
    ForestModel forest;
    forest.trees.resize(params.n_trees);
    parallel_for(params.n_trees, workers, [&](std::size_t t) {
        Rng rng(derive_seed(seed, t));
        std::vector<std::size_t> samples(n);
        if (params.bootstrap) {
            for (auto& s : samples)
                s = static_cast<std::size_t>(rng.below(n));
        } else {
            std::iota(samples.begin(), samples.end(), std::size_t{0});
        }
        forest.trees[t] = fit_tree(x, y, samples, tree_params, rng, order);
    });
    return forest;
}

double mse(std::span<const double> pred, std::span<const double> y) {
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = pred[i] - y[i];
        ss += d * d;
    }
    return ss / static_cast<double>(y.size());
}

BoostModel fit_boost(const BoostParams& params, std::uint64_t seed, const Matrix& x, std::span<const double> y) {
    const std::size_t n = x.rows();
    BoostModel model;
    model.initial = stable_mean(y);
    model.learning_rate = params.learning_rate;

    std::vector<double> fitted(n, model.initial);
    std::vector<double> residual(n);
    model.loss_trace.push_back(mse(fitted, y));

    const TreeParams tree_params{params.max_depth, params.min_samples_leaf, 1.0};
    auto m = static_cast<std::size_t>(std::llround(params.subsample_fraction * static_cast<double>(n)));
    m = std::clamp<std::size_t>(m, 1, n);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto order = ColumnOrder::of(x);

    for (std::size_t round = 0; round < params.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i)
            residual[i] = y[i] - fitted[i];
        Rng rng(derive_seed(seed ^ kBoostStream, round));
        std::vector<std::size_t> samples = all;
        if (m < n) {
            for (std::size_t i = 0; i < m; ++i) {
                const auto j = i + static_cast<std::size_t>(rng.below(n - i));
                std::swap(samples[i], samples[j]);
            }
            samples.resize(m);
            std::sort(samples.begin(), samples.end());
        }
        auto tree = fit_tree(x, residual, samples, tree_params, rng, order);
        for (std::size_t i = 0; i < n; ++i)
            fitted[i] += model.learning_rate * tree.predict(x.row(i));
        model.stages.push_back(std::move(tree));
        model.loss_trace.push_back(mse(fitted, y));
    }
    return model;
}

} // namespace

std::string_view to_string(Family f) {
    switch (f) {
    case Family::KNN: return "KNN";
    case Family::RandomForest: return "RF";
    case Family::GradientBoost: return "GBT";
    }
    return "?";
}

std::optional<Family> parse_family(std::string_view s) {
    if (s == "KNN")
        return Family::KNN;
    if (s == "RF" || s == "RandomForest")
        return Family::RandomForest;
    if (s == "GBT" || s == "GradientBoost")
        return Family::GradientBoost;
    return std::nullopt;
}

std::string_view to_string(Weighting w) {
    return w == Weighting::Uniform ? "uniform" : "inverse_distance";
}

std::optional<Weighting> parse_weighting(std::string_view s) {
    if (s == "uniform")
        return Weighting::Uniform;
    if (s == "inverse_distance")
        return Weighting::InverseDistance;
    return std::nullopt;
}

void RegressorConfig::validate() const {
    switch (family) {
    case Family::KNN:
        if (knn.k < 1)
            invalid("k", "must be >= 1");
        break;
    case Family::RandomForest:
        if (forest.n_trees < 1)
            invalid("n_trees", "must be >= 1");
        if (forest.min_samples_leaf < 1)
            invalid("min_samples_leaf", "must be >= 1");
        check_fraction(forest.max_features_fraction, "max_features_fraction");
        check_depth(forest.max_depth, "max_depth");
        break;
    case Family::GradientBoost:
        if (boost.min_samples_leaf < 1)
            invalid("min_samples_leaf", "must be >= 1");
        check_fraction(boost.learning_rate, "learning_rate");
        check_fraction(boost.subsample_fraction, "subsample_fraction");
        check_depth(boost.max_depth, "max_depth");
        break;
    }
}

TrainedRegressor::TrainedRegressor(RegressorConfig config, std::size_t n_rows, std::size_t n_cols, ModelState state)
    : config_(config), n_rows_(n_rows), n_cols_(n_cols), state_(std::move(state)) {}

double TrainedRegressor::predict_row(std::span<const double> row) const {
    if (row.size() != n_cols_)
        throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(n_cols_) + " columns, got " +
                                                  std::to_string(row.size()));
    for (double v : row)
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFiniteInput, "query contains a non-finite value");
    if (const auto* knn = std::get_if<KnnModel>(&state_))
        return predict_knn(*knn, row);
    if (const auto* forest = std::get_if<ForestModel>(&state_)) {
        double sum = 0.0;
        for (const auto& t : forest->trees)
            sum += t.predict(row);
        return sum / static_cast<double>(forest->trees.size());
    }
    const auto& boost = std::get<BoostModel>(state_);
    double out = boost.initial;
    for (const auto& t : boost.stages)
        out += boost.learning_rate * t.predict(row);
    return out;
}

std::vector<double> TrainedRegressor::predict(const Matrix& x) const {
    if (x.cols() != n_cols_ && x.rows() > 0)
        throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(n_cols_) + " columns, got " +
                                                  std::to_string(x.cols()));
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r)
        out[r] = predict_row(x.row(r));
    return out;
}

TrainedRegressor fit(const RegressorConfig& config, const Matrix& x, std::span<const double> y, std::size_t workers) {
    config.validate();
    if (x.rows() != y.size())
        throw Error(ErrorCode::ShapeMismatch, "x has " + std::to_string(x.rows()) + " rows but y has " +
                                                  std::to_string(y.size()));
    if (x.rows() < 2 || x.cols() == 0)
        throw Error(ErrorCode::DegenerateInput, "need at least 2 rows and 1 column to fit");
    check_finite(x, "x");
    for (double v : y)
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFiniteInput, "y contains a non-finite value");

    ModelState state;
    switch (config.family) {
    case Family::KNN: state = fit_knn(config.knn, x, y); break;
    case Family::RandomForest: state = fit_forest(config.forest, config.seed, x, y, workers); break;
    case Family::GradientBoost: state = fit_boost(config.boost, config.seed, x, y); break;
    }
    return TrainedRegressor(config, x.rows(), x.cols(), std::move(state));
}

std::vector<double> predict(const TrainedRegressor& model, const Matrix& x) {
    return model.predict(x);
}

const std::vector<double>& boosting_loss_trace(const TrainedRegressor& model) {
    const auto* boost = std::get_if<BoostModel>(&model.state());
    if (!boost)
        throw Error(ErrorCode::WrongFamily, "loss trace is only recorded for gradient boosting, not " +
                                                std::string(to_string(model.family())));
    return boost->loss_trace;
}

} // namespace wrfml
