#include "wrfml/model_selection.hpp"

#include "wrfml/error.hpp"
#include "wrfml/parallel.hpp"
#include "wrfml/report.hpp"
#include "wrfml/text.hpp"
#include "wrfml/version.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <set>

namespace wrfml {

namespace {

constexpr std::uint64_t kFoldStream = 0x464F4C44ULL; // "FOLD"
constexpr std::uint64_t kDrawStream = 0x44524157ULL; // "DRAW"

template <typename T>
void require_nonempty(const std::vector<T>& list, const char* name) {
    if (list.empty())
        throw Error(ErrorCode::InvalidConfig, std::string(name) + ": candidate list is empty", std::nullopt, name);
}

template <typename T>
const T& pick(const std::vector<T>& list, Rng& rng) {
    return list[static_cast<std::size_t>(rng.below(list.size()))];
}

RegressorConfig strip_seed(RegressorConfig c) {
    c.seed = 0;
    return c;
}

} // namespace

double nrmse(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size() || truth.empty())
        throw Error(ErrorCode::LengthMismatch, "nrmse needs equal non-empty inputs (got " +
                                                   std::to_string(pred.size()) + " and " +
                                                   std::to_string(truth.size()) + ")");
    double ss = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = pred[i] - truth[i];
        ss += d * d;
        sum += truth[i];
    }
    const auto n = static_cast<double>(truth.size());
    const double mean = sum / n;
    if (!(mean > 0.0))
        throw Error(ErrorCode::ZeroMeanTruth, "mean of truth is not positive");
    return std::sqrt(ss / n) / mean;
}

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2 || k > n)
        throw Error(ErrorCode::BadK, "k must satisfy 2 <= k <= n (k=" + std::to_string(k) + ", n=" +
                                         std::to_string(n) + ")");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(perm));

    std::vector<std::vector<std::size_t>> folds(k);
    const std::size_t base = n / k;
    const std::size_t extra = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                        perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
        std::sort(folds[f].begin(), folds[f].end());
        pos += size;
    }
    return folds;
}

HyperparameterSpace HyperparameterSpace::defaults(Family family) {
    HyperparameterSpace s;
    s.family = family;
    s.k = {3, 5, 10, 20};
    s.weighting = {Weighting::Uniform, Weighting::InverseDistance};
    s.n_trees = {50, 100, 200};
    s.max_depth = {3, 5, 8, std::nullopt};
    s.min_samples_leaf = {1, 3, 10};
    s.max_features_fraction = {0.33, 0.6, 1.0};
    s.n_rounds = {50, 100, 200};
    s.learning_rate = {0.05, 0.1, 0.3};
    s.subsample_fraction = {0.7, 1.0};
    return s;
}

void HyperparameterSpace::validate() const {
    if (n_samples < 1)
        throw Error(ErrorCode::InvalidConfig, "n_samples must be >= 1", std::nullopt, "n_samples");
    switch (family) {
    case Family::KNN:
        require_nonempty(k, "k");
        require_nonempty(weighting, "weighting");
        break;
    case Family::RandomForest:
        require_nonempty(n_trees, "n_trees");
        require_nonempty(max_depth, "max_depth");
        require_nonempty(min_samples_leaf, "min_samples_leaf");
        require_nonempty(max_features_fraction, "max_features_fraction");
        break;
    case Family::GradientBoost:
        require_nonempty(n_rounds, "n_rounds");
        require_nonempty(learning_rate, "learning_rate");
        require_nonempty(max_depth, "max_depth");
        require_nonempty(min_samples_leaf, "min_samples_leaf");
        require_nonempty(subsample_fraction, "subsample_fraction");
        break;
    }
    for (const auto& c : enumerate())
        c.validate();
}

std::size_t HyperparameterSpace::cardinality() const {
    switch (family) {
    case Family::KNN: return k.size() * weighting.size();
    case Family::RandomForest:
        return n_trees.size() * max_depth.size() * min_samples_leaf.size() * max_features_fraction.size();
    case Family::GradientBoost:
        return n_rounds.size() * learning_rate.size() * max_depth.size() * min_samples_leaf.size() *
               subsample_fraction.size();
    }
    return 0;
}

RegressorConfig HyperparameterSpace::draw(Rng& rng) const {
    RegressorConfig c;
    c.family = family;
    switch (family) {
    case Family::KNN:
        c.knn.k = pick(k, rng);
        c.knn.weighting = pick(weighting, rng);
        break;
    case Family::RandomForest:
        c.forest.n_trees = pick(n_trees, rng);
        c.forest.max_depth = pick(max_depth, rng);
        c.forest.min_samples_leaf = pick(min_samples_leaf, rng);
        c.forest.max_features_fraction = pick(max_features_fraction, rng);
        break;
    case Family::GradientBoost:
        c.boost.n_rounds = pick(n_rounds, rng);
        c.boost.learning_rate = pick(learning_rate, rng);
        c.boost.max_depth = pick(max_depth, rng);
        c.boost.min_samples_leaf = pick(min_samples_leaf, rng);
        c.boost.subsample_fraction = pick(subsample_fraction, rng);
        break;
    }
    return c;
}

std::vector<RegressorConfig> HyperparameterSpace::enumerate() const {
    std::vector<RegressorConfig> out;
    RegressorConfig c;
    c.family = family;
    switch (family) {
    case Family::KNN:
        for (auto kk : k)
            for (auto w : weighting) {
                c.knn = {kk, w};
                out.push_back(c);
            }
        break;
    case Family::RandomForest:
        for (auto t : n_trees)
            for (auto d : max_depth)
                for (auto leaf : min_samples_leaf)
                    for (auto f : max_features_fraction) {
                        c.forest = ForestParams{t, d, leaf, f, true};
                        out.push_back(c);
                    }
        break;
    case Family::GradientBoost:
        for (auto r : n_rounds)
            for (auto lr : learning_rate)
                for (auto d : max_depth)
                    for (auto leaf : min_samples_leaf)
                        for (auto sub : subsample_fraction) {
                            c.boost = BoostParams{r, lr, d, leaf, sub};
                            out.push_back(c);
                        }
        break;
    }
    return out;
}

Trial cross_validate(const RegressorConfig& config, const Matrix& x, std::span<const double> y,
                     const std::vector<std::vector<std::size_t>>& folds, const FitAudit& audit) {
    Trial trial;
    trial.config = config;
    try {
        const std::vector<double> y_all(y.begin(), y.end());
        std::vector<char> held_out(x.rows());
        for (const auto& fold : folds) {
            std::fill(held_out.begin(), held_out.end(), 0);
            for (auto i : fold)
                held_out[i] = 1;
            std::vector<std::size_t> train;
            train.reserve(x.rows() - fold.size());
            for (std::size_t i = 0; i < x.rows(); ++i)
                if (!held_out[i])
                    train.push_back(i);
            if (audit)
                audit(train);
            const auto model = fit(config, x.select_rows(train), select<double>(y_all, train));
            const auto pred = model.predict(x.select_rows(fold));
            trial.fold_nrmse.push_back(nrmse(pred, select<double>(y_all, fold)));
        }
        double sum = 0.0;
        for (double v : trial.fold_nrmse)
            sum += v;
        trial.cv_mean_nrmse = sum / static_cast<double>(trial.fold_nrmse.size());
        if (!std::isfinite(trial.cv_mean_nrmse))
            throw Error(ErrorCode::NonFiniteInput, "non-finite validation score");
    } catch (const Error& e) {
        trial.failed = true;
        trial.error = std::string(to_string(e.code())) + ": " + e.what();
        trial.cv_mean_nrmse = std::numeric_limits<double>::infinity();
    }
    return trial;
}

SearchResult randomized_search(const HyperparameterSpace& space, const Matrix& x, std::span<const double> y,
                               std::size_t k, std::uint64_t seed, const SearchOptions& options) {
    space.validate();
    if (x.rows() != y.size())
        throw Error(ErrorCode::ShapeMismatch, "x and y row counts differ");
    const auto folds = kfold_indices(x.rows(), k, derive_seed(seed, kFoldStream));

    std::vector<RegressorConfig> configs;
    Rng rng(derive_seed(seed, kDrawStream));
    for (std::size_t s = 0; s < space.n_samples; ++s) {
        auto c = space.draw(rng);
        if (std::none_of(configs.begin(), configs.end(), [&](const auto& seen) { return strip_seed(seen) == c; }))
            configs.push_back(c);
    }
    for (std::size_t i = 0; i < configs.size(); ++i)
        configs[i].seed = seed ^ static_cast<std::uint64_t>(i);

    std::mutex audit_mutex;
    FitAudit audit;
    if (options.audit) {
        audit = [&](std::span<const std::size_t> rows) {
            std::lock_guard lock(audit_mutex);
            options.audit(rows);
        };
    }

    SearchResult result;
    result.trials.resize(configs.size());
    parallel_for(configs.size(), options.workers, [&](std::size_t i) {
        result.trials[i] = cross_validate(configs[i], x, y, folds, audit);
        result.trials[i].index = i;
    });

    const Trial* best = nullptr;
    for (const auto& t : result.trials)
        if (!t.failed && (!best || t.cv_mean_nrmse < best->cv_mean_nrmse))
            best = &t;
    if (!best)
        throw Error(ErrorCode::DegenerateInput, "every search trial failed; first error: " + result.trials.front().error);
    result.best = best->config;
    result.best_cv_nrmse = best->cv_mean_nrmse;
    return result;
}

ModelSpec ModelSpec::baseline(const BaselineSpec& spec) {
    return ModelSpec{spec, spec.name()};
}

ModelSpec ModelSpec::wrf_ml(const FeatureVariant& variant, Family family) {
    return ModelSpec{WrfMlSpec{variant, family}, variant.name() + "_" + std::string(to_string(family))};
}

HyperparameterSpace ExperimentProtocol::space_for(Family family) const {
    auto it = spaces.find(family);
    auto space = it == spaces.end() ? HyperparameterSpace::defaults(family) : it->second;
    space.family = family;
    space.n_samples = n_samples;
    return space;
}

const EvaluationEntry* EvaluationReport::find(std::string_view label) const {
    for (const auto& e : entries)
        if (e.label == label)
            return &e;
    return nullptr;
}

std::string dataset_fingerprint(const AlignedDataset& ds) {
    std::string buf;
    auto put_vars = [&](const WeatherVars& v) {
        for (double d : v.as_array()) {
            buf += text::format_double(d);
            buf += ',';
        }
    };
    buf += ds.target_location;
    for (const auto& n : ds.neighbor_locations)
        buf += "|" + n;
    for (auto c : ds.channel_set)
        buf += to_string(c);
    buf += '\n';
    std::uint64_t h = text::fnv1a(buf);
    for (const auto& row : ds.rows) {
        buf.clear();
        buf += to_string(row.time);
        buf += ':';
        put_vars(row.met);
        for (const auto& v : row.nwp)
            put_vars(v);
        h = text::fnv1a(buf, h);
    }
    for (const auto& [t, v] : ds.met_history) {
        buf.clear();
        buf += to_string(t);
        put_vars(v);
        h = text::fnv1a(buf, h);
    }
    return text::hex_digest(h);
}

std::string group_of(const ModelSpec& spec) {
    if (spec.is_baseline())
        return "baselines";
    switch (std::get<WrfMlSpec>(spec.kind).variant.kind) {
    case VariantKind::Base: return "base";
    case VariantKind::Neighbor: return "neighbor";
    case VariantKind::Lag1:
    case VariantKind::Lag24: return "lag";
    case VariantKind::Ensemble:
    case VariantKind::EnsembleLag24: return "ensemble";
    }
    return "other";
}

EvaluationReport evaluate_experiment(const AlignedDataset& ds, const std::vector<ModelSpec>& specs,
                                     const ExperimentProtocol& protocol, const ExperimentAudit& audit) {
    if (specs.empty())
        throw Error(ErrorCode::InvalidConfig, "no model specs requested", std::nullopt, "specs");
    std::set<std::string> labels;
    for (const auto& s : specs)
        if (!labels.insert(s.label).second)
            throw Error(ErrorCode::DuplicateLabel, "duplicate spec label '" + s.label + "'", std::nullopt, "specs");
    if (ds.rows.empty())
        throw Error(ErrorCode::TooFewRows, "dataset is empty");

    const auto split = split_indices(ds.rows.size(), protocol.test_fraction, protocol.seed, protocol.split_mode);
    std::set<HourStamp> test_times;
    for (auto i : split.test)
        test_times.insert(ds.rows[i].time);

    EvaluationReport report;
    report.metadata.location = ds.target_location;
    report.metadata.dataset_fingerprint = dataset_fingerprint(ds);
    report.metadata.config_fingerprint = config_fingerprint(protocol, specs);
    report.metadata.toolkit_version = std::string(kToolkitVersion);
    report.metadata.n_rows = ds.rows.size();
    report.metadata.n_test_rows = split.test.size();
    report.metadata.dropped_rows = ds.dropped;

    for (const auto& spec : specs) {
        try {
            EvaluationEntry entry;
            entry.location = ds.target_location;
            entry.label = spec.label;
            entry.group = group_of(spec);
            entry.seed = protocol.seed;

            if (const auto* base = std::get_if<BaselineSpec>(&spec.kind)) {
                const auto bp = predict_baseline(ds, *base);
                std::vector<double> pred, truth;
                for (std::size_t i = 0; i < bp.row_times.size(); ++i) {
                    if (test_times.count(bp.row_times[i])) {
                        pred.push_back(bp.predictions[i]);
                        truth.push_back(bp.truth[i]);
                    }
                }
                if (truth.empty())
                    throw Error(ErrorCode::EmptyResult, "no test rows available for " + spec.label);
                entry.test_nrmse = nrmse(pred, truth);
                entry.n_test = truth.size();
            } else {
                const auto& ml = std::get<WrfMlSpec>(spec.kind);
                const auto fm = build_features(ds, ml.variant);
                std::vector<std::size_t> train, test;
                for (std::size_t i = 0; i < fm.rows(); ++i)
                    (test_times.count(fm.row_times[i]) ? test : train).push_back(i);
                if (train.empty() || test.empty())
                    throw Error(ErrorCode::EmptyResult, "split left no train or test rows for " + spec.label);

                const Matrix x_train = fm.x.select_rows(train);
                const auto y_train = select<double>(fm.y, train);
                const auto times_train = select<HourStamp>(fm.row_times, train);

                SearchOptions options;
                options.workers = protocol.workers;
                if (audit) {
                    options.audit = [&](std::span<const std::size_t> rows) {
                        audit(spec.label, select<HourStamp>(times_train, rows));
                    };
                }
                const auto search = randomized_search(protocol.space_for(ml.family), x_train, y_train,
                                                      protocol.folds, protocol.seed, options);
                if (audit)
                    audit(spec.label, times_train);
                const auto model = fit(search.best, x_train, y_train, protocol.workers);
                const auto pred = model.predict(fm.x.select_rows(test));
                entry.test_nrmse = nrmse(pred, select<double>(fm.y, test));
                entry.cv_mean_nrmse = search.best_cv_nrmse;
                entry.hyperparameters = search.best;
                entry.n_train = train.size();
                entry.n_test = test.size();
                entry.n_trials = search.trials.size();
            }
            report.entries.push_back(std::move(entry));
        } catch (const Error& e) {
            report.failures.push_back({spec.label, std::string(to_string(e.code())), e.what()});
        }
    }
    return report;
}

} // namespace wrfml
