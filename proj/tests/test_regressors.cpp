#include "helpers.hpp"
#include "oracles.hpp"

#include "wrfml/regressor_io.hpp"
#include "wrfml/regressors.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace wrfml;

namespace {

struct Instance {
    Matrix x;
    std::vector<double> y;
};

/// Random regression instance; `grid` > 0 snaps features to a coarse grid so
/// ties and duplicate distances actually occur.
Instance random_instance(Rng& rng, std::size_t n, std::size_t p, int grid = 0) {
    Instance inst{Matrix(n, p), std::vector<double>(n)};
    for (std::size_t r = 0; r < n; ++r) {
        double signal = 0;
        for (std::size_t c = 0; c < p; ++c) {
            double v = rng.normal() * (1.0 + 10.0 * static_cast<double>(c));
            if (grid > 0)
                v = std::round(v / 4.0 * grid) / grid;
            inst.x(r, c) = v;
            signal += std::sin(v) * static_cast<double>(c + 1);
        }
        inst.y[r] = 100.0 + 20.0 * signal + rng.normal() * 5.0;
    }
    return inst;
}

bool unique_rows(const Matrix& x) {
    std::set<std::vector<double>> seen;
    for (std::size_t r = 0; r < x.rows(); ++r)
        if (!seen.insert({x.row(r).begin(), x.row(r).end()}).second)
            return false;
    return true;
}

RegressorConfig knn_config(std::size_t k, Weighting w = Weighting::Uniform) {
    RegressorConfig c;
    c.family = Family::KNN;
    c.knn = {k, w};
    return c;
}

RegressorConfig single_tree() {
    RegressorConfig c;
    c.family = Family::RandomForest;
    c.forest.n_trees = 1;
    c.forest.bootstrap = false;
    return c;
}

} // namespace

TEST_CASE("KNN matches the brute-force oracle exactly") {
    Rng rng(101);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 5 + rng.below(196);
        const std::size_t p = 1 + rng.below(10);
        auto inst = random_instance(rng, n, p, trial % 3 == 0 ? 2 : 0);
        if (trial % 7 == 0)
            for (std::size_t r = 0; r < n; ++r)
                inst.x(r, 0) = 3.0; // zero-variance column
        const auto query = random_instance(rng, 25, p, trial % 3 == 0 ? 2 : 0).x;
        for (std::size_t k : {1, 3, 7}) {
            for (auto w : {Weighting::Uniform, Weighting::InverseDistance}) {
                const auto model = fit(knn_config(k, w), inst.x, inst.y);
                const auto got = model.predict(query);
                const auto want = oracle::knn(inst.x, inst.y, query, k, w);
                CHECK(got == want); // bitwise
                const auto train_got = model.predict(inst.x);
                CHECK(train_got == oracle::knn(inst.x, inst.y, inst.x, k, w));
            }
        }
    }
}

TEST_CASE("KNN examples") {
    SUBCASE("k=1 on unique training rows reproduces y") {
        Rng rng(4);
        const auto inst = random_instance(rng, 80, 4);
        REQUIRE(unique_rows(inst.x));
        CHECK(fit(knn_config(1), inst.x, inst.y).predict(inst.x) == inst.y);
    }
    SUBCASE("k=3 uniform averages targets") {
        Matrix x(4, 1);
        x(0, 0) = 0;
        x(1, 0) = 1;
        x(2, 0) = 2;
        x(3, 0) = 10;
        const std::vector<double> y{100, 200, 300, 900};
        Matrix q(1, 1);
        q(0, 0) = 1;
        CHECK(fit(knn_config(3), x, y).predict(q)[0] == 200);
    }
    SUBCASE("k=n gives the training mean everywhere") {
        Rng rng(5);
        const auto inst = random_instance(rng, 30, 3);
        const auto model = fit(knn_config(30), inst.x, inst.y);
        const double mean = oracle::knn(inst.x, inst.y, inst.x, 30, Weighting::Uniform)[0];
        for (double v : model.predict(random_instance(rng, 10, 3).x))
            CHECK(v == doctest::Approx(mean).epsilon(1e-12));
    }
    SUBCASE("k larger than n is clamped") {
        Rng rng(6);
        const auto inst = random_instance(rng, 8, 2);
        CHECK(fit(knn_config(20), inst.x, inst.y).predict(inst.x) == fit(knn_config(8), inst.x, inst.y).predict(inst.x));
    }
    SUBCASE("distance ties go to the lower row index") {
        // Symmetric about 0 so both distances are bitwise equal after scaling.
        Matrix x(4, 1);
        x(0, 0) = 1;
        x(1, 0) = -1;
        x(2, 0) = 3;
        x(3, 0) = -3;
        const std::vector<double> y{10, 20, 30, 40};
        Matrix q(1, 1);
        q(0, 0) = 0;
        CHECK(fit(knn_config(1), x, y).predict(q)[0] == 10);
    }
    SUBCASE("inverse distance with an exact match averages the matches") {
        Matrix x(3, 1);
        x(0, 0) = 1;
        x(1, 0) = 1;
        x(2, 0) = 4;
        const std::vector<double> y{10, 30, 1000};
        Matrix q(1, 1);
        q(0, 0) = 1;
        CHECK(fit(knn_config(3, Weighting::InverseDistance), x, y).predict(q)[0] == 20);
    }
}

TEST_CASE("single fully grown tree memorizes unique rows") {
    Rng rng(202);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = random_instance(rng, 20 + rng.below(150), 1 + rng.below(8), trial % 2 ? 3 : 0);
        if (!unique_rows(inst.x))
            continue;
        const auto model = fit(single_tree(), inst.x, inst.y);
        CHECK(model.predict(inst.x) == inst.y);
    }
}

TEST_CASE("tree structure invariants") {
    Rng rng(303);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = random_instance(rng, 50 + rng.below(100), 1 + rng.below(6));
        for (int depth : {0, 1, 3, 6}) {
            RegressorConfig c;
            c.family = Family::RandomForest;
            c.forest.n_trees = 3;
            c.forest.max_depth = depth;
            c.forest.min_samples_leaf = 1 + rng.below(5);
            c.forest.max_features_fraction = 0.5;
            c.seed = trial;
            const auto model = fit(c, inst.x, inst.y);
            for (const auto& t : std::get<ForestModel>(model.state()).trees) {
                const int d = oracle::checked_depth(t);
                CHECK(d >= 0);
                CHECK(d <= depth);
                CHECK(static_cast<std::size_t>(d) == t.depth());
            }
        }
    }
}

TEST_CASE("min_samples_leaf is respected on the training sample") {
    Rng rng(11);
    const auto inst = random_instance(rng, 120, 3);
    auto c = single_tree();
    c.forest.min_samples_leaf = 7;
    const auto model = fit(c, inst.x, inst.y);
    const auto& tree = std::get<ForestModel>(model.state()).trees[0];
    std::map<double, int> leaf_hits;
    std::vector<int> hits(tree.nodes.size(), 0);
    for (std::size_t r = 0; r < inst.x.rows(); ++r) {
        std::size_t i = 0;
        while (!tree.nodes[i].is_leaf())
            i = static_cast<std::size_t>(inst.x(r, static_cast<std::size_t>(tree.nodes[i].feature)) <=
                                                 tree.nodes[i].threshold
                                             ? tree.nodes[i].left
                                             : tree.nodes[i].right);
        ++hits[i];
    }
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        if (tree.nodes[i].is_leaf())
            CHECK(hits[i] >= 7);
}

TEST_CASE("forest and booster predictions equal a structural re-evaluation") {
    Rng rng(404);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = random_instance(rng, 50, 1 + rng.below(6));
        const auto query = random_instance(rng, 30, inst.x.cols()).x;
        RegressorConfig rf;
        rf.family = Family::RandomForest;
        rf.forest.n_trees = 7;
        rf.forest.max_features_fraction = 0.6;
        rf.seed = trial;
        RegressorConfig gb;
        gb.boost.n_rounds = 15;
        gb.boost.subsample_fraction = 0.7;
        gb.seed = trial;
        for (const auto& c : {rf, gb}) {
            const auto model = fit(c, inst.x, inst.y);
            CHECK(model.predict(query) == oracle::reevaluate(model, query));
        }
    }
}

TEST_CASE("forest prediction is the mean over trees") {
    Matrix x(2, 1);
    x(0, 0) = 0;
    x(1, 0) = 1;
    ForestModel forest;
    forest.trees.push_back(RegressionTree{{TreeNode{-1, 0, -1, -1, 400}}});
    forest.trees.push_back(RegressionTree{{TreeNode{-1, 0, -1, -1, 420}}});
    RegressorConfig c;
    c.family = Family::RandomForest;
    const TrainedRegressor model(c, 2, 1, forest);
    CHECK(model.predict(x) == std::vector<double>{410, 410});
}

TEST_CASE("boosting loss trace") {
    SUBCASE("non-increasing with subsample=1 and matches a recomputation") {
        Rng rng(505);
        for (int trial = 0; trial < 20; ++trial) {
            const auto inst = random_instance(rng, 30 + rng.below(150), 1 + rng.below(8), trial % 4 == 0 ? 2 : 0);
            RegressorConfig c;
            c.boost.n_rounds = 10 + rng.below(40);
            c.boost.learning_rate = std::vector<double>{0.05, 0.1, 0.3, 1.0}[rng.below(4)];
            c.boost.max_depth = static_cast<int>(1 + rng.below(5));
            c.boost.min_samples_leaf = 1 + rng.below(4);
            c.seed = trial;
            const auto model = fit(c, inst.x, inst.y);
            const auto& trace = boosting_loss_trace(model);
            REQUIRE(trace.size() == c.boost.n_rounds + 1);
            for (std::size_t i = 1; i < trace.size(); ++i)
                CHECK(trace[i] <= trace[i - 1]);
            const auto again = oracle::boost_trace(model, inst.x, inst.y);
            for (std::size_t i = 0; i < trace.size(); ++i)
                CHECK(trace[i] == doctest::Approx(again[i]).epsilon(1e-12));
        }
    }
    SUBCASE("n_rounds = 0 gives the mean predictor's MSE") {
        Rng rng(6);
        const auto inst = random_instance(rng, 40, 2);
        RegressorConfig c;
        c.boost.n_rounds = 0;
        const auto model = fit(c, inst.x, inst.y);
        const auto& trace = boosting_loss_trace(model);
        REQUIRE(trace.size() == 1);
        const double mean = stable_mean(inst.y);
        double ss = 0;
        for (double v : inst.y)
            ss += (v - mean) * (v - mean);
        CHECK(trace[0] == doctest::Approx(ss / 40).epsilon(1e-12));
    }
    SUBCASE("constant y stays at zero") {
        Rng rng(7);
        auto inst = random_instance(rng, 40, 3);
        std::fill(inst.y.begin(), inst.y.end(), 523.25);
        RegressorConfig c;
        c.boost.n_rounds = 12;
        const auto model = fit(c, inst.x, inst.y);
        for (double v : boosting_loss_trace(model))
            CHECK(v == 0.0);
        for (double v : model.predict(inst.x))
            CHECK(v == 523.25);
    }
    SUBCASE("wrong family") {
        Rng rng(8);
        const auto inst = random_instance(rng, 10, 2);
        CHECK_ERROR_CODE(boosting_loss_trace(fit(knn_config(3), inst.x, inst.y)), ErrorCode::WrongFamily);
    }
}

TEST_CASE("one round of a single-leaf booster with learning_rate 1 is the mean") {
    Rng rng(9);
    const auto inst = random_instance(rng, 33, 3);
    RegressorConfig c;
    c.boost.n_rounds = 1;
    c.boost.learning_rate = 1.0;
    c.boost.max_depth = 0;
    const auto model = fit(c, inst.x, inst.y);
    const double mean = stable_mean(inst.y);
    for (double v : model.predict(random_instance(rng, 10, 3).x))
        CHECK(v == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("tree predictions are invariant to monotone column transforms on training points") {
    Rng rng(606);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = random_instance(rng, 80, 4);
        auto warped = inst.x;
        const std::size_t col = rng.below(4);
        for (std::size_t r = 0; r < warped.rows(); ++r)
            warped(r, col) = std::exp(inst.x(r, col) / 20.0) * 3.0 + 7.0;
        RegressorConfig rf;
        rf.family = Family::RandomForest;
        rf.forest.n_trees = 5;
        rf.forest.max_depth = 4;
        rf.forest.max_features_fraction = 0.5;
        // Out-of-bag rows can fall between adjacent sample values, where
        // midpoints differ under the warp; grow on every row instead.
        rf.forest.bootstrap = false;
        rf.seed = trial;
        RegressorConfig gb;
        gb.boost.n_rounds = 20;
        gb.seed = trial;
        for (const auto& c : {rf, gb}) {
            const auto a = fit(c, inst.x, inst.y).predict(inst.x);
            const auto b = fit(c, warped, inst.y).predict(warped);
            CHECK_MESSAGE(a == b, "trial " << trial << " col " << col << " family " << to_string(c.family));
        }
    }
}

TEST_CASE("fits are deterministic and independent of worker count") {
    Rng rng(707);
    const auto inst = random_instance(rng, 150, 5);
    RegressorConfig rf;
    rf.family = Family::RandomForest;
    rf.forest.n_trees = 16;
    rf.forest.max_features_fraction = 0.6;
    rf.seed = 99;
    const auto one = fit(rf, inst.x, inst.y, 1).predict(inst.x);
    CHECK(fit(rf, inst.x, inst.y, 1).predict(inst.x) == one);
    CHECK(fit(rf, inst.x, inst.y, 4).predict(inst.x) == one);
    CHECK(fit(rf, inst.x, inst.y, 0).predict(inst.x) == one);
    rf.seed = 100;
    CHECK(fit(rf, inst.x, inst.y, 1).predict(inst.x) != one);
}

TEST_CASE("fit and predict errors") {
    Rng rng(808);
    const auto inst = random_instance(rng, 10, 3);
    CHECK_ERROR_CODE(fit(knn_config(3), Matrix(1, 3), std::vector<double>{1.0}), ErrorCode::DegenerateInput);
    CHECK_ERROR_CODE(fit(knn_config(3), Matrix(0, 3), std::vector<double>{}), ErrorCode::DegenerateInput);
    auto bad = inst.x;
    bad(2, 1) = std::nan("");
    CHECK_ERROR_CODE(fit(knn_config(3), bad, inst.y), ErrorCode::NonFiniteInput);
    auto bad_y = inst.y;
    bad_y[0] = INFINITY;
    CHECK_ERROR_CODE(fit(single_tree(), inst.x, bad_y), ErrorCode::NonFiniteInput);
    CHECK_ERROR_CODE(fit(knn_config(3), inst.x, std::vector<double>(9, 1.0)), ErrorCode::ShapeMismatch);
    const auto model = fit(single_tree(), inst.x, inst.y);
    CHECK_ERROR_CODE(model.predict(Matrix(2, 4)), ErrorCode::ShapeMismatch);
    Matrix nan_query(1, 3);
    nan_query(0, 0) = std::nan("");
    CHECK_ERROR_CODE(model.predict(nan_query), ErrorCode::NonFiniteInput);

    auto c = knn_config(0);
    CHECK_ERROR_CODE(fit(c, inst.x, inst.y), ErrorCode::InvalidConfig);
    RegressorConfig gb;
    gb.boost.learning_rate = 1.5;
    CHECK_ERROR_CODE(fit(gb, inst.x, inst.y), ErrorCode::InvalidConfig);
    gb.boost.learning_rate = 0.1;
    gb.boost.subsample_fraction = 0;
    CHECK_ERROR_CODE(fit(gb, inst.x, inst.y), ErrorCode::InvalidConfig);
    RegressorConfig rf = single_tree();
    rf.forest.max_features_fraction = 1.2;
    try {
        fit(rf, inst.x, inst.y);
        FAIL("expected InvalidConfig");
    } catch (const Error& e) {
        CHECK(e.field() == "max_features_fraction");
    }
}

TEST_CASE("constant y fits a constant predictor for every family") {
    Rng rng(909);
    auto inst = random_instance(rng, 25, 3);
    std::fill(inst.y.begin(), inst.y.end(), 0.1);
    RegressorConfig rf;
    rf.family = Family::RandomForest;
    rf.forest.n_trees = 4;
    for (const auto& c : {knn_config(4), rf, RegressorConfig{}})
        for (double v : fit(c, inst.x, inst.y).predict(random_instance(rng, 5, 3).x))
            CHECK(v == 0.1);
}

TEST_CASE("predictions are finite on finite input") {
    Rng rng(1001);
    const auto inst = random_instance(rng, 60, 4);
    Matrix far(3, 4, 1e200);
    far(1, 2) = -1e200;
    RegressorConfig rf;
    rf.family = Family::RandomForest;
    rf.forest.n_trees = 5;
    for (const auto& c : {knn_config(5, Weighting::InverseDistance), rf, RegressorConfig{}})
        for (double v : fit(c, inst.x, inst.y).predict(far))
            CHECK(std::isfinite(v));
}

TEST_CASE("regressor JSON round trip is prediction-identical") {
    Rng rng(1102);
    const auto inst = random_instance(rng, 70, 4);
    const auto query = random_instance(rng, 20, 4).x;
    RegressorConfig rf;
    rf.family = Family::RandomForest;
    rf.forest.n_trees = 6;
    rf.forest.max_depth = std::nullopt;
    rf.seed = 3;
    RegressorConfig gb;
    gb.boost.n_rounds = 25;
    gb.boost.max_depth = 4;
    for (const auto& c : {knn_config(4, Weighting::InverseDistance), rf, gb}) {
        const auto model = fit(c, inst.x, inst.y);
        const auto doc = regressor_to_json(model);
        CHECK(doc["format"] == "wrfml.regressor");
        const auto back = regressor_from_json(nlohmann::json::parse(doc.dump()));
        CHECK(back.config() == model.config());
        CHECK(back.predict(query) == model.predict(query));
        if (c.family == Family::GradientBoost)
            CHECK(boosting_loss_trace(back) == boosting_loss_trace(model));
    }
}

TEST_CASE("config JSON round trip") {
    RegressorConfig rf;
    rf.family = Family::RandomForest;
    rf.forest = ForestParams{50, std::nullopt, 3, 0.33, true};
    rf.seed = 17;
    CHECK(config_from_json(nlohmann::json::parse(config_to_json(rf).dump())) == rf);
    RegressorConfig gb;
    gb.boost = BoostParams{200, 0.05, 8, 10, 0.7};
    CHECK(config_from_json(nlohmann::json::parse(config_to_json(gb).dump())) == gb);
    CHECK(config_to_json(rf)["max_depth"].is_null());
}
