#include "wrfml/regressor_io.hpp"

#include "wrfml/error.hpp"

namespace wrfml {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json depth_to_json(const std::optional<int>& d) {
    return d ? json(*d) : json(nullptr);
}

std::optional<int> depth_from_json(const json& j) {
    if (j.is_null())
        return std::nullopt;
    return j.get<int>();
}

ordered_json tree_to_json(const RegressionTree& tree) {
    ordered_json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
                 value = json::array();
    for (const auto& n : tree.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
    }
    ordered_json j;
    j["feature"] = feature;
    j["threshold"] = threshold;
    j["left"] = left;
    j["right"] = right;
    j["value"] = value;
    return j;
}

RegressionTree tree_from_json(const json& j, std::size_t n_cols) {
    const auto& feature = j.at("feature");
    const auto n = feature.size();
    RegressionTree tree;
    tree.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& node = tree.nodes[i];
        node.feature = feature[i].get<int>();
        node.threshold = j.at("threshold").at(i).get<double>();
        node.left = j.at("left").at(i).get<int>();
        node.right = j.at("right").at(i).get<int>();
        node.value = j.at("value").at(i).get<double>();
        if (!node.is_leaf()) {
            const bool ok = static_cast<std::size_t>(node.feature) < n_cols && node.left > static_cast<int>(i) &&
                            node.right > static_cast<int>(i) && static_cast<std::size_t>(node.left) < n &&
                            static_cast<std::size_t>(node.right) < n;
            if (!ok)
                throw Error(ErrorCode::InvalidConfig, "malformed tree node " + std::to_string(i));
        }
    }
    if (n == 0)
        throw Error(ErrorCode::InvalidConfig, "empty tree");
    return tree;
}

std::vector<RegressionTree> trees_from_json(const json& j, std::size_t n_cols) {
    std::vector<RegressionTree> out;
    for (const auto& t : j)
        out.push_back(tree_from_json(t, n_cols));
    return out;
}

} // namespace

ordered_json config_to_json(const RegressorConfig& c) {
    ordered_json j;
    j["family"] = std::string(to_string(c.family));
    switch (c.family) {
    case Family::KNN:
        j["k"] = c.knn.k;
        j["weighting"] = std::string(to_string(c.knn.weighting));
        break;
    case Family::RandomForest:
        j["n_trees"] = c.forest.n_trees;
        j["max_depth"] = depth_to_json(c.forest.max_depth);
        j["min_samples_leaf"] = c.forest.min_samples_leaf;
        j["max_features_fraction"] = c.forest.max_features_fraction;
        if (!c.forest.bootstrap)
            j["bootstrap"] = false;
        break;
    case Family::GradientBoost:
        j["n_rounds"] = c.boost.n_rounds;
        j["learning_rate"] = c.boost.learning_rate;
        j["max_depth"] = depth_to_json(c.boost.max_depth);
        j["min_samples_leaf"] = c.boost.min_samples_leaf;
        j["subsample_fraction"] = c.boost.subsample_fraction;
        break;
    }
    j["seed"] = c.seed;
    return j;
}

RegressorConfig config_from_json(const json& j) {
    RegressorConfig c;
    const auto family_name = j.at("family").get<std::string>();
    auto family = parse_family(family_name);
    if (!family)
        throw Error(ErrorCode::InvalidConfig, "unknown family '" + family_name + "'", std::nullopt, "family");
    c.family = *family;
    switch (c.family) {
    case Family::KNN:
        c.knn.k = j.value("k", c.knn.k);
        if (j.contains("weighting")) {
            auto w = parse_weighting(j.at("weighting").get<std::string>());
            if (!w)
                throw Error(ErrorCode::InvalidConfig, "unknown weighting", std::nullopt, "weighting");
            c.knn.weighting = *w;
        }
        break;
    case Family::RandomForest:
        c.forest.n_trees = j.value("n_trees", c.forest.n_trees);
        if (j.contains("max_depth"))
            c.forest.max_depth = depth_from_json(j.at("max_depth"));
        c.forest.min_samples_leaf = j.value("min_samples_leaf", c.forest.min_samples_leaf);
        c.forest.max_features_fraction = j.value("max_features_fraction", c.forest.max_features_fraction);
        c.forest.bootstrap = j.value("bootstrap", c.forest.bootstrap);
        break;
    case Family::GradientBoost:
        c.boost.n_rounds = j.value("n_rounds", c.boost.n_rounds);
        c.boost.learning_rate = j.value("learning_rate", c.boost.learning_rate);
        if (j.contains("max_depth"))
            c.boost.max_depth = depth_from_json(j.at("max_depth"));
        c.boost.min_samples_leaf = j.value("min_samples_leaf", c.boost.min_samples_leaf);
        c.boost.subsample_fraction = j.value("subsample_fraction", c.boost.subsample_fraction);
        break;
    }
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

ordered_json regressor_to_json(const TrainedRegressor& model) {
    ordered_json j;
    j["format"] = "wrfml.regressor";
    j["version"] = kRegressorFormatVersion;
    j["config"] = config_to_json(model.config());
    j["n_rows"] = model.n_rows();
    j["n_cols"] = model.n_cols();
    if (const auto* knn = std::get_if<KnnModel>(&model.state())) {
        ordered_json points = json::array();
        for (std::size_t r = 0; r < knn->points.rows(); ++r) {
            const auto row = knn->points.row(r);
            points.push_back(std::vector<double>(row.begin(), row.end()));
        }
        j["knn"] = {{"mean", knn->mean}, {"scale", knn->scale}, {"points", points}, {"targets", knn->targets}};
    } else if (const auto* forest = std::get_if<ForestModel>(&model.state())) {
        ordered_json trees = json::array();
        for (const auto& t : forest->trees)
            trees.push_back(tree_to_json(t));
        j["forest"] = {{"trees", trees}};
    } else {
        const auto& boost = std::get<BoostModel>(model.state());
        ordered_json stages = json::array();
        for (const auto& t : boost.stages)
            stages.push_back(tree_to_json(t));
        ordered_json b;
        b["initial"] = boost.initial;
        b["learning_rate"] = boost.learning_rate;
        b["stages"] = stages;
        b["loss_trace"] = boost.loss_trace;
        j["boost"] = b;
    }
    return j;
}

TrainedRegressor regressor_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != "wrfml.regressor")
            throw Error(ErrorCode::InvalidConfig, "not a wrfml.regressor document", std::nullopt, "format");
        if (j.at("version").get<int>() != kRegressorFormatVersion)
            throw Error(ErrorCode::InvalidConfig, "unsupported regressor format version", std::nullopt, "version");
        const auto config = config_from_json(j.at("config"));
        const auto n_rows = j.at("n_rows").get<std::size_t>();
        const auto n_cols = j.at("n_cols").get<std::size_t>();
        ModelState state;
        switch (config.family) {
        case Family::KNN: {
            const auto& k = j.at("knn");
            KnnModel m;
            m.params = config.knn;
            m.mean = k.at("mean").get<std::vector<double>>();
            m.scale = k.at("scale").get<std::vector<double>>();
            m.targets = k.at("targets").get<std::vector<double>>();
            const auto& points = k.at("points");
            m.points = Matrix(points.size(), n_cols);
            for (std::size_t r = 0; r < points.size(); ++r) {
                if (points[r].size() != n_cols)
                    throw Error(ErrorCode::InvalidConfig, "KNN point width mismatch");
                for (std::size_t c = 0; c < n_cols; ++c)
                    m.points(r, c) = points[r][c].get<double>();
            }
            if (m.mean.size() != n_cols || m.scale.size() != n_cols || m.targets.size() != points.size() ||
                m.targets.empty())
                throw Error(ErrorCode::InvalidConfig, "inconsistent KNN state");
            state = std::move(m);
            break;
        }
        case Family::RandomForest: {
            ForestModel m;
            m.trees = trees_from_json(j.at("forest").at("trees"), n_cols);
            if (m.trees.empty())
                throw Error(ErrorCode::InvalidConfig, "forest has no trees");
            state = std::move(m);
            break;
        }
        case Family::GradientBoost: {
            const auto& b = j.at("boost");
            BoostModel m;
            m.initial = b.at("initial").get<double>();
            m.learning_rate = b.at("learning_rate").get<double>();
            m.stages = trees_from_json(b.at("stages"), n_cols);
            m.loss_trace = b.at("loss_trace").get<std::vector<double>>();
            state = std::move(m);
            break;
        }
        }
        return TrainedRegressor(config, n_rows, n_cols, std::move(state));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed regressor document: ") + e.what());
    }
}

} // namespace wrfml
