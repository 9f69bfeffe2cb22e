#include "wrfml/report.hpp"

#include "wrfml/error.hpp"
#include "wrfml/regressor_io.hpp"
#include "wrfml/text.hpp"

namespace wrfml {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json depth_json(const std::optional<int>& d) {
    return d ? ordered_json(*d) : ordered_json(nullptr);
}

template <typename T>
std::vector<T> list_or(const json& j, const char* key, const std::vector<T>& fallback) {
    if (!j.contains(key))
        return fallback;
    return j.at(key).get<std::vector<T>>();
}

} // namespace

ordered_json space_to_json(const HyperparameterSpace& s) {
    ordered_json j;
    j["family"] = std::string(to_string(s.family));
    switch (s.family) {
    case Family::KNN: {
        j["k"] = s.k;
        ordered_json w = json::array();
        for (auto v : s.weighting)
            w.push_back(std::string(to_string(v)));
        j["weighting"] = w;
        break;
    }
    case Family::RandomForest: {
        j["n_trees"] = s.n_trees;
        ordered_json d = json::array();
        for (const auto& v : s.max_depth)
            d.push_back(depth_json(v));
        j["max_depth"] = d;
        j["min_samples_leaf"] = s.min_samples_leaf;
        j["max_features_fraction"] = s.max_features_fraction;
        break;
    }
    case Family::GradientBoost: {
        j["n_rounds"] = s.n_rounds;
        j["learning_rate"] = s.learning_rate;
        ordered_json d = json::array();
        for (const auto& v : s.max_depth)
            d.push_back(depth_json(v));
        j["max_depth"] = d;
        j["min_samples_leaf"] = s.min_samples_leaf;
        j["subsample_fraction"] = s.subsample_fraction;
        break;
    }
    }
    j["n_samples"] = s.n_samples;
    return j;
}

HyperparameterSpace space_from_json(const json& j, Family family) {
    auto s = HyperparameterSpace::defaults(family);
    try {
        s.k = list_or(j, "k", s.k);
        if (j.contains("weighting")) {
            s.weighting.clear();
            for (const auto& w : j.at("weighting")) {
                auto parsed = parse_weighting(w.get<std::string>());
                if (!parsed)
                    throw Error(ErrorCode::InvalidConfig, "unknown weighting", std::nullopt, "weighting");
                s.weighting.push_back(*parsed);
            }
        }
        s.n_trees = list_or(j, "n_trees", s.n_trees);
        if (j.contains("max_depth")) {
            s.max_depth.clear();
            for (const auto& d : j.at("max_depth"))
                s.max_depth.push_back(d.is_null() ? std::nullopt : std::optional<int>(d.get<int>()));
        }
        s.min_samples_leaf = list_or(j, "min_samples_leaf", s.min_samples_leaf);
        s.max_features_fraction = list_or(j, "max_features_fraction", s.max_features_fraction);
        s.n_rounds = list_or(j, "n_rounds", s.n_rounds);
        s.learning_rate = list_or(j, "learning_rate", s.learning_rate);
        s.subsample_fraction = list_or(j, "subsample_fraction", s.subsample_fraction);
        s.n_samples = j.value("n_samples", s.n_samples);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("spaces.") + std::string(to_string(family)) + ": " + e.what(),
                    std::nullopt, "spaces");
    }
    s.validate();
    return s;
}

ordered_json protocol_to_json(const ExperimentProtocol& p) {
    ordered_json j;
    j["test_fraction"] = p.test_fraction;
    j["split_mode"] = std::string(to_string(p.split_mode));
    j["k"] = p.folds;
    j["n_samples"] = p.n_samples;
    j["seed"] = p.seed;
    ordered_json spaces = ordered_json::object();
    for (auto f : {Family::KNN, Family::RandomForest, Family::GradientBoost})
        spaces[std::string(to_string(f))] = space_to_json(p.space_for(f));
    j["spaces"] = spaces;
    return j;
}

ordered_json spec_to_json(const ModelSpec& spec) {
    ordered_json j;
    j["label"] = spec.label;
    if (const auto* b = std::get_if<BaselineSpec>(&spec.kind)) {
        if (b->kind == BaselineSpec::Kind::RawWrf) {
            j["baseline"] = "RawWrf";
            j["channel"] = std::string(to_string(b->channel));
        } else {
            j["baseline"] = "Persistence";
            j["lag_hours"] = b->lag_hours;
        }
    } else {
        const auto& ml = std::get<WrfMlSpec>(spec.kind);
        j["variant"] = std::string(to_string(ml.variant.kind));
        if (ml.variant.channel && ml.variant.needs_channel())
            j["channel"] = std::string(to_string(*ml.variant.channel));
        j["family"] = std::string(to_string(ml.family));
    }
    return j;
}

std::string config_fingerprint(const ExperimentProtocol& protocol, const std::vector<ModelSpec>& specs) {
    ordered_json j;
    j["protocol"] = protocol_to_json(protocol);
    ordered_json list = json::array();
    for (const auto& s : specs)
        list.push_back(spec_to_json(s));
    j["specs"] = list;
    return text::hex_digest(text::fnv1a(j.dump()));
}

std::string report_to_json(const EvaluationReport& report) {
    ordered_json j;
    j["schema"] = "wrfml.report";
    j["schema_version"] = kReportSchemaVersion;
    const auto& m = report.metadata;
    j["metadata"] = ordered_json{{"location", m.location},
                                 {"dataset_fingerprint", m.dataset_fingerprint},
                                 {"config_fingerprint", m.config_fingerprint},
                                 {"toolkit_version", m.toolkit_version},
                                 {"n_rows", m.n_rows},
                                 {"n_test_rows", m.n_test_rows},
                                 {"dropped_rows", m.dropped_rows}};
    ordered_json entries = json::array();
    for (const auto& e : report.entries) {
        ordered_json o;
        o["location"] = e.location;
        o["label"] = e.label;
        o["group"] = e.group;
        o["hyperparameters"] = e.hyperparameters ? ordered_json(config_to_json(*e.hyperparameters)) : ordered_json();
        o["cv_mean_nrmse"] = e.cv_mean_nrmse ? ordered_json(*e.cv_mean_nrmse) : ordered_json();
        o["test_nrmse"] = e.test_nrmse;
        o["n_train"] = e.n_train;
        o["n_test"] = e.n_test;
        o["seed"] = e.seed;
        o["n_trials"] = e.n_trials;
        entries.push_back(o);
    }
    j["entries"] = entries;
    ordered_json failures = json::array();
    for (const auto& f : report.failures)
        failures.push_back(ordered_json{{"label", f.label}, {"code", f.code}, {"message", f.message}});
    j["failures"] = failures;
    return j.dump(2) + "\n";
}

std::string report_to_csv(const EvaluationReport& report) {
    std::string out(kReportCsvHeader);
    out += '\n';
    for (const auto& e : report.entries) {
        out += e.location + "," + e.label + "," + text::format_double(e.test_nrmse) + ",";
        if (e.cv_mean_nrmse)
            out += text::format_double(*e.cv_mean_nrmse);
        out += "," + std::to_string(e.n_train) + "," + std::to_string(e.n_test) + "," + std::to_string(e.seed) + "\n";
    }
    return out;
}

std::map<std::string, std::string> figure_csvs(const EvaluationReport& report) {
    std::map<std::string, std::string> out;
    for (const auto& e : report.entries) {
        auto [it, fresh] = out.try_emplace(e.group, std::string(kFigureCsvHeader) + "\n");
        it->second += e.label + "," + text::format_double(e.test_nrmse) + "\n";
    }
    return out;
}

} // namespace wrfml
