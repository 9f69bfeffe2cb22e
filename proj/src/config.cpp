#include "wrfml/config.hpp"

#include "wrfml/error.hpp"
#include "wrfml/io.hpp"
#include "wrfml/report.hpp"

#include <algorithm>
#include <type_traits>

namespace wrfml {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, field + ": " + why, std::nullopt, field);
}

void only_keys(const json& j, std::initializer_list<std::string_view> keys, const std::string& where) {
    if (!j.is_object())
        invalid(where, "expected an object");
    for (const auto& [k, v] : j.items())
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            invalid(where.empty() ? k : where + "." + k, "unknown key");
}

template <typename T>
T get(const json& j, const char* key, const std::string& field, T fallback) {
    if (!j.contains(key))
        return fallback;
    const auto& v = j.at(key);
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_unsigned())
            invalid(field, "expected a non-negative integer");
    }
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        invalid(field, "wrong type");
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const json& j, const char* key, const std::string& field, std::vector<T> fallback,
                          Parse parse) {
    if (!j.contains(key))
        return fallback;
    const auto names = get<std::vector<std::string>>(j, key, field, {});
    std::vector<T> out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto v = parse(names[i]);
        if (!v)
            invalid(field + "[" + std::to_string(i) + "]", "unknown value '" + names[i] + "'");
        if (std::find(out.begin(), out.end(), *v) == out.end())
            out.push_back(*v);
    }
    return out;
}

FileSource parse_files(const json& j, const std::filesystem::path& base) {
    only_keys(j, {"met", "nwp", "target", "neighbors"}, "data.files");
    for (const char* key : {"met", "nwp", "target"})
        if (!j.contains(key))
            invalid(std::string("data.files.") + key, "required");
    FileSource f;
    f.met = resolve(base, get<std::string>(j, "met", "data.files.met", ""));
    f.nwp = resolve(base, get<std::string>(j, "nwp", "data.files.nwp", ""));
    f.target = get<std::string>(j, "target", "data.files.target", "");
    f.neighbors = get<std::vector<std::string>>(j, "neighbors", "data.files.neighbors", {});
    if (f.neighbors.size() > 3)
        invalid("data.files.neighbors", "at most 3 neighbors");
    return f;
}

SpecSelection parse_specs(const json& j) {
    only_keys(j, {"baselines", "variants", "channels", "families"}, "specs");
    SpecSelection s;
    s.baselines = get<bool>(j, "baselines", "specs.baselines", s.baselines);
    s.variants = parse_list<VariantKind>(j, "variants", "specs.variants", s.variants, parse_variant_kind);
    s.channels = parse_list<Channel>(j, "channels", "specs.channels", s.channels, parse_channel);
    s.families = parse_list<Family>(j, "families", "specs.families", s.families, parse_family);
    return s;
}

ExperimentProtocol parse_protocol(const json& j) {
    only_keys(j, {"test_fraction", "split_mode", "k", "n_samples", "seed", "workers", "spaces"}, "protocol");
    ExperimentProtocol p;
    p.test_fraction = get<double>(j, "test_fraction", "protocol.test_fraction", p.test_fraction);
    if (!(p.test_fraction > 0.0 && p.test_fraction < 1.0))
        invalid("protocol.test_fraction", "must lie in (0, 1)");
    if (j.contains("split_mode")) {
        const auto mode = parse_split_mode(get<std::string>(j, "split_mode", "protocol.split_mode", ""));
        if (!mode)
            invalid("protocol.split_mode", "expected random or chronological");
        p.split_mode = *mode;
    }
    p.folds = get<std::size_t>(j, "k", "protocol.k", p.folds);
    if (p.folds < 2)
        invalid("protocol.k", "must be >= 2");
    p.n_samples = get<std::size_t>(j, "n_samples", "protocol.n_samples", p.n_samples);
    if (p.n_samples < 1)
        invalid("protocol.n_samples", "must be >= 1");
    p.seed = get<std::uint64_t>(j, "seed", "protocol.seed", p.seed);
    p.workers = get<std::size_t>(j, "workers", "protocol.workers", p.workers);
    if (j.contains("spaces")) {
        const auto& spaces = j.at("spaces");
        if (!spaces.is_object())
            invalid("protocol.spaces", "expected an object");
        for (const auto& [name, body] : spaces.items()) {
            const auto family = parse_family(name);
            if (!family)
                invalid("protocol.spaces." + name, "unknown family");
            p.spaces[*family] = space_from_json(body, *family);
        }
    }
    return p;
}

OutputConfig parse_output(const json& j, const std::filesystem::path& base) {
    only_keys(j, {"report", "format", "figures_dir"}, "output");
    OutputConfig o;
    const auto format = get<std::string>(j, "format", "output.format", "json");
    if (format == "json")
        o.format = ReportFormat::Json;
    else if (format == "csv")
        o.format = ReportFormat::Csv;
    else
        invalid("output.format", "expected json or csv");
    const std::string fallback = o.format == ReportFormat::Json ? "report.json" : "report.csv";
    o.report = resolve(base, get<std::string>(j, "report", "output.report", fallback));
    const auto figures = get<std::string>(j, "figures_dir", "output.figures_dir", "figures");
    o.figures_dir = figures.empty() ? std::filesystem::path() : resolve(base, figures);
    return o;
}

} // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed JSON: ") + e.what(), std::nullopt, "");
    }
    only_keys(root, {"data", "specs", "protocol", "output"}, "");
    if (!root.contains("data"))
        invalid("data", "required");
    const auto& data = root.at("data");
    only_keys(data, {"synthetic", "files"}, "data");
    if (data.contains("synthetic") == data.contains("files"))
        invalid("data", "exactly one of synthetic or files is required");

    ExperimentConfig cfg;
    if (data.contains("synthetic")) {
        try {
            cfg.data = scenario_config_from_json(data.at("synthetic"));
        } catch (const Error& e) {
            const auto field = e.field().empty() ? std::string("data.synthetic") : "data.synthetic." + e.field();
            throw Error(ErrorCode::InvalidConfig, "data.synthetic." + std::string(e.what()), std::nullopt, field);
        }
    } else {
        cfg.data = parse_files(data.at("files"), base_dir);
    }
    cfg.specs = parse_specs(root.value("specs", json::object()));
    cfg.protocol = parse_protocol(root.value("protocol", json::object()));
    cfg.output = parse_output(root.value("output", json::object()), base_dir);
    if (expand_specs(cfg.specs).empty())
        invalid("specs", "selection yields no model specs");
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return parse_experiment_config(read_file(path), path.parent_path());
}

std::vector<ModelSpec> expand_specs(const SpecSelection& sel) {
    std::vector<ModelSpec> out;
    if (sel.baselines) {
        for (auto c : sel.channels)
            out.push_back(ModelSpec::baseline(BaselineSpec::raw_wrf(c)));
        out.push_back(ModelSpec::baseline(BaselineSpec::persistence(1)));
        out.push_back(ModelSpec::baseline(BaselineSpec::persistence(24)));
    }
    for (auto kind : sel.variants) {
        const FeatureVariant probe{kind, std::nullopt};
        if (probe.needs_channel()) {
            for (auto c : sel.channels)
                for (auto f : sel.families)
                    out.push_back(ModelSpec::wrf_ml(FeatureVariant{kind, c}, f));
        } else {
            for (auto f : sel.families)
                out.push_back(ModelSpec::wrf_ml(probe, f));
        }
    }
    return out;
}

} // namespace wrfml
