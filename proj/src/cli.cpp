#include "wrfml/cli.hpp"

#include "wrfml/config.hpp"
#include "wrfml/error.hpp"
#include "wrfml/io.hpp"
#include "wrfml/report.hpp"
#include "wrfml/synth.hpp"
#include "wrfml/text.hpp"
#include "wrfml/version.hpp"

#include <CLI11.hpp>

#include <map>
#include <set>
#include <sstream>

namespace wrfml::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

/// Discards everything; stands in for `out` under --quiet.
class NullBuffer : public std::streambuf {
protected:
    int overflow(int c) override { return c; }
};

void report_error(std::ostream& err, const Error& e) {
    err << "error: " << to_string(e.code());
    if (!e.field().empty())
        err << " [" << e.field() << ']';
    err << ": " << e.what() << '\n';
}

/// Runs `body`, mapping every escaping exception to exit code 2.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const Error& e) {
        report_error(err, e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
    } catch (...) {
        err << "error: unknown failure\n";
    }
    return kExitUsage;
}

template <typename T>
T parse_file(const std::filesystem::path& path, T (*parse)(std::string_view)) {
    const auto bytes = read_file(path);
    try {
        return parse(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what(), e.line(), e.field());
    }
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    json root;
    try {
        root = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": malformed JSON: " + e.what());
    }
    // Either an experiment config with data.synthetic or a bare scenario config.
    if (root.is_object() && root.contains("data")) {
        const auto cfg = parse_experiment_config(bytes, path.parent_path());
        if (const auto* s = std::get_if<ScenarioConfig>(&cfg.data))
            return *s;
        throw Error(ErrorCode::InvalidConfig, "config has no synthetic data source", std::nullopt, "data.synthetic");
    }
    return scenario_config_from_json(root);
}

ordered_json scenario_metadata(const ScenarioConfig& cfg, const std::string& met_csv, const std::string& nwp_csv,
                               std::size_t met_rows, std::size_t nwp_rows) {
    ordered_json j;
    j["schema"] = "wrfml.scenario";
    j["schema_version"] = 1;
    j["toolkit_version"] = std::string(kToolkitVersion);
    j["config"] = scenario_config_to_json(cfg);
    j["files"] = ordered_json{
        {"met.csv", ordered_json{{"rows", met_rows}, {"fnv1a", text::hex_digest(text::fnv1a(met_csv))}}},
        {"nwp.csv", ordered_json{{"rows", nwp_rows}, {"fnv1a", text::hex_digest(text::fnv1a(nwp_csv))}}},
    };
    return j;
}

struct LoadedData {
    std::vector<MetObservation> met;
    std::vector<NwpOutput> nwp;
    std::string target;
    std::vector<std::string> neighbors;
};

LoadedData load_data(const ExperimentConfig& cfg) {
    LoadedData d;
    if (const auto* s = std::get_if<ScenarioConfig>(&cfg.data)) {
        auto scenario = generate_scenario(*s);
        d.met = std::move(scenario.met);
        d.nwp = std::move(scenario.nwp);
        d.target = s->target;
        d.neighbors = s->neighbors;
    } else {
        const auto& f = std::get<FileSource>(cfg.data);
        d.met = parse_file(f.met, &parse_met_csv);
        d.nwp = parse_file(f.nwp, &parse_nwp_csv);
        d.target = f.target;
        d.neighbors = f.neighbors;
    }
    return d;
}

std::string format_nrmse(const std::optional<double>& v) {
    if (!v)
        return "-";
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(4);
    s << *v;
    return s.str();
}

} // namespace

int cmd_synth(const std::filesystem::path& config, const std::filesystem::path& out_dir, const GlobalOptions& opts,
              std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto cfg = load_scenario_config(config);
        if (opts.seed)
            cfg.seed = *opts.seed;
        const auto scenario = generate_scenario(cfg);
        const auto [met_csv, nwp_csv] = scenario_to_csv(scenario);
        const auto meta = scenario_metadata(cfg, met_csv, nwp_csv, scenario.met.size(), scenario.nwp.size());
        write_file_atomic(out_dir / "met.csv", met_csv);
        write_file_atomic(out_dir / "nwp.csv", nwp_csv);
        write_file_atomic(out_dir / "scenario.json", meta.dump(2) + "\n");
        out << "wrote " << scenario.met.size() << " met rows and " << scenario.nwp.size() << " nwp rows to "
            << out_dir.string() << '\n';
        return kExitOk;
    });
}

int cmd_run(const std::filesystem::path& config, const GlobalOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto cfg = load_experiment_config(config);
        if (opts.seed) {
            cfg.protocol.seed = *opts.seed;
            if (auto* s = std::get_if<ScenarioConfig>(&cfg.data))
                s->seed = *opts.seed;
        }
        const auto data = load_data(cfg);
        const auto aligned = align(data.met, data.nwp, data.target, data.neighbors);
        const auto ds = daylight_filter(aligned);
        const auto specs = expand_specs(cfg.specs);
        const auto report = evaluate_experiment(ds, specs, cfg.protocol);

        const auto body = cfg.output.format == ReportFormat::Json ? report_to_json(report) : report_to_csv(report);
        write_file_atomic(cfg.output.report, body);
        if (!cfg.output.figures_dir.empty())
            for (const auto& [group, csv] : figure_csvs(report))
                write_file_atomic(cfg.output.figures_dir / (group + ".csv"), csv);

        out << "location " << report.metadata.location << ": " << report.metadata.n_rows << " rows ("
            << report.metadata.n_test_rows << " test), " << report.metadata.dropped_rows << " dropped at alignment\n";
        for (const auto& e : report.entries)
            out << "  " << e.label << "  test_nrmse=" << format_nrmse(e.test_nrmse)
                << "  cv_nrmse=" << format_nrmse(e.cv_mean_nrmse) << '\n';
        for (const auto& f : report.failures)
            err << "spec " << f.label << " failed: " << f.code << ": " << f.message << '\n';
        out << "report written to " << cfg.output.report.string() << '\n';
        if (!report.failures.empty() && opts.strict)
            return kExitExperimentFailure;
        return kExitOk;
    });
}

int cmd_validate(const ValidateArgs& args, const GlobalOptions&, std::ostream& out, std::ostream& err) {
    std::vector<MetObservation> met;
    std::vector<NwpOutput> nwp;
    const int parsed = guarded(err, [&] {
        met = parse_file(args.met, &parse_met_csv);
        nwp = parse_file(args.nwp, &parse_nwp_csv);
        return kExitOk;
    });
    if (parsed != kExitOk)
        return parsed;
    return guarded(err, [&] {
        std::map<std::string, std::set<HourStamp>> met_series;
        std::size_t rh_clipped = 0, di_clamped = 0;
        for (const auto& m : met) {
            met_series[m.station_id].insert(m.time);
            rh_clipped += m.flags.rh_clipped;
            di_clamped += m.flags.di_clamped;
        }
        std::map<std::pair<Channel, std::string>, std::set<HourStamp>> nwp_series;
        std::size_t nwp_rh = 0, nwp_di = 0;
        for (const auto& o : nwp) {
            nwp_series[{o.channel, o.location_id}].insert(o.time);
            nwp_rh += o.flags.rh_clipped;
            nwp_di += o.flags.di_clamped;
        }

        if (args.target && !met_series.count(*args.target))
            throw Error(ErrorCode::UnknownLocation, "no met rows for target " + *args.target, std::nullopt, "target");
        std::set<HourStamp> reference;
        if (args.target) {
            reference = met_series[*args.target];
        } else {
            for (const auto& [id, times] : met_series)
                reference.insert(times.begin(), times.end());
        }
        auto span_of = [](const std::set<HourStamp>& times) {
            return times.empty() ? std::string("-") : to_string(*times.begin()) + " .. " + to_string(*times.rbegin());
        };

        out << "met: " << met.size() << " rows, " << met_series.size() << " stations, rh_clipped=" << rh_clipped
            << ", di_clamped=" << di_clamped << '\n';
        for (const auto& [id, times] : met_series)
            out << "  met:" << id << "  rows=" << times.size() << "  span=" << span_of(times) << '\n';
        out << "nwp: " << nwp.size() << " rows, " << nwp_series.size() << " series, rh_clipped=" << nwp_rh
            << ", di_clamped=" << nwp_di << '\n';
        for (const auto& [key, times] : nwp_series) {
            std::size_t overlap = 0;
            for (const auto& t : times)
                overlap += reference.count(t);
            const double pct = times.empty() ? 0.0 : 100.0 * static_cast<double>(overlap) / times.size();
            std::ostringstream cov;
            cov.setf(std::ios::fixed);
            cov.precision(1);
            cov << pct;
            out << "  nwp:" << to_string(key.first) << ':' << key.second << "  rows=" << times.size()
                << "  span=" << span_of(times) << "  overlap=" << overlap << " (" << cov.str() << "%)\n";
        }
        if (args.target) {
            try {
                const auto aligned = align(met, nwp, *args.target, args.neighbors);
                const auto daylight = daylight_filter(aligned);
                out << "aligned: " << aligned.rows.size() << " rows, dropped=" << aligned.dropped
                    << ", daylight rows=" << daylight.rows.size() << ", channels=" << aligned.channel_set.size()
                    << '\n';
            } catch (const Error& e) {
                if (e.code() != ErrorCode::EmptyIntersection)
                    throw;
                out << "aligned: 0 rows (no overlapping timestamps)\n";
            }
        }
        return kExitOk;
    });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"WRF-ML irradiance forecast correction toolkit", "wrfml"};
    app.set_version_flag("--version", std::string(kToolkitVersion));
    app.require_subcommand(1);

    GlobalOptions opts;
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
    app.add_flag("--strict", opts.strict, "Exit 1 when any spec fails");
    app.add_flag("--quiet", opts.quiet, "Suppress progress output");

    std::filesystem::path synth_config, synth_out;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario");
    synth->fallthrough();
    synth->add_option("config", synth_config, "Scenario or experiment config JSON")->required();
    synth->add_option("out_dir", synth_out, "Directory for met.csv, nwp.csv and scenario.json")->required();

    std::filesystem::path run_config;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment suite");
    run_cmd->fallthrough();
    run_cmd->add_option("config", run_config, "Experiment config JSON")->required();

    ValidateArgs vargs;
    std::string target;
    auto* validate = app.add_subcommand("validate", "Check met and NWP CSV files");
    validate->fallthrough();
    validate->add_option("--met", vargs.met, "Met CSV")->required();
    validate->add_option("--nwp", vargs.nwp, "NWP CSV")->required();
    auto* target_opt = validate->add_option("--target", target, "Target location id");
    validate->add_option("--neighbors", vargs.neighbors, "Neighbor location ids")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }
    if (*seed_opt)
        opts.seed = seed;
    if (*target_opt)
        vargs.target = target;

    NullBuffer null_buffer;
    std::ostream null_stream(&null_buffer);
    std::ostream& info = opts.quiet ? null_stream : out;

    if (*synth)
        return cmd_synth(synth_config, synth_out, opts, info, err);
    if (*run_cmd)
        return cmd_run(run_config, opts, info, err);
    return cmd_validate(vargs, opts, info, err);
}

} // namespace wrfml::cli
