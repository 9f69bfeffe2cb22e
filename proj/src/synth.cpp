#include "wrfml/synth.hpp"

#include "wrfml/error.hpp"
#include "wrfml/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace wrfml {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

enum Stream : std::uint64_t {
    kRegional = 1,
    kRegime = 2,
    kLocal = 10,
    kTemperature = 20,
    kHumidity = 30,
    kNwp = 100,
};

void invalid(const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, field + ": " + why, std::nullopt, field);
}

/// Stationary unit-variance AR(1) path.
std::vector<double> ar1(std::size_t n, double rho, Rng& rng) {
    std::vector<double> z(n);
    if (n == 0)
        return z;
    const double innovation = std::sqrt(1.0 - rho * rho);
    z[0] = rng.normal();
    for (std::size_t i = 1; i < n; ++i)
        z[i] = rho * z[i - 1] + innovation * rng.normal();
    return z;
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    return derive_seed(seed, stream);
}

} // namespace

std::vector<ChannelBias> default_channel_biases() {
    return {
        {Channel::M1, 0.85, 40.0, 50.0, 1},
        {Channel::M2, 1.0, 20.0, 45.0, 1},
        {Channel::M3, 0.8, 60.0, 55.0, 1},
        {Channel::M4, 1.1, 30.0, 60.0, 1},
    };
}

void ScenarioConfig::validate() const {
    if (n_days < 1)
        invalid("n_days", "must be >= 1");
    if (!parse_date(start_date))
        invalid("start_date", "expected YYYY-MM-DD on or after 1970-01-01");
    if (target.empty())
        invalid("target", "must not be empty");
    std::set<std::string> seen{target};
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        const auto field = "neighbors[" + std::to_string(i) + "]";
        if (neighbors[i].empty() || neighbors[i].find(',') != std::string::npos)
            invalid(field, "must be a non-empty id without commas");
        if (!seen.insert(neighbors[i]).second)
            invalid(field, "duplicate location id");
    }
    if (target.find(',') != std::string::npos)
        invalid("target", "must not contain commas");
    if (neighbors.size() > 3)
        invalid("neighbors", "at most 3 neighbors");
    if (!(peak_clear_ghi >= 0.0) || !std::isfinite(peak_clear_ghi))
        invalid("peak_clear_ghi", "must be finite and >= 0");
    if (!(cloud_persistence >= 0.0 && cloud_persistence < 1.0))
        invalid("cloud_persistence", "must lie in [0, 1)");
    if (!(cloud_depth >= 0.0 && cloud_depth <= 1.0))
        invalid("cloud_depth", "must lie in [0, 1]");
    if (!(cloud_spread >= 0.0) || !std::isfinite(cloud_spread))
        invalid("cloud_spread", "must be finite and >= 0");
    if (!(regime_persistence >= 0.0 && regime_persistence < 1.0))
        invalid("regime_persistence", "must lie in [0, 1)");
    if (!(regime_weight >= 0.0 && regime_weight <= 1.0))
        invalid("regime_weight", "must lie in [0, 1]");
    if (!(local_weight >= 0.0 && local_weight <= 1.0))
        invalid("local_weight", "must lie in [0, 1]");
    if (channel_biases.empty())
        invalid("channel_biases", "at least one channel is required");
    std::set<Channel> channels;
    for (std::size_t i = 0; i < channel_biases.size(); ++i) {
        const auto& b = channel_biases[i];
        const auto prefix = "channel_biases[" + std::to_string(i) + "].";
        if (!channels.insert(b.channel).second)
            invalid(prefix + "channel", "duplicate channel");
        if (!(b.gain > 0.0) || !std::isfinite(b.gain))
            invalid(prefix + "gain", "must be > 0");
        if (!std::isfinite(b.offset))
            invalid(prefix + "offset", "must be finite");
        if (!(b.noise_sd >= 0.0) || !std::isfinite(b.noise_sd))
            invalid(prefix + "noise_sd", "must be >= 0");
        if (b.lag_smear != 0 && b.lag_smear != 1)
            invalid(prefix + "lag_smear", "must be 0 or 1");
    }
}

std::vector<std::string> ScenarioConfig::locations() const {
    std::vector<std::string> out{target};
    out.insert(out.end(), neighbors.begin(), neighbors.end());
    return out;
}

ordered_json scenario_config_to_json(const ScenarioConfig& cfg) {
    ordered_json j;
    j["n_days"] = cfg.n_days;
    j["start_date"] = cfg.start_date;
    j["target"] = cfg.target;
    j["neighbors"] = cfg.neighbors;
    j["peak_clear_ghi"] = cfg.peak_clear_ghi;
    j["cloud_persistence"] = cfg.cloud_persistence;
    j["cloud_depth"] = cfg.cloud_depth;
    j["cloud_spread"] = cfg.cloud_spread;
    j["regime_persistence"] = cfg.regime_persistence;
    j["regime_weight"] = cfg.regime_weight;
    j["local_weight"] = cfg.local_weight;
    ordered_json biases = ordered_json::array();
    for (const auto& b : cfg.channel_biases)
        biases.push_back(ordered_json{{"channel", std::string(to_string(b.channel))},
                                      {"gain", b.gain},
                                      {"offset", b.offset},
                                      {"noise_sd", b.noise_sd},
                                      {"lag_smear", b.lag_smear}});
    j["channel_biases"] = biases;
    j["seed"] = cfg.seed;
    return j;
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& field) {
    if (!j.contains(key))
        return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        invalid(field, "wrong type");
    }
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> keys, const std::string& prefix) {
    for (const auto& [k, v] : j.items())
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            invalid(prefix + k, "unknown key");
}

} // namespace

ScenarioConfig scenario_config_from_json(const json& j) {
    if (!j.is_object())
        invalid("synthetic", "expected an object");
    reject_unknown(j,
                   {"n_days", "start_date", "target", "neighbors", "peak_clear_ghi", "cloud_persistence", "cloud_depth",
                    "cloud_spread", "regime_persistence", "regime_weight", "local_weight", "channel_biases", "seed"},
                   "");
    ScenarioConfig cfg;
    read(j, "n_days", cfg.n_days, "n_days");
    read(j, "start_date", cfg.start_date, "start_date");
    read(j, "target", cfg.target, "target");
    read(j, "neighbors", cfg.neighbors, "neighbors");
    read(j, "peak_clear_ghi", cfg.peak_clear_ghi, "peak_clear_ghi");
    read(j, "cloud_persistence", cfg.cloud_persistence, "cloud_persistence");
    read(j, "cloud_depth", cfg.cloud_depth, "cloud_depth");
    read(j, "cloud_spread", cfg.cloud_spread, "cloud_spread");
    read(j, "regime_persistence", cfg.regime_persistence, "regime_persistence");
    read(j, "regime_weight", cfg.regime_weight, "regime_weight");
    read(j, "local_weight", cfg.local_weight, "local_weight");
    read(j, "seed", cfg.seed, "seed");
    if (j.contains("channel_biases")) {
        const auto& list = j.at("channel_biases");
        if (!list.is_array())
            invalid("channel_biases", "expected an array");
        cfg.channel_biases.clear();
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto& item = list[i];
            const auto prefix = "channel_biases[" + std::to_string(i) + "].";
            if (!item.is_object())
                invalid("channel_biases[" + std::to_string(i) + "]", "expected an object");
            reject_unknown(item, {"channel", "gain", "offset", "noise_sd", "lag_smear"}, prefix);
            if (!item.contains("channel"))
                invalid(prefix + "channel", "required");
            ChannelBias b;
            std::string name;
            read(item, "channel", name, prefix + "channel");
            const auto ch = parse_channel(name);
            if (!ch)
                invalid(prefix + "channel", "unknown channel '" + name + "'");
            b.channel = *ch;
            read(item, "gain", b.gain, prefix + "gain");
            read(item, "offset", b.offset, prefix + "offset");
            read(item, "noise_sd", b.noise_sd, prefix + "noise_sd");
            read(item, "lag_smear", b.lag_smear, prefix + "lag_smear");
            cfg.channel_biases.push_back(b);
        }
    }
    cfg.validate();
    return cfg;
}

double clear_sky_ghi(int hour_of_day, double peak) {
    if (hour_of_day < 0 || hour_of_day > 23)
        invalid("hour", "must lie in [0, 23]");
    if (hour_of_day <= 7 || hour_of_day >= 19)
        return 0.0;
    if (hour_of_day == 13)
        return peak;
    return peak * std::sin(std::numbers::pi * (hour_of_day - 7) / 12.0);
}

std::vector<MetObservation> Scenario::met_for(const std::string& location) const {
    std::vector<MetObservation> out;
    for (const auto& m : met)
        if (m.station_id == location)
            out.push_back(m);
    return out;
}

Scenario generate_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    const auto days = static_cast<std::size_t>(cfg.n_days);
    const std::size_t hours = days * 24;
    const auto first_day = *parse_date(cfg.start_date);
    const auto locations = cfg.locations();

    Scenario s;
    s.config = cfg;
    s.clear_sky.resize(hours);
    std::vector<double> shape(hours); // clear-sky curve scaled to [0, 1]
    for (std::size_t i = 0; i < hours; ++i) {
        const int h = static_cast<int>(i % 24);
        shape[i] = clear_sky_ghi(h, 1.0);
        s.clear_sky[i] = clear_sky_ghi(h, cfg.peak_clear_ghi);
    }

    Rng regional_rng(stream_seed(cfg.seed, kRegional));
    Rng regime_rng(stream_seed(cfg.seed, kRegime));
    const auto regional = ar1(hours, cfg.cloud_persistence, regional_rng);
    const auto regime = ar1(days, cfg.regime_persistence, regime_rng);

    const double w_hourly = std::sqrt(1.0 - cfg.regime_weight);
    const double w_regime = std::sqrt(cfg.regime_weight);
    const double w_shared = std::sqrt(1.0 - cfg.local_weight);
    const double w_local = std::sqrt(cfg.local_weight);

    // Per-location truth, kept as plain arrays for the NWP pass.
    std::vector<std::vector<WeatherVars>> truth(locations.size(), std::vector<WeatherVars>(hours));
    s.cloud_factor.assign(locations.size(), std::vector<double>(hours));
    for (std::size_t j = 0; j < locations.size(); ++j) {
        Rng local_rng(stream_seed(cfg.seed, kLocal + j));
        Rng t_rng(stream_seed(cfg.seed, kTemperature + j));
        Rng rh_rng(stream_seed(cfg.seed, kHumidity + j));
        const auto local = ar1(hours, cfg.cloud_persistence, local_rng);
        const auto t_noise = ar1(hours, 0.8, t_rng);
        const auto rh_noise = ar1(hours, 0.8, rh_rng);
        for (std::size_t i = 0; i < hours; ++i) {
            const double z = w_hourly * (w_shared * regional[i] + w_local * local[i]) + w_regime * regime[i / 24];
            const double cover = std::clamp(0.5 + cfg.cloud_spread * z, 0.0, 1.0);
            const double c = 1.0 - cfg.cloud_depth * cover;
            s.cloud_factor[j][i] = c;
            const double ghi = s.clear_sky[i] * c;
            const double dhi = std::min(ghi, ghi * (0.25 + 0.6 * (1.0 - c)));
            const double sun = shape[i] * (0.3 + 0.7 * c);
            const double temp = 24.5 + 7.0 * sun + 0.6 * t_noise[i];
            const double rh = std::clamp(90.0 - 25.0 * sun + 3.0 * rh_noise[i], 0.0, 100.0);
            truth[j][i] = make_vars(temp, rh, ghi, dhi);

            MetObservation m;
            m.station_id = locations[j];
            m.time = HourStamp::from_absolute_hour(first_day * 24 + static_cast<std::int64_t>(i));
            m.vars = truth[j][i];
            s.met.push_back(std::move(m));
        }
    }

    for (std::size_t m = 0; m < cfg.channel_biases.size(); ++m) {
        const auto& b = cfg.channel_biases[m];
        for (std::size_t j = 0; j < locations.size(); ++j) {
            Rng rng(stream_seed(cfg.seed, kNwp + 10 * static_cast<std::uint64_t>(b.channel) + j));
            for (std::size_t i = 0; i < hours; ++i) {
                const auto& src = truth[j][std::min(i + static_cast<std::size_t>(b.lag_smear), hours - 1)];
                const double ghi = std::max(0.0, b.gain * src.ghi + b.offset + b.noise_sd * rng.normal());
                const double dhi =
                    std::clamp(b.gain * src.dhi + 0.3 * b.offset + 0.5 * b.noise_sd * rng.normal(), 0.0, ghi);
                const double temp = src.temperature + (b.gain - 1.0) * 5.0 + 0.3 * rng.normal();
                const double rh = std::clamp(src.relative_humidity - b.offset / 10.0 + 1.5 * rng.normal(), 0.0, 100.0);

                NwpOutput o;
                o.channel = b.channel;
                o.location_id = locations[j];
                o.time = HourStamp::from_absolute_hour(first_day * 24 + static_cast<std::int64_t>(i));
                o.vars = make_vars(temp, rh, ghi, dhi);
                s.nwp.push_back(std::move(o));
            }
        }
    }
    return s;
}

std::pair<std::string, std::string> scenario_to_csv(const Scenario& s) {
    if (s.met.empty())
        throw Error(ErrorCode::EmptyResult, "scenario has no rows");
    return {write_met_csv(s.met), write_nwp_csv(s.nwp)};
}

} // namespace wrfml
