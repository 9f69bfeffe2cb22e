#include "helpers.hpp"

#include "wrfml/features.hpp"
#include "wrfml/model_selection.hpp"
#include "wrfml/random.hpp"
#include "wrfml/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>

using namespace wrfml;

namespace {

const std::vector<FeatureVariant>& all_variants() {
    static const std::vector<FeatureVariant> v{
        FeatureVariant::base(Channel::M1),  FeatureVariant::neighbor(Channel::M2), FeatureVariant::lag1(Channel::M3),
        FeatureVariant::lag24(Channel::M4), FeatureVariant::ensemble(),           FeatureVariant::ensemble_lag24(),
    };
    return v;
}

/// Raw met table keyed by time, straight from the scenario.
std::map<HourStamp, WeatherVars> raw_met(const Scenario& s) {
    std::map<HourStamp, WeatherVars> out;
    for (const auto& m : s.met)
        if (m.station_id == s.config.target)
            out[m.time] = m.vars;
    return out;
}

} // namespace

TEST_CASE("column widths per variant") {
    const auto ds = testing::small_dataset(4);
    const std::map<VariantKind, std::size_t> widths{
        {VariantKind::Base, 6},      {VariantKind::Neighbor, 21}, {VariantKind::Lag1, 11},
        {VariantKind::Lag24, 11},    {VariantKind::Ensemble, 21}, {VariantKind::EnsembleLag24, 26},
    };
    for (const auto& v : all_variants()) {
        const auto fm = build_features(ds, v);
        CHECK_MESSAGE(fm.cols() == widths.at(v.kind), v.name());
        CHECK(fm.column_names.size() == fm.cols());
        CHECK(v.width() == fm.cols());
        CHECK(fm.y.size() == fm.rows());
        CHECK(fm.row_times.size() == fm.rows());
    }
}

TEST_CASE("column names and order") {
    const auto ds = testing::small_dataset(3);
    const auto base = build_features(ds, FeatureVariant::base(Channel::M1));
    CHECK(base.column_names ==
          std::vector<std::string>{"t", "T_wrf_M1", "RH_wrf_M1", "GHI_wrf_M1", "DHI_wrf_M1", "DI_wrf_M1"});
    const auto ens = build_features(ds, FeatureVariant::ensemble());
    CHECK(ens.column_names[1] == "T_wrf_M1");
    CHECK(ens.column_names[6] == "T_wrf_M2");
    CHECK(ens.column_names[20] == "DI_wrf_M4");
    const auto nb = build_features(ds, FeatureVariant::neighbor(Channel::M2));
    CHECK(nb.column_names[6] == "T_wrf_M2_X1");
    CHECK(nb.column_names[20] == "DI_wrf_M2_X3");
    const auto lag = build_features(ds, FeatureVariant::lag24(Channel::M1));
    CHECK(lag.column_names[6] == "T_met_lag24");
    CHECK(lag.column_names[8] == "GHI_met_lag24");
}

TEST_CASE("values come from the right series") {
    const auto cfg = testing::small_scenario(3);
    const auto s = generate_scenario(cfg);
    const auto ds = daylight_filter(align(s.met, s.nwp, cfg.target, cfg.neighbors));
    const auto met = raw_met(s);
    std::map<std::tuple<Channel, std::string, HourStamp>, WeatherVars> nwp;
    for (const auto& o : s.nwp)
        nwp[{o.channel, o.location_id, o.time}] = o.vars;

    const auto fm = build_features(ds, FeatureVariant::ensemble_lag24());
    for (std::size_t r = 0; r < fm.rows(); ++r) {
        const auto t = fm.row_times[r];
        CHECK(fm.x(r, 0) == t.hour_of_day);
        CHECK(fm.y[r] == met.at(t).ghi);
        for (std::size_t c = 0; c < 4; ++c) {
            const auto vars = nwp.at({kAllChannels[c], "X0", t}).as_array();
            for (std::size_t v = 0; v < 5; ++v)
                CHECK(fm.x(r, 1 + 5 * c + v) == vars[v]);
        }
        const auto lagged = met.at(t.shifted(-24)).as_array();
        for (std::size_t v = 0; v < 5; ++v)
            CHECK(fm.x(r, 21 + v) == lagged[v]);
    }
}

TEST_CASE("Lag24 on a 31-day dataset drops the first day") {
    const auto ds = testing::small_dataset(31);
    const auto fm = build_features(ds, FeatureVariant::lag24(Channel::M1));
    // Brute force: count daylight rows whose t-24 stamp exists in the raw series.
    std::size_t kept = 0;
    for (const auto& row : ds.rows)
        kept += ds.met_history.count(row.time.shifted(-24));
    CHECK(kept == 30 * 12);
    CHECK(fm.rows() == kept);
    CHECK(fm.dropped == 12);
}

TEST_CASE("Lag1 at 08:00 reads the unfiltered 07:00 reading") {
    const auto cfg = testing::small_scenario(3);
    const auto s = generate_scenario(cfg);
    const auto ds = daylight_filter(align(s.met, s.nwp, cfg.target, cfg.neighbors));
    const auto met = raw_met(s);
    const auto fm = build_features(ds, FeatureVariant::lag1(Channel::M1));
    CHECK(fm.rows() == ds.rows.size());
    bool saw_eight = false;
    for (std::size_t r = 0; r < fm.rows(); ++r) {
        const auto t = fm.row_times[r];
        const auto prev = met.at(t.shifted(-1)).as_array();
        for (std::size_t v = 0; v < 5; ++v)
            CHECK(fm.x(r, 6 + v) == prev[v]);
        saw_eight |= t.hour_of_day == 8;
    }
    CHECK(saw_eight);
}

TEST_CASE("leakage audit: met offsets <= -1, nwp offsets == 0") {
    const auto ds = testing::small_dataset(3);
    for (const auto& v : all_variants()) {
        const auto fm = build_features(ds, v);
        CHECK(leakage_violations(fm).empty());
        for (const auto& src : column_provenance(fm)) {
            if (src.is_met())
                CHECK(src.offset_hours <= -1);
            if (src.is_nwp())
                CHECK(src.offset_hours == 0);
        }
    }
    const auto base = column_provenance(build_features(ds, FeatureVariant::base(Channel::M1)));
    CHECK(base[3] == ColumnSource{"GHI_wrf_M1", "nwp:M1:X0", 0});
    const auto lag = column_provenance(build_features(ds, FeatureVariant::lag24(Channel::M1)));
    CHECK(lag[8] == ColumnSource{"GHI_met_lag24", "met:X0", -24});
}

TEST_CASE("leakage_violations flags a doctored matrix") {
    const auto ds = testing::small_dataset(3);
    auto fm = build_features(ds, FeatureVariant::lag1(Channel::M1));
    fm.sources[7].offset_hours = 0;
    fm.sources[2].offset_hours = 1;
    CHECK(leakage_violations(fm).size() == 2);
}

TEST_CASE("build_features errors") {
    const auto cfg = testing::small_scenario(2);
    auto s = generate_scenario(cfg);
    std::vector<NwpOutput> no_m4;
    for (const auto& o : s.nwp)
        if (o.channel != Channel::M4)
            no_m4.push_back(o);
    const auto ds = daylight_filter(align(s.met, no_m4, cfg.target, cfg.neighbors));
    CHECK_ERROR_CODE(build_features(ds, FeatureVariant::base(Channel::M4)), ErrorCode::MissingChannel);
    CHECK_ERROR_CODE(build_features(ds, FeatureVariant::ensemble()), ErrorCode::MissingChannel);
    CHECK(build_features(ds, FeatureVariant::base(Channel::M3)).cols() == 6);

    const auto lonely = daylight_filter(align(s.met, s.nwp, cfg.target, {}));
    CHECK_ERROR_CODE(build_features(lonely, FeatureVariant::neighbor(Channel::M1)), ErrorCode::MissingNeighbor);

    // One day only: Lag24 has no source rows at all.
    const auto one_day = testing::small_dataset(1);
    CHECK_ERROR_CODE(build_features(one_day, FeatureVariant::lag24(Channel::M1)), ErrorCode::EmptyResult);
}

TEST_CASE("build_features is independent of input row order") {
    const auto cfg = testing::small_scenario(4);
    const auto s = generate_scenario(cfg);
    auto met = s.met;
    auto nwp = s.nwp;
    std::reverse(met.begin(), met.end());
    Rng rng(3);
    rng.shuffle(std::span<NwpOutput>(nwp));
    const auto a = daylight_filter(align(s.met, s.nwp, cfg.target, cfg.neighbors));
    const auto b = daylight_filter(align(met, nwp, cfg.target, cfg.neighbors));
    for (const auto& v : all_variants()) {
        const auto fa = build_features(a, v);
        const auto fb = build_features(b, v);
        CHECK(fa.x == fb.x);
        CHECK(fa.y == fb.y);
        CHECK(fa.row_times == fb.row_times);
    }
}

TEST_CASE("feature matrix CSV has a trailing target column") {
    const auto ds = testing::small_dataset(2);
    const auto fm = build_features(ds, FeatureVariant::base(Channel::M2));
    const auto csv = feature_matrix_to_csv(fm);
    const auto header = csv.substr(0, csv.find('\n'));
    CHECK(header == "t,T_wrf_M2,RH_wrf_M2,GHI_wrf_M2,DHI_wrf_M2,DI_wrf_M2,target");
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == fm.rows() + 1);
}

TEST_CASE("predict_baseline") {
    const auto cfg = testing::small_scenario(5);
    const auto s = generate_scenario(cfg);
    const auto ds = daylight_filter(align(s.met, s.nwp, cfg.target, cfg.neighbors));
    const auto met = raw_met(s);

    SUBCASE("RawWrf copies the channel GHI verbatim") {
        const auto p = predict_baseline(ds, BaselineSpec::raw_wrf(Channel::M2));
        REQUIRE(p.predictions.size() == ds.rows.size());
        for (std::size_t i = 0; i < ds.rows.size(); ++i)
            CHECK(p.predictions[i] == ds.nwp(ds.rows[i], Channel::M2).ghi);
    }
    SUBCASE("Persistence equals a dictionary lookup") {
        for (int lag : {1, 24}) {
            const auto p = predict_baseline(ds, BaselineSpec::persistence(lag));
            std::size_t expected = 0;
            for (const auto& r : ds.rows)
                expected += met.count(r.time.shifted(-lag));
            CHECK(p.predictions.size() == expected);
            CHECK(p.dropped == ds.rows.size() - expected);
            for (std::size_t i = 0; i < p.row_times.size(); ++i) {
                CHECK(p.predictions[i] == met.at(p.row_times[i].shifted(-lag)).ghi);
                CHECK(p.truth[i] == met.at(p.row_times[i]).ghi);
            }
        }
    }
    SUBCASE("Persistence(24) at day 5 noon is day 4 noon") {
        const auto p = predict_baseline(ds, BaselineSpec::persistence(24));
        const HourStamp day4_noon{*parse_date("2014-01-04"), 12};
        const auto it = std::find(p.row_times.begin(), p.row_times.end(), day4_noon.shifted(24));
        REQUIRE(it != p.row_times.end());
        CHECK(p.predictions[static_cast<std::size_t>(it - p.row_times.begin())] == met.at(day4_noon).ghi);
    }
    SUBCASE("Persistence(1) at 08:00 uses the 07:00 raw reading") {
        const auto p = predict_baseline(ds, BaselineSpec::persistence(1));
        for (std::size_t i = 0; i < p.row_times.size(); ++i)
            if (p.row_times[i].hour_of_day == 8)
                CHECK(p.predictions[i] == met.at(p.row_times[i].shifted(-1)).ghi);
    }
    SUBCASE("identity channel gives zero NRMSE") {
        auto id_cfg = cfg;
        id_cfg.channel_biases[0] = {Channel::M1, 1.0, 0.0, 0.0, 0};
        const auto si = generate_scenario(id_cfg);
        const auto dsi = daylight_filter(align(si.met, si.nwp, cfg.target, cfg.neighbors));
        const auto p = predict_baseline(dsi, BaselineSpec::raw_wrf(Channel::M1));
        CHECK(nrmse(p.predictions, p.truth) == 0.0);
    }
    SUBCASE("names") {
        CHECK(BaselineSpec::raw_wrf(Channel::M3).name() == "RawWrf_M3");
        CHECK(BaselineSpec::persistence(1).name() == "Persistence_1h");
    }
}
